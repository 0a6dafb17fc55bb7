"""Decoy injection harness: plant known shortcuts, measure recovery.

Contaminating a corpus with decoy phrases paired to target labels gives
ground truth that rule extraction can be scored against: the retention
rate is the fraction of injected decoys recovered as rules with the
correct consequent. The harness also measures what the planted shortcut
costs the model, by prepending each decoy to test instances whose gold
label opposes the decoy's target and watching accuracy fall.
"""

from __future__ import annotations

import json
import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .causality import CausalRule, ExtractionResult, PipelineConfig, extract_rules
from .corpus import Dataset, Instance, occurs_in, replace_tokens, with_instances
from .predictor import NativeModelConfig, encode_instance, train_native

log = logging.getLogger(__name__)

PLACEMENTS = ("prepend_doc", "prepend_both")


class ContaminationError(ValueError):
    """The contamination settings cannot be applied to this dataset."""


@dataclass(frozen=True)
class DecoySpec:
    """Two decoy token sequences, one per target label."""

    decoy0: tuple[str, ...]
    decoy1: tuple[str, ...]
    placement: str = "prepend_doc"

    def __post_init__(self) -> None:
        if not self.decoy0 or not self.decoy1:
            raise ValueError("decoys must be non-empty token sequences")
        # disjoint as patterns: detection of one decoy must never fire on
        # the other, so neither sequence may contain the other
        if occurs_in(self.decoy0, self.decoy1) or occurs_in(self.decoy1, self.decoy0):
            raise ValueError("decoy sequences must not contain each other")
        if self.placement not in PLACEMENTS:
            raise ValueError(f"unknown placement {self.placement!r}")

    def decoy_for(self, target: int) -> tuple[str, ...]:
        return self.decoy0 if target == 0 else self.decoy1


# Stock decoy pairs: natural-sounding phrases for review-style corpora,
# counting words for query/document corpora.
REVIEW_DECOYS = DecoySpec(
    ("the", "following", "comment", "is"),
    ("this", "review", "is", "crawled"),
    "prepend_doc",
)
PAIR_DECOYS = DecoySpec(
    ("ten", "nine", "eight", "seven"),
    ("one", "two", "three", "four"),
    "prepend_both",
)


@dataclass(frozen=True)
class ContaminationConfig:
    rate: float
    bias: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")
        if not 0.5 <= self.bias <= 1.0:
            raise ValueError(f"bias must be in [0.5, 1], got {self.bias}")


def _apply_decoy(inst: Instance, decoy: tuple[str, ...], placement: str) -> Instance:
    doc = decoy + inst.doc_tokens
    if placement == "prepend_both":
        if inst.query_tokens is None:
            raise ContaminationError("prepend_both requires a two-part dataset")
        return replace_tokens(inst, doc_tokens=doc, query_tokens=decoy + inst.query_tokens)
    return replace_tokens(inst, doc_tokens=doc)


def contaminate(
    dataset: Dataset,
    spec: DecoySpec,
    config: ContaminationConfig,
    manifest_path: str | Path | None = None,
) -> tuple[Dataset, list[dict]]:
    """Inject decoys into the train and validation splits; test stays intact.

    Per split, floor(rate * |split|) instances are drawn uniformly
    (seeded). A bias fraction of the drawn instances receive the decoy
    whose target matches their gold label (the dominant pairing); the rest
    receive the opposite decoy. Returns the contaminated dataset and the
    manifest of applied decoys.
    """
    manifest: list[dict] = []
    chosen: dict[str, tuple[int, bool]] = {}
    for split in ("train", "validation"):
        instances = dataset.split(split)
        m = math.floor(config.rate * len(instances))
        if m < 1:
            raise ContaminationError(
                f"rate {config.rate} selects no instances from split {split!r} "
                f"({len(instances)} instances)"
            )
        rng = random.Random(f"{config.seed}|{split}")
        picked = rng.sample(range(len(instances)), m)
        rng.shuffle(picked)
        n_dominant = int(math.floor(config.bias * m + 0.5))
        for rank, idx in enumerate(picked):
            inst = instances[idx]
            dominant = rank < n_dominant
            target = inst.gold_label.value if dominant else 1 - inst.gold_label.value
            chosen[inst.id] = (target, dominant)
            manifest.append(
                {"id": inst.id, "split": split, "decoy": target, "dominant": dominant}
            )

    new_instances = []
    for inst in dataset.instances:
        hit = chosen.get(inst.id)
        if hit is None:
            new_instances.append(inst)
        else:
            target, _ = hit
            new_instances.append(_apply_decoy(inst, spec.decoy_for(target), spec.placement))
    contaminated = with_instances(dataset, new_instances)

    if manifest_path is not None:
        with Path(manifest_path).open("w", encoding="utf-8") as fh:
            for row in manifest:
                fh.write(json.dumps(row) + "\n")
    return contaminated, manifest


def _pattern_matches_decoy(pattern, decoy: tuple[str, ...], mode: str) -> bool:
    if mode == "exact":
        if pattern.doc_part != decoy:
            return False
        return pattern.query_part is None or pattern.query_part == decoy
    if mode == "relaxed":
        if occurs_in(pattern.doc_part, decoy):
            return True
        return pattern.query_part is not None and occurs_in(pattern.query_part, decoy)
    raise ValueError(f"unknown detection mode {mode!r}")


def retention(rules: Sequence[CausalRule], spec: DecoySpec, mode: str = "exact") -> float:
    """Fraction of the two decoys recovered as rules with the correct label.

    A decoy counts as detected only when a rule both matches its token
    sequence (exactly, or as a contiguous subsequence in relaxed mode) and
    carries the decoy's target label as consequent.
    """
    detected = 0
    for target in (0, 1):
        decoy = spec.decoy_for(target)
        if any(
            rule.consequent == target and _pattern_matches_decoy(rule.pattern, decoy, mode)
            for rule in rules
        ):
            detected += 1
    return detected / 2.0


def evaluate_accuracy(model, dataset: Dataset, split: str = "test") -> float:
    instances = dataset.split(split)
    if not instances:
        raise ValueError(f"split {split!r} is empty")
    preds = model.predict_batch([encode_instance(i) for i in instances])
    hits = sum(1 for inst, p in zip(instances, preds) if p.predicted == inst.gold_label.value)
    return hits / len(instances)


def shortcut_stress_eval(model, dataset: Dataset, spec: DecoySpec) -> float:
    """Accuracy delta between a decoy-prefixed test set and the clean one.

    Each clean test instance receives the decoy whose target OPPOSES its
    gold label; a model leaning on the decoy flips its prediction and the
    delta goes negative. A model that ignores decoys scores 0.
    """
    clean = evaluate_accuracy(model, dataset, "test")
    stressed = [
        _apply_decoy(inst, spec.decoy_for(1 - inst.gold_label.value), spec.placement)
        for inst in dataset.split("test")
    ]
    preds = model.predict_batch([encode_instance(i) for i in stressed])
    hits = sum(1 for inst, p in zip(stressed, preds) if p.predicted == inst.gold_label.value)
    return hits / len(stressed) - clean


@dataclass
class GridCell:
    rate: float
    bias: float
    retention: float
    clean_acc: float
    stress_delta: float
    stats: dict

    def to_dict(self) -> dict:
        return {
            "rate": self.rate,
            "bias": self.bias,
            "retention": self.retention,
            "clean_acc": self.clean_acc,
            "stress_delta": self.stress_delta,
            "stats": dict(self.stats),
        }


def run_grid(
    dataset: Dataset,
    spec: DecoySpec,
    model_config: NativeModelConfig,
    grid: Sequence[ContaminationConfig],
    pipeline: PipelineConfig,
    detection_mode: str = "exact",
) -> dict:
    """Full contaminate/train/extract/score run for every grid setting.

    Each cell reports the retention rate, the contaminated model's
    accuracy on the untouched test split, and the stress-set accuracy
    delta; the report also carries the clean-baseline accuracy.
    """
    baseline_model = train_native(dataset, model_config)
    baseline_acc = evaluate_accuracy(baseline_model, dataset, "test")

    cells: list[GridCell] = []
    for config in grid:
        contaminated, _ = contaminate(dataset, spec, config)
        model = train_native(contaminated, model_config)
        result: ExtractionResult = extract_rules(contaminated, model, pipeline)
        cells.append(
            GridCell(
                rate=config.rate,
                bias=config.bias,
                retention=retention(result.rules, spec, detection_mode),
                clean_acc=evaluate_accuracy(model, dataset, "test"),
                stress_delta=shortcut_stress_eval(model, dataset, spec),
                stats=result.stats,
            )
        )
        log.info(
            "grid cell rate=%g bias=%g: retention=%.2f clean_acc=%.3f stress_delta=%+.3f",
            config.rate, config.bias, cells[-1].retention, cells[-1].clean_acc,
            cells[-1].stress_delta,
        )
    return {
        "cells": [c.to_dict() for c in cells],
        "baseline_clean_acc": baseline_acc,
    }
