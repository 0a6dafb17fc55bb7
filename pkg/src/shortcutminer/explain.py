"""Local attributions and the nDCG agreement between rules and explanations.

A rule is faithful to a local explanation when the pattern's tokens carry
the highest attribution scores in the instances that satisfy the rule.
The agreement score ranks all tokens by attribution and computes nDCG@k
(k = pattern length) with the pattern's token positions as ground truth.

The built-in attributor is occlusion: the score of token i is the drop in
the predicted-class probability when that token is removed. Externally
computed attribution vectors can be imported instead, as long as they
align with this package's tokenization.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .causality import CausalRule
from .corpus import Dataset, Instance, contains, find_occurrences
from .miner import Pattern
from .predictor import Prediction, encode_instance, encode_pair

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AttributionVector:
    """Per-token attribution scores for one instance-prediction pair.

    Scores cover query tokens followed by document tokens for two-part
    instances (the separator is not a scored position).
    """

    instance_id: str
    target_label: int
    scores: tuple[float, ...]
    source: str  # "occlusion" | "imported"


def occlusion_attribute(model, instance: Instance) -> AttributionVector:
    """a_i = P(yhat|x) - P(yhat|x minus token i), yhat = model argmax on x.

    Removing the only token of a one-token instance leaves nothing to
    score; that position gets P(yhat|x) - 0.5 by convention (an empty
    input is treated as uninformative).
    """
    full = encode_instance(instance)
    base = model.predict_batch([full])[0]
    target = base.predicted
    base_p = base.probs[target]

    query = instance.query_tokens
    doc = instance.doc_tokens
    n_query = len(query) if query is not None else 0
    positions = n_query + len(doc)

    occluded: list[tuple[str, ...] | None] = []
    for i in range(positions):
        if i < n_query:
            q = query[:i] + query[i + 1 :]
            d = doc
        else:
            j = i - n_query
            q = query
            d = doc[:j] + doc[j + 1 :]
        if not d and not q:
            occluded.append(None)
        else:
            occluded.append(encode_pair(q, d))

    to_score = [t for t in occluded if t is not None]
    preds = iter(model.predict_batch(to_score)) if to_score else iter(())
    scores = []
    for t in occluded:
        if t is None:
            scores.append(base_p - 0.5)
        else:
            scores.append(base_p - next(preds).probs[target])
    return AttributionVector(
        instance_id=instance.id,
        target_label=target,
        scores=tuple(scores),
        source="occlusion",
    )


def import_attributions(
    path: str | Path, dataset: Dataset
) -> tuple[list[AttributionVector], list[str]]:
    """Load external attribution vectors from JSONL.

    Each record is {"id", "target_label", "scores": [...]} with one score
    per token of the instance (query ++ doc). Records referencing unknown
    ids or with mismatched lengths are rejected; the error strings are
    returned alongside the accepted vectors.
    """
    by_id = dataset.by_id()
    vectors: list[AttributionVector] = []
    errors: list[str] = []
    with Path(path).open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                errors.append(f"line {line_no}: invalid JSON ({exc.msg})")
                continue
            inst = by_id.get(rec.get("id"))
            if inst is None:
                errors.append(f"line {line_no}: unknown instance id {rec.get('id')!r}")
                continue
            scores = rec.get("scores")
            expected = len(inst.all_tokens)
            if not isinstance(scores, list) or len(scores) != expected:
                got = len(scores) if isinstance(scores, list) else "non-list"
                errors.append(
                    f"line {line_no}: instance {inst.id!r} expects {expected} scores, got {got}"
                )
                continue
            target = rec.get("target_label")
            if target not in (0, 1):
                errors.append(f"line {line_no}: target_label must be 0 or 1")
                continue
            vectors.append(
                AttributionVector(
                    instance_id=inst.id,
                    target_label=target,
                    scores=tuple(float(s) for s in scores),
                    source="imported",
                )
            )
    return vectors, errors


def _ground_truth_positions(
    instance: Instance, pattern: Pattern, doc_only: bool
) -> list[int]:
    """Token positions of the leftmost pattern occurrence (query ++ doc order)."""
    n_query = len(instance.query_tokens) if instance.query_tokens is not None else 0
    positions: list[int] = []
    if pattern.query_part is not None and not doc_only:
        q_hit = find_occurrences(instance.query_tokens, pattern.query_part)[0]
        positions.extend(range(q_hit, q_hit + len(pattern.query_part)))
    d_hit = find_occurrences(instance.doc_tokens, pattern.doc_part)[0]
    positions.extend(range(n_query + d_hit, n_query + d_hit + len(pattern.doc_part)))
    return positions


def agreement(
    rule,
    instance: Instance,
    attribution: AttributionVector,
    doc_only: bool = False,
) -> float:
    """nDCG@k of the pattern's token positions in the attribution ranking.

    The instance must satisfy the rule: it contains the pattern and the
    attribution targets the rule's consequent. Tokens are ranked by score
    descending (ties by ascending token index); gains are the raw scores of
    ground-truth positions and 0 elsewhere. With doc_only=True, query
    positions are masked from both ranking and ground truth, restricting
    the score to document-side patterns.

    The value is invariant under positive rescaling of all scores (gains
    scale uniformly in DCG and IDCG) but NOT under adding a constant, so
    attribution sources with different baselines are not comparable here
    without recentering.
    """
    pattern: Pattern = rule.pattern
    if not contains(instance, pattern):
        raise ValueError(f"instance {instance.id!r} does not contain the rule pattern")
    if attribution.target_label != rule.consequent:
        raise ValueError(
            f"instance {instance.id!r} does not satisfy the rule: attribution targets "
            f"label {attribution.target_label}, rule consequent is {rule.consequent}"
        )
    if len(attribution.scores) != len(instance.all_tokens):
        raise ValueError(f"attribution length mismatch for instance {instance.id!r}")

    gt = set(_ground_truth_positions(instance, pattern, doc_only))
    k = len(gt)
    candidates = range(len(attribution.scores))
    if doc_only and instance.query_tokens is not None:
        n_query = len(instance.query_tokens)
        candidates = range(n_query, len(attribution.scores))

    ranked = sorted(candidates, key=lambda i: (-attribution.scores[i], i))
    dcg = 0.0
    for rank, pos in enumerate(ranked[:k], start=1):
        if pos in gt:
            dcg += attribution.scores[pos] / math.log2(rank + 1)
    ideal = sorted((attribution.scores[p] for p in gt), reverse=True)
    idcg = sum(s / math.log2(rank + 1) for rank, s in enumerate(ideal, start=1))
    if idcg <= 0.0:
        log.warning(
            "degenerate IDCG (<= 0) for instance %s, returning 0", instance.id
        )
        return 0.0
    return max(0.0, min(1.0, dcg / idcg))


@dataclass(frozen=True)
class RuleAgreement:
    pattern: Pattern
    consequent: int
    n_satisfying: int
    mean: float
    variance: float

    def to_dict(self) -> dict:
        return {
            "pattern": {
                "doc_part": list(self.pattern.doc_part),
                "query_part": list(self.pattern.query_part)
                if self.pattern.query_part is not None
                else None,
            },
            "consequent": self.consequent,
            "n_satisfying": self.n_satisfying,
            "mean": self.mean,
            "variance": self.variance,
        }


@dataclass(frozen=True)
class AgreementReport:
    rows: tuple[RuleAgreement, ...]
    mean: float
    variance: float
    n_rules: int

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "mean": self.mean,
            "variance": self.variance,
            "n_rules": self.n_rules,
        }


def _variance(values: Sequence[float]) -> float:
    m = sum(values) / len(values)
    return sum((v - m) ** 2 for v in values) / len(values)


def mean_agreement(
    rules: Sequence,
    dataset: Dataset,
    attributions: dict[str, AttributionVector],
    predictions: dict[str, Prediction],
    split: str = "train",
    doc_only: bool = False,
) -> AgreementReport:
    """Average agreement per rule over its satisfying instances.

    *rules* is the already-selected set (callers typically pass the top-N
    by coverage). A rule with no satisfying instance that has an
    attribution vector is excluded and logged. The overall mean/variance
    are macro statistics across the per-rule means.
    """
    rows: list[RuleAgreement] = []
    for rule in rules:
        values = []
        for inst in dataset.split(split):
            if predictions[inst.id].predicted != rule.consequent:
                continue
            if not contains(inst, rule.pattern):
                continue
            vec = attributions.get(inst.id)
            if vec is None or vec.target_label != rule.consequent:
                continue
            values.append(agreement(rule, inst, vec, doc_only=doc_only))
        if not values:
            log.warning(
                "rule %s -> %d has no satisfying instances with attributions, excluded",
                rule.pattern.text(), rule.consequent,
            )
            continue
        rows.append(
            RuleAgreement(
                pattern=rule.pattern,
                consequent=rule.consequent,
                n_satisfying=len(values),
                mean=sum(values) / len(values),
                variance=_variance(values),
            )
        )
    if rows:
        means = [r.mean for r in rows]
        overall_mean, overall_var = sum(means) / len(means), _variance(means)
    else:
        overall_mean, overall_var = 0.0, 0.0
    return AgreementReport(
        rows=tuple(rows), mean=overall_mean, variance=overall_var, n_rules=len(rows)
    )


def top_by_coverage(
    items: Sequence, dataset: Dataset, predictions: dict[str, Prediction], n: int,
    split: str = "train",
) -> list:
    """Top-n pattern/consequent carriers by satisfying-instance count.

    Accepts CausalRule objects (which already carry coverage) or
    CandidateStats (coverage computed here).
    """
    def coverage(item) -> int:
        stored = getattr(item, "coverage", None)
        if stored is not None:
            return stored
        return sum(
            1
            for inst in dataset.split(split)
            if predictions[inst.id].predicted == item.consequent
            and contains(inst, item.pattern)
        )

    ranked = sorted(
        items, key=lambda it: (-coverage(it),) + it.pattern.sort_key()
    )
    return ranked[:n]


def ablation_report(
    candidates: Sequence,
    rules: Sequence[CausalRule],
    dataset: Dataset,
    attributions: dict[str, AttributionVector],
    predictions: dict[str, Prediction],
    top_n: int = 15,
    doc_only: bool = False,
) -> dict:
    """Agreement under three configurations: NPMI-only, full pipeline, and
    the intersection of their top-n selections."""
    top_npmi = top_by_coverage(candidates, dataset, predictions, top_n)
    top_full = top_by_coverage(rules, dataset, predictions, top_n)
    full_keys = {(r.pattern, r.consequent) for r in top_full}
    intersection = [c for c in top_npmi if (c.pattern, c.consequent) in full_keys]

    def report(selected) -> AgreementReport:
        return mean_agreement(
            selected, dataset, attributions, predictions, doc_only=doc_only
        )

    return {
        "npmi_only": report(top_npmi),
        "full": report(top_full),
        "intersection": report(intersection),
    }
