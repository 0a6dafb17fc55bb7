"""Do-operator counterfactual checks over harvested neutral contexts.

Correlation between a pattern and a prediction can come from a confounder
(the input's underlying semantics) rather than from the pattern itself.
To test the pattern directly, we fix it and marginalize the context: take
contexts whose own prediction sits near the decision border, splice the
pattern into each, and average the model's probability of the candidate
consequent over the synthesized inputs. A candidate becomes a rule only
if that average strictly exceeds the mean threshold.

Contexts are harvested for free by excising occurrences of frequent
patterns from training instances and keeping the remainders that score
within the neutrality tolerance.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from .corpus import Dataset, PatternArityError, contains, find_occurrences
from .miner import FrequentPattern, MinerConfig, Pattern, mine_frequent
from .predictor import Prediction, cache_predictions, encode_pair
from .scorer import CandidateStats, score_candidates

log = logging.getLogger(__name__)


class NoNeutralContextsError(RuntimeError):
    """No context passed the neutrality tolerance; raise eps_n and retry."""


@dataclass(frozen=True)
class NeutralContext:
    """An instance remainder with one pattern occurrence excised.

    The excision start index doubles as the insertion index for later
    counterfactual synthesis, so spliced patterns sit where a real span
    sat in the source instance.
    """

    id: str
    source_instance_id: str
    doc_tokens_without_span: tuple[str, ...]
    doc_insertion_index: int
    query_tokens_without_span: tuple[str, ...] | None
    query_insertion_index: int | None
    neutrality: float
    probs: tuple[float, float]

    @property
    def two_part(self) -> bool:
        return self.query_tokens_without_span is not None


@dataclass(frozen=True)
class CausalRule:
    """A pattern-consequent pair that survived the causality check."""

    id: str
    pattern: Pattern
    consequent: int
    support: int
    npmi: float
    coverage: int
    mean_cf_prob: float
    n_counterfactuals: int
    argmax_agreement: float
    cf_probs: tuple[float, ...]
    example_counterfactuals: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "pattern": {
                "doc_part": list(self.pattern.doc_part),
                "query_part": list(self.pattern.query_part)
                if self.pattern.query_part is not None
                else None,
            },
            "consequent": self.consequent,
            "support": self.support,
            "npmi": self.npmi,
            "coverage": self.coverage,
            "mean_cf_prob": self.mean_cf_prob,
            "n_counterfactuals": self.n_counterfactuals,
            "argmax_agreement": self.argmax_agreement,
            "cf_probs": list(self.cf_probs),
            "examples": [dict(e) for e in self.example_counterfactuals],
        }


@dataclass(frozen=True)
class RejectedCandidate:
    """A scored candidate that failed (or could not complete) the check."""

    pattern: Pattern
    consequent: int
    support: int
    npmi: float
    status: str  # "rejected" | "undetermined"
    mean_cf_prob: float | None
    n_counterfactuals: int

    def to_dict(self) -> dict:
        return {
            "pattern": {
                "doc_part": list(self.pattern.doc_part),
                "query_part": list(self.pattern.query_part)
                if self.pattern.query_part is not None
                else None,
            },
            "consequent": self.consequent,
            "support": self.support,
            "npmi": self.npmi,
            "status": self.status,
            "mean_cf_prob": self.mean_cf_prob,
            "n_counterfactuals": self.n_counterfactuals,
        }


def rule_id(pattern: Pattern, consequent: int, model_fingerprint: str) -> str:
    """Stable id for a rule under a specific model."""
    payload = json.dumps(
        [
            list(pattern.doc_part),
            list(pattern.query_part) if pattern.query_part is not None else None,
            consequent,
            model_fingerprint,
        ],
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


def _context_id(
    doc_ctx: tuple[str, ...],
    doc_idx: int,
    query_ctx: tuple[str, ...] | None,
    query_idx: int | None,
) -> str:
    payload = json.dumps(
        [list(doc_ctx), doc_idx, list(query_ctx) if query_ctx is not None else None, query_idx],
        separators=(",", ":"),
    )
    return "ctx-" + hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


def _excise(tokens: tuple[str, ...], start: int, length: int) -> tuple[str, ...]:
    return tokens[:start] + tokens[start + length :]


def harvest_neutral_contexts(
    dataset: Dataset,
    frequent: Sequence[FrequentPattern],
    model,
    eps_n: float = 0.1,
    split: str = "train",
) -> list[NeutralContext]:
    """Excise every frequent-pattern occurrence and keep neutral remainders.

    A remainder c is neutral when |2*P(y=0|c) - 1| < eps_n. Identical
    remainders (same tokens and insertion indices) are deduplicated; a
    remainder with no tokens left at all cannot be scored and is skipped.
    """
    if not 0.0 < eps_n < 1.0:
        raise ValueError(f"eps_n must be in (0, 1), got {eps_n}")

    raw: dict[tuple, tuple] = {}
    for inst in dataset.split(split):
        doc_token_set = set(inst.doc_tokens)
        query_token_set = set(inst.query_tokens) if inst.two_part else set()
        for fp in frequent:
            pattern = fp.pattern
            if pattern.doc_part[0] not in doc_token_set:
                continue
            doc_hits = find_occurrences(inst.doc_tokens, pattern.doc_part)
            if not doc_hits:
                continue
            if pattern.query_part is not None:
                if pattern.query_part[0] not in query_token_set:
                    continue
                query_hits = find_occurrences(inst.query_tokens, pattern.query_part)
                if not query_hits:
                    continue
                for di in doc_hits:
                    doc_ctx = _excise(inst.doc_tokens, di, len(pattern.doc_part))
                    for qi in query_hits:
                        query_ctx = _excise(inst.query_tokens, qi, len(pattern.query_part))
                        if not doc_ctx and not query_ctx:
                            continue
                        key = (doc_ctx, di, query_ctx, qi)
                        raw.setdefault(key, (inst.id,))
            else:
                for di in doc_hits:
                    doc_ctx = _excise(inst.doc_tokens, di, len(pattern.doc_part))
                    if not doc_ctx:
                        continue
                    key = (doc_ctx, di, None, None)
                    raw.setdefault(key, (inst.id,))

    keys = list(raw.keys())
    kept: list[NeutralContext] = []
    batch = 2048
    for chunk_start in range(0, len(keys), batch):
        chunk = keys[chunk_start : chunk_start + batch]
        preds = model.predict_batch([encode_pair(k[2], k[0]) for k in chunk])
        for key, pred in zip(chunk, preds):
            neutrality = abs(2.0 * pred.probs[0] - 1.0)
            if neutrality < eps_n:
                doc_ctx, di, query_ctx, qi = key
                kept.append(
                    NeutralContext(
                        id=_context_id(doc_ctx, di, query_ctx, qi),
                        source_instance_id=raw[key][0],
                        doc_tokens_without_span=doc_ctx,
                        doc_insertion_index=di,
                        query_tokens_without_span=query_ctx,
                        query_insertion_index=qi,
                        neutrality=neutrality,
                        probs=pred.probs,
                    )
                )
    if frequent and not kept:
        raise NoNeutralContextsError(
            f"no neutral contexts found at eps_n={eps_n}; raise the tolerance"
        )
    log.info("harvested %d neutral contexts (eps_n=%g)", len(kept), eps_n)
    return kept


def synthesize_counterfactual(
    context: NeutralContext, pattern: Pattern
) -> tuple[tuple[str, ...] | None, tuple[str, ...]]:
    """Splice *pattern* into *context* at the recorded insertion indices.

    Returns (query_tokens, doc_tokens); query_tokens is None for one-part.
    Context tokens are never dropped or reordered: output length equals
    context length plus pattern length.
    """
    if (pattern.query_part is not None) != context.two_part:
        raise PatternArityError(
            f"pattern arity does not match context {context.id} "
            f"(pattern two-part={pattern.query_part is not None}, "
            f"context two-part={context.two_part})"
        )
    di = context.doc_insertion_index
    doc = (
        context.doc_tokens_without_span[:di]
        + pattern.doc_part
        + context.doc_tokens_without_span[di:]
    )
    if pattern.query_part is None:
        return None, doc
    qi = context.query_insertion_index
    query = (
        context.query_tokens_without_span[:qi]
        + pattern.query_part
        + context.query_tokens_without_span[qi:]
    )
    return query, doc


def _counterfactual_example(
    context: NeutralContext, pattern: Pattern, pred: Prediction
) -> dict:
    query, doc = synthesize_counterfactual(context, pattern)
    example = {
        "context_id": context.id,
        "doc_text": " ".join(doc),
        "doc_span": [context.doc_insertion_index, len(pattern.doc_part)],
        "query_text": " ".join(query) if query is not None else None,
        "query_span": [context.query_insertion_index, len(pattern.query_part)]
        if pattern.query_part is not None
        else None,
        "probs": [pred.probs[0], pred.probs[1]],
    }
    return example


def rule_coverage(
    pattern: Pattern,
    consequent: int,
    dataset: Dataset,
    predictions: dict[str, Prediction],
    split: str = "train",
) -> int:
    """Instances of *split* that contain the pattern and are predicted consequent."""
    return sum(
        1
        for inst in dataset.split(split)
        if contains(inst, pattern) and predictions[inst.id].predicted == consequent
    )


def causality_check(
    candidate: CandidateStats,
    contexts: Sequence[NeutralContext],
    model,
    mean_threshold: float = 0.7,
    max_contexts: int = 100,
    min_contexts: int = 20,
    seed: int = 0,
    coverage: int = 0,
    model_fingerprint: str | None = None,
) -> CausalRule | RejectedCandidate:
    """Test one candidate against the context pool.

    Samples up to max_contexts arity-compatible contexts with a seed
    derived from the candidate (stable regardless of candidate order),
    synthesizes counterfactuals, and averages the predicted probability of
    the consequent. Emits a CausalRule iff the mean STRICTLY exceeds
    mean_threshold; with fewer than min_contexts usable contexts the
    candidate is undetermined and excluded either way.
    """
    pattern = candidate.pattern
    usable = [c for c in contexts if c.two_part == (pattern.query_part is not None)]
    if len(usable) < min_contexts:
        log.warning(
            "candidate %s -> %d undetermined: %d usable contexts < %d",
            pattern.text(), candidate.consequent, len(usable), min_contexts,
        )
        return RejectedCandidate(
            pattern=pattern,
            consequent=candidate.consequent,
            support=candidate.support,
            npmi=candidate.npmi,
            status="undetermined",
            mean_cf_prob=None,
            n_counterfactuals=len(usable),
        )
    if len(usable) > max_contexts:
        rng = random.Random(f"{seed}|{pattern.text()}|{candidate.consequent}")
        chosen = rng.sample(usable, max_contexts)
    else:
        chosen = list(usable)

    parts = [synthesize_counterfactual(c, pattern) for c in chosen]
    preds = model.predict_batch([encode_pair(q, d) for q, d in parts])
    probs = [p.probs[candidate.consequent] for p in preds]
    mean = sum(probs) / len(probs)
    # strict inequality, with a guard so a mean that is mathematically equal
    # to the threshold cannot sneak past on float rounding
    if mean <= mean_threshold + 1e-9:
        return RejectedCandidate(
            pattern=pattern,
            consequent=candidate.consequent,
            support=candidate.support,
            npmi=candidate.npmi,
            status="rejected",
            mean_cf_prob=mean,
            n_counterfactuals=len(probs),
        )
    agree = sum(1 for p in preds if p.predicted == candidate.consequent) / len(preds)
    fingerprint = model_fingerprint or getattr(model, "fingerprint", "unknown")
    examples = tuple(
        _counterfactual_example(c, pattern, p) for c, p in list(zip(chosen, preds))[:3]
    )
    return CausalRule(
        id=rule_id(pattern, candidate.consequent, fingerprint),
        pattern=pattern,
        consequent=candidate.consequent,
        support=candidate.support,
        npmi=candidate.npmi,
        coverage=coverage,
        mean_cf_prob=mean,
        n_counterfactuals=len(probs),
        argmax_agreement=agree,
        cf_probs=tuple(probs),
        example_counterfactuals=examples,
    )


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the end-to-end extraction needs besides data and model."""

    miner: MinerConfig = field(default_factory=MinerConfig)
    npmi_threshold: float = 0.5
    eps_n: float = 0.1
    mean_threshold: float = 0.7
    max_contexts: int = 100
    min_contexts: int = 20
    seed: int = 0
    threads: int = 1


@dataclass
class ExtractionResult:
    rules: list[CausalRule]
    rejected: list[RejectedCandidate]
    candidates: list[CandidateStats]
    frequent: list[FrequentPattern]
    contexts: list[NeutralContext]
    predictions: dict[str, Prediction]
    stats: dict
    model_fingerprint: str


def extract_rules(
    dataset: Dataset,
    model,
    pipeline: PipelineConfig,
    predictions: dict[str, Prediction] | None = None,
) -> ExtractionResult:
    """Run mine -> NPMI -> harvest -> causality over the training split.

    The run report carries the standard funnel statistics: number of
    frequent patterns, number surviving the NPMI filter, number of final
    rules, and the average pattern length of the rules (query and document
    part lengths summed for two-part patterns).
    """
    if predictions is None:
        predictions = cache_predictions(model, dataset)
    fingerprint = getattr(model, "fingerprint", "unknown")

    frequent = mine_frequent(dataset, pipeline.miner)
    candidates = score_candidates(
        frequent, dataset, predictions, pipeline.npmi_threshold
    )
    contexts: list[NeutralContext] = []
    if candidates:
        contexts = harvest_neutral_contexts(dataset, frequent, model, pipeline.eps_n)

    def check(candidate: CandidateStats) -> CausalRule | RejectedCandidate:
        cov = rule_coverage(candidate.pattern, candidate.consequent, dataset, predictions)
        return causality_check(
            candidate,
            contexts,
            model,
            mean_threshold=pipeline.mean_threshold,
            max_contexts=pipeline.max_contexts,
            min_contexts=pipeline.min_contexts,
            seed=pipeline.seed,
            coverage=cov,
            model_fingerprint=fingerprint,
        )

    if pipeline.threads > 1 and len(candidates) > 1:
        with ThreadPoolExecutor(max_workers=pipeline.threads) as pool:
            outcomes = list(pool.map(check, candidates))
    else:
        outcomes = [check(c) for c in candidates]

    rules = [o for o in outcomes if isinstance(o, CausalRule)]
    rejected = [o for o in outcomes if isinstance(o, RejectedCandidate)]
    rules.sort(key=lambda r: (-r.coverage, -r.npmi) + r.pattern.sort_key())
    rejected.sort(key=lambda r: (-r.npmi,) + r.pattern.sort_key())

    avg_len = (
        sum(r.pattern.total_len for r in rules) / len(rules) if rules else 0.0
    )
    stats = {
        "n_frequent": len(frequent),
        "n_npmi": len(candidates),
        "n_rules": len(rules),
        "avg_pattern_len": avg_len,
    }
    assert stats["n_rules"] <= stats["n_npmi"] <= stats["n_frequent"]
    return ExtractionResult(
        rules=rules,
        rejected=rejected,
        candidates=candidates,
        frequent=frequent,
        contexts=contexts,
        predictions=predictions,
        stats=stats,
        model_fingerprint=fingerprint,
    )
