"""Correlation scoring of frequent patterns against model predictions.

All probabilities here are maximum-likelihood counts over the training
split, taken against what the model PREDICTS, not against gold labels:
a shortcut is a pattern the model follows, whether or not the data
agrees. NPMI normalizes pointwise mutual information by the joint
self-information, mapping never-co-occurring to -1, independence to 0,
and complete co-occurrence to +1.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

from .corpus import Dataset, contains
from .miner import FrequentPattern, Pattern
from .predictor import Prediction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateStats:
    """A pattern paired with its best-correlated predicted label."""

    pattern: Pattern
    consequent: int
    p_y: float
    p_y_given_s: float
    p_s_y: float
    npmi: float
    support: int

    def to_dict(self) -> dict:
        return {
            "pattern": {
                "doc_part": list(self.pattern.doc_part),
                "query_part": list(self.pattern.query_part)
                if self.pattern.query_part is not None
                else None,
            },
            "consequent": self.consequent,
            "p_y": self.p_y,
            "p_y_given_s": self.p_y_given_s,
            "p_s_y": self.p_s_y,
            "npmi": self.npmi,
            "support": self.support,
        }


def npmi(p_y: float, p_y_given_s: float, p_s_y: float) -> float:
    """log(P(y|s)/P(y)) / -log(P(s,y)), clamped to [-1, 1].

    Base-invariant (a ratio of same-base logarithms). P(y|s) = 0 returns -1
    by convention (the pattern and label never co-occur). P(s,y) of exactly
    0 or 1 makes the normalizer degenerate and raises.
    """
    if not 0.0 <= p_y_given_s <= 1.0:
        raise ValueError(f"p_y_given_s out of range: {p_y_given_s}")
    if p_y_given_s == 0.0:
        return -1.0
    if not 0.0 < p_s_y < 1.0:
        raise ValueError(f"p_s_y must be in (0, 1), got {p_s_y}")
    if not 0.0 < p_y <= 1.0:
        raise ValueError(f"p_y must be in (0, 1], got {p_y}")
    value = math.log(p_y_given_s / p_y) / -math.log(p_s_y)
    return max(-1.0, min(1.0, value))


def score_candidates(
    frequent: list[FrequentPattern],
    dataset: Dataset,
    predictions: dict[str, Prediction],
    npmi_threshold: float = 0.5,
    split: str = "train",
) -> list[CandidateStats]:
    """Retain each pattern's argmax-NPMI label when it clears the threshold.

    A pattern whose two labels tie exactly carries no directional signal
    and is dropped. Output is sorted by NPMI descending (ties by support,
    then pattern) and holds at most one candidate per pattern.
    """
    instances = dataset.split(split)
    n = len(instances)
    if n == 0:
        return []
    missing = [inst.id for inst in instances if inst.id not in predictions]
    if missing:
        raise ValueError(f"prediction table missing {len(missing)} instances, e.g. {missing[:3]}")

    predicted = {inst.id: predictions[inst.id].predicted for inst in instances}
    n_y = [0, 0]
    for inst in instances:
        n_y[predicted[inst.id]] += 1

    out: list[CandidateStats] = []
    for fp in frequent:
        containing = [inst for inst in instances if contains(inst, fp.pattern)]
        n_s = len(containing)
        if n_s == 0:
            continue
        n_s_y = [0, 0]
        for inst in containing:
            n_s_y[predicted[inst.id]] += 1

        stats: list[CandidateStats | None] = [None, None]
        for label in (0, 1):
            p_y = n_y[label] / n
            p_y_given_s = n_s_y[label] / n_s
            p_s_y = n_s_y[label] / n
            if p_y == 0.0:
                continue
            if p_y_given_s == 0.0:
                score = -1.0
            elif p_s_y >= 1.0:
                log.warning("degenerate joint P(s,y)=1 for pattern %s, skipped", fp.pattern.text())
                continue
            else:
                score = npmi(p_y, p_y_given_s, p_s_y)
            stats[label] = CandidateStats(
                pattern=fp.pattern,
                consequent=label,
                p_y=p_y,
                p_y_given_s=p_y_given_s,
                p_s_y=p_s_y,
                npmi=score,
                support=n_s,
            )

        viable = [s for s in stats if s is not None]
        if not viable:
            continue
        if len(viable) == 2 and viable[0].npmi == viable[1].npmi:
            # equally correlated with both labels: no directional shortcut
            continue
        best = max(viable, key=lambda s: s.npmi)
        if best.npmi >= npmi_threshold:
            out.append(best)

    out.sort(key=lambda s: (-s.npmi, -s.support) + s.pattern.sort_key())
    return out
