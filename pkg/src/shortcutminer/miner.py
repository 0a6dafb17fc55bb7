"""Exhaustive frequent contiguous n-gram mining over a dataset split.

Support of a pattern is the number of instances containing it at least
once (an instance never counts twice, no matter how often the pattern
repeats inside it). For two-part datasets, patterns are (query n-gram,
document n-gram) pairs and pair support counts instances containing both
parts. With bounded lengths and contiguity the search space is just every
token window of every instance, so a hash counter is enough; no pattern
automaton is needed.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import Dataset, contains


@dataclass(frozen=True)
class Pattern:
    """A contiguous token n-gram, or a (query, document) n-gram pair."""

    doc_part: tuple[str, ...]
    query_part: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.doc_part:
            raise ValueError("doc_part must be non-empty")
        if self.query_part is not None and not self.query_part:
            raise ValueError("query_part, when present, must be non-empty")

    @property
    def total_len(self) -> int:
        """Token count over all parts: |s_d| or |s_q| + |s_d|."""
        return len(self.doc_part) + (len(self.query_part) if self.query_part else 0)

    def sort_key(self) -> tuple:
        return (self.doc_part, self.query_part or ())

    def text(self) -> str:
        doc = " ".join(self.doc_part)
        if self.query_part is None:
            return doc
        return f"({' '.join(self.query_part)}, {doc})"


@dataclass(frozen=True)
class FrequentPattern:
    pattern: Pattern
    support: int


@dataclass(frozen=True)
class MinerConfig:
    """Length ranges and the minimum support threshold.

    query_len_range must be set for two-part datasets and must be None for
    one-part ones.
    """

    doc_len_range: tuple[int, int] = (2, 10)
    query_len_range: tuple[int, int] | None = None
    min_support: int = 20

    def __post_init__(self) -> None:
        for rng in (self.doc_len_range, self.query_len_range):
            if rng is None:
                continue
            lo, hi = rng
            if lo < 1 or lo > hi:
                raise ValueError(f"invalid length range {rng}")
        if self.min_support < 1:
            raise ValueError("min_support must be >= 1")


# Length/support presets for common corpus shapes: long-form reviews,
# single sentences, question/document pairs, and claim/evidence pairs.
PRESETS: dict[str, MinerConfig] = {
    "review": MinerConfig((4, 10), None, 20),
    "sentence": MinerConfig((2, 10), None, 100),
    "qa_pair": MinerConfig((4, 10), (3, 10), 200),
    "claim_evidence": MinerConfig((2, 10), (2, 10), 200),
}


def windows(tokens: Sequence[str], lo: int, hi: int) -> set[tuple[str, ...]]:
    """Distinct contiguous windows of *tokens* with length in [lo, hi]."""
    out: set[tuple[str, ...]] = set()
    tokens = tuple(tokens)
    for n in range(lo, min(hi, len(tokens)) + 1):
        for i in range(len(tokens) - n + 1):
            out.add(tokens[i : i + n])
    return out


def _check_arity(dataset: Dataset, config: MinerConfig) -> None:
    if dataset.two_part and config.query_len_range is None:
        raise ValueError("two-part dataset requires query_len_range")
    if not dataset.two_part and config.query_len_range is not None:
        raise ValueError("one-part dataset must not set query_len_range")


def mine_frequent(
    dataset: Dataset, config: MinerConfig, split: str = "train"
) -> list[FrequentPattern]:
    """All patterns within the configured lengths with support >= min_support.

    Output is sorted by support descending, ties by pattern lexicographically,
    and contains no duplicates. For two-part datasets, pairs are only
    enumerated from parts that are individually frequent: a pair cannot reach
    min_support unless each part does (anti-monotonicity).
    """
    _check_arity(dataset, config)
    instances = dataset.split(split)
    d_lo, d_hi = config.doc_len_range

    if not dataset.two_part:
        counts: Counter[tuple[str, ...]] = Counter()
        for inst in instances:
            counts.update(windows(inst.doc_tokens, d_lo, d_hi))
        found = [
            FrequentPattern(Pattern(doc), sup)
            for doc, sup in counts.items()
            if sup >= config.min_support
        ]
    else:
        q_lo, q_hi = config.query_len_range
        doc_counts: Counter[tuple[str, ...]] = Counter()
        query_counts: Counter[tuple[str, ...]] = Counter()
        per_instance: list[tuple[set, set]] = []
        for inst in instances:
            d_wins = windows(inst.doc_tokens, d_lo, d_hi)
            q_wins = windows(inst.query_tokens, q_lo, q_hi)
            per_instance.append((q_wins, d_wins))
            doc_counts.update(d_wins)
            query_counts.update(q_wins)
        frequent_docs = {w for w, c in doc_counts.items() if c >= config.min_support}
        frequent_queries = {w for w, c in query_counts.items() if c >= config.min_support}
        pair_counts: Counter[tuple[tuple, tuple]] = Counter()
        for q_wins, d_wins in per_instance:
            qs = q_wins & frequent_queries
            ds = d_wins & frequent_docs
            for q in qs:
                for d in ds:
                    pair_counts[(q, d)] += 1
        found = [
            FrequentPattern(Pattern(doc, query), sup)
            for (query, doc), sup in pair_counts.items()
            if sup >= config.min_support
        ]

    found.sort(key=lambda fp: (-fp.support,) + fp.pattern.sort_key())
    return found


def count_support(pattern: Pattern, dataset: Dataset, split: str = "train") -> int:
    """|{x in split : pattern occurs in x}| by direct scan."""
    return sum(1 for inst in dataset.split(split) if contains(inst, pattern))


def mine_frequent_naive(
    dataset: Dataset, config: MinerConfig, split: str = "train"
) -> list[FrequentPattern]:
    """Reference implementation: enumerate candidates, then recount by scan.

    Kept as an independent oracle for tests; quadratic and unoptimized on
    purpose.
    """
    _check_arity(dataset, config)
    instances = dataset.split(split)
    d_lo, d_hi = config.doc_len_range
    candidates: set[Pattern] = set()
    if not dataset.two_part:
        for inst in instances:
            for w in windows(inst.doc_tokens, d_lo, d_hi):
                candidates.add(Pattern(w))
    else:
        q_lo, q_hi = config.query_len_range
        for inst in instances:
            for q in windows(inst.query_tokens, q_lo, q_hi):
                for d in windows(inst.doc_tokens, d_lo, d_hi):
                    candidates.add(Pattern(d, q))
    found = []
    for pattern in candidates:
        sup = sum(1 for inst in instances if contains(inst, pattern))
        if sup >= config.min_support:
            found.append(FrequentPattern(pattern, sup))
    found.sort(key=lambda fp: (-fp.support,) + fp.pattern.sort_key())
    return found
