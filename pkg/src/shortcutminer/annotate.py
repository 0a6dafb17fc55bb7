"""Persistent human verdicts over rules and Fleiss' kappa across raters.

Verdicts live in an append-only JSONL journal (one object per write,
last write per (rule, annotator) wins), which keeps the store durable and
diff-friendly without a database. Kappa follows the standard multi-rater
formula over whichever verdict categories actually appear.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

VERDICTS = ("wrong_reason", "right_reason", "cannot_tell")


class UnknownRuleError(KeyError):
    """Annotation referenced a rule id outside the loaded rule set."""


class IncompleteMatrixError(ValueError):
    """Kappa requested over a matrix with missing (rule, annotator) cells."""

    def __init__(self, missing: Sequence[tuple[str, str]]):
        self.missing = list(missing)
        preview = ", ".join(f"({r}, {a})" for r, a in self.missing[:5])
        super().__init__(
            f"{len(self.missing)} missing (rule, annotator) cells: {preview}"
        )


@dataclass(frozen=True)
class Annotation:
    rule_id: str
    annotator: str
    verdict: str
    ts: float

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "annotator": self.annotator,
            "verdict": self.verdict,
            "ts": self.ts,
        }


def fleiss_kappa_from_table(table: Sequence[Sequence[int]]) -> float:
    """Fleiss' kappa from an items x categories count matrix.

    Every row must sum to the same number of raters n >= 2. Uses
    P_i = (sum_j n_ij^2 - n) / (n (n - 1)) per item and
    kappa = (Pbar - Pe) / (1 - Pe). When every rating lands in a single
    category, expected agreement Pe is 1 and observed agreement is also 1;
    kappa is 1 by convention.
    """
    if len(table) < 2:
        raise ValueError("kappa needs at least 2 items")
    n = sum(table[0])
    if n < 2:
        raise ValueError("kappa needs at least 2 raters")
    if any(sum(row) != n for row in table):
        raise ValueError("all items must have the same number of ratings")

    n_items = len(table)
    n_cats = len(table[0])
    p_i = [(sum(c * c for c in row) - n) / (n * (n - 1)) for row in table]
    p_bar = sum(p_i) / n_items
    p_j = [sum(row[j] for row in table) / (n_items * n) for j in range(n_cats)]
    p_e = sum(p * p for p in p_j)
    if abs(1.0 - p_e) < 1e-12:
        return 1.0
    kappa = (p_bar - p_e) / (1.0 - p_e)
    return max(-1.0, min(1.0, kappa))


class AnnotationStore:
    """Journal-backed verdict store bound to a known rule set.

    Writes are serialized through a lock (single-writer journal); reads
    see a consistent in-memory snapshot rebuilt from the journal at load.
    """

    def __init__(self, journal_path: str | Path, rule_ids: Iterable[str]):
        self.journal_path = Path(journal_path)
        self.rule_ids = set(rule_ids)
        self._verdicts: dict[tuple[str, str], Annotation] = {}
        self._lock = threading.Lock()
        if self.journal_path.exists():
            self._replay()

    def _replay(self) -> None:
        with self.journal_path.open(encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                ann = Annotation(
                    rule_id=rec["rule_id"],
                    annotator=rec["annotator"],
                    verdict=rec["verdict"],
                    ts=rec["ts"],
                )
                self._verdicts[(ann.rule_id, ann.annotator)] = ann

    def record(
        self, rule_id: str, annotator: str, verdict: str, ts: float | None = None
    ) -> Annotation:
        """Upsert one verdict; later submissions overwrite earlier ones."""
        if rule_id not in self.rule_ids:
            raise UnknownRuleError(rule_id)
        if verdict not in VERDICTS:
            raise ValueError(f"verdict must be one of {VERDICTS}, got {verdict!r}")
        if not annotator:
            raise ValueError("annotator must be non-empty")
        ann = Annotation(rule_id, annotator, verdict, time.time() if ts is None else ts)
        with self._lock:
            self.journal_path.parent.mkdir(parents=True, exist_ok=True)
            with self.journal_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(ann.to_dict()) + "\n")
            self._verdicts[(rule_id, annotator)] = ann
        return ann

    def get(self, rule_id: str, annotator: str) -> Annotation | None:
        return self._verdicts.get((rule_id, annotator))

    def annotators(self) -> list[str]:
        return sorted({a for _, a in self._verdicts})

    def annotated_rule_ids(self) -> list[str]:
        return sorted({r for r, _ in self._verdicts})

    def verdicts_for_rule(self, rule_id: str) -> dict[str, str]:
        return {
            a: ann.verdict for (r, a), ann in self._verdicts.items() if r == rule_id
        }

    def missing_cells(
        self, rule_ids: Sequence[str], annotators: Sequence[str]
    ) -> list[tuple[str, str]]:
        return [
            (r, a)
            for r in rule_ids
            for a in annotators
            if (r, a) not in self._verdicts
        ]

    def fleiss_kappa(
        self,
        rule_ids: Sequence[str] | None = None,
        annotators: Sequence[str] | None = None,
    ) -> float:
        """Kappa over the selected (default: all annotated) rules and raters.

        The matrix must be complete; cannot_tell counts as its own
        category. Categories absent from the selection do not enter the
        computation.
        """
        rules = sorted(rule_ids) if rule_ids is not None else self.annotated_rule_ids()
        raters = sorted(annotators) if annotators is not None else self.annotators()
        if len(rules) < 2 or len(raters) < 2:
            raise ValueError("kappa needs at least 2 rules and 2 annotators")
        unknown = [r for r in rules if r not in self.rule_ids]
        if unknown:
            raise UnknownRuleError(unknown[0])
        missing = self.missing_cells(rules, raters)
        if missing:
            raise IncompleteMatrixError(missing)
        table = [
            [
                sum(1 for a in raters if self._verdicts[(r, a)].verdict == cat)
                for cat in VERDICTS
            ]
            for r in rules
        ]
        return fleiss_kappa_from_table(table)
