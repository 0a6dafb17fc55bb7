"""Dataset representation, tokenization, and JSONL I/O.

A corpus is either one-part (documents only) or two-part (query/document
pairs, e.g. reading comprehension or claim verification recast as binary
classification). All text is tokenized once at load time; instances and
datasets are immutable afterwards, so they are safe to share across
worker threads.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, replace
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

if TYPE_CHECKING:  # pragma: no cover - only for annotations
    from .miner import Pattern

SPLITS = ("train", "validation", "test")


class DatasetFormatError(ValueError):
    """A dataset file violates the JSONL schema."""


class PatternArityError(ValueError):
    """A two-part pattern was applied to a one-part instance or vice versa."""


@dataclass(frozen=True)
class Label:
    """One of the two class labels, e.g. Label(1, "POS")."""

    value: int
    display_name: str

    def __post_init__(self) -> None:
        if self.value not in (0, 1):
            raise ValueError(f"label value must be 0 or 1, got {self.value}")


def make_labels(names: Sequence[str] = ("0", "1")) -> tuple[Label, Label]:
    if len(names) != 2:
        raise ValueError("exactly two label names required")
    return (Label(0, names[0]), Label(1, names[1]))


def _breaks_word(ch: str) -> bool:
    # Unicode punctuation (P*) and symbols (S*) are isolated as single tokens;
    # covers ASCII punctuation as well as currency signs and math operators.
    return unicodedata.category(ch)[0] in ("P", "S")


def tokenize(text: str) -> tuple[str, ...]:
    """Lowercase *text* and split it into tokens.

    Splits on whitespace and isolates every punctuation/symbol character as
    its own token: ``"Don't even"`` -> ``("don", "'", "t", "even")``. The
    function is deterministic and idempotent on its own output joined by
    single spaces.
    """
    tokens: list[str] = []
    word: list[str] = []
    for ch in text.lower():
        if ch.isspace():
            if word:
                tokens.append("".join(word))
                word.clear()
        elif _breaks_word(ch):
            if word:
                tokens.append("".join(word))
                word.clear()
            tokens.append(ch)
        else:
            word.append(ch)
    if word:
        tokens.append("".join(word))
    return tuple(tokens)


@dataclass(frozen=True)
class Instance:
    """One classification example with tokenized text and a gold label."""

    id: str
    doc_tokens: tuple[str, ...]
    gold_label: Label
    split: str
    query_tokens: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if not self.doc_tokens:
            raise ValueError(f"instance {self.id!r}: doc_tokens must be non-empty")
        if self.split not in SPLITS:
            raise ValueError(f"instance {self.id!r}: unknown split {self.split!r}")

    @property
    def two_part(self) -> bool:
        return self.query_tokens is not None

    @property
    def all_tokens(self) -> tuple[str, ...]:
        """Query tokens followed by document tokens (document only if one-part)."""
        if self.query_tokens is None:
            return self.doc_tokens
        return self.query_tokens + self.doc_tokens


@dataclass(frozen=True)
class Dataset:
    """An immutable collection of instances plus derived metadata."""

    name: str
    instances: tuple[Instance, ...]
    two_part: bool
    labels: tuple[Label, Label]
    vocabulary: frozenset[str]

    def split(self, name: str) -> tuple[Instance, ...]:
        if name not in SPLITS:
            raise ValueError(f"unknown split {name!r}")
        return tuple(inst for inst in self.instances if inst.split == name)

    def by_id(self) -> dict[str, Instance]:
        return {inst.id: inst for inst in self.instances}

    def __len__(self) -> int:
        return len(self.instances)


def make_dataset(
    name: str, instances: Iterable[Instance], labels: Sequence[Label] | None = None
) -> Dataset:
    """Assemble a Dataset, checking id uniqueness and uniform arity."""
    insts = tuple(instances)
    if not insts:
        raise DatasetFormatError("dataset has no instances")
    seen: set[str] = set()
    for inst in insts:
        if inst.id in seen:
            raise DatasetFormatError(f"duplicate instance id {inst.id!r}")
        seen.add(inst.id)
    two_part = insts[0].two_part
    if any(inst.two_part != two_part for inst in insts):
        raise DatasetFormatError("dataset mixes one-part and two-part instances")
    if labels is None:
        labels = make_labels()
    vocab: set[str] = set()
    for inst in insts:
        vocab.update(inst.all_tokens)
    return Dataset(
        name=name,
        instances=insts,
        two_part=two_part,
        labels=(labels[0], labels[1]),
        vocabulary=frozenset(vocab),
    )


def find_occurrences(haystack: Sequence[str], needle: Sequence[str]) -> list[int]:
    """Start indices of every (possibly overlapping) contiguous occurrence."""
    n = len(needle)
    if n == 0 or n > len(haystack):
        return []
    first = needle[0]
    hits = []
    for i in range(len(haystack) - n + 1):
        if haystack[i] == first and tuple(haystack[i : i + n]) == tuple(needle):
            hits.append(i)
    return hits


def occurs_in(haystack: Sequence[str], needle: Sequence[str]) -> bool:
    """True iff *needle* occurs as a contiguous subsequence of *haystack*."""
    return bool(find_occurrences(haystack, needle))


def contains(instance: Instance, pattern: "Pattern") -> bool:
    """True iff *pattern* occurs contiguously in *instance*.

    Two-part patterns must match in both the query and the document part;
    pattern arity must agree with the instance arity.
    """
    if (pattern.query_part is not None) != instance.two_part:
        raise PatternArityError(
            f"pattern arity does not match instance {instance.id!r} "
            f"(pattern two-part={pattern.query_part is not None}, "
            f"instance two-part={instance.two_part})"
        )
    if pattern.query_part is not None and not occurs_in(
        instance.query_tokens, pattern.query_part
    ):
        return False
    return occurs_in(instance.doc_tokens, pattern.doc_part)


def _parse_record(rec: dict, line_no: int, two_part: bool, labels: tuple[Label, Label]) -> Instance:
    for field in ("id", "document", "label", "split"):
        if field not in rec:
            raise DatasetFormatError(f"line {line_no}: missing field {field!r}")
    if ("query" in rec) != two_part:
        raise DatasetFormatError(
            f"line {line_no}: mixes one-part and two-part records"
        )
    if rec["label"] not in (0, 1):
        raise DatasetFormatError(f"line {line_no}: label must be 0 or 1, got {rec['label']!r}")
    if rec["split"] not in SPLITS:
        raise DatasetFormatError(f"line {line_no}: unknown split {rec['split']!r}")
    doc_tokens = tokenize(rec["document"])
    if not doc_tokens:
        raise DatasetFormatError(f"line {line_no}: document tokenizes to nothing")
    query_tokens = tokenize(rec["query"]) if two_part else None
    return Instance(
        id=str(rec["id"]),
        doc_tokens=doc_tokens,
        gold_label=labels[rec["label"]],
        split=rec["split"],
        query_tokens=query_tokens,
    )


def load_dataset(
    path: str | Path,
    *,
    name: str | None = None,
    label_names: Sequence[str] = ("0", "1"),
) -> Dataset:
    """Load a JSONL dataset file.

    Each line is one object with fields id, document, label (0|1), split,
    and optionally query. Whether the dataset is two-part is inferred from
    the first record; a file mixing record shapes is rejected.
    """
    path = Path(path)
    labels = make_labels(label_names)
    instances: list[Instance] = []
    two_part: bool | None = None
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetFormatError(f"line {line_no}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise DatasetFormatError(f"line {line_no}: expected an object")
            if two_part is None:
                two_part = "query" in rec
            instances.append(_parse_record(rec, line_no, two_part, labels))
    if not instances:
        raise DatasetFormatError(f"{path}: no records")
    return make_dataset(name or path.stem, instances, labels)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write *dataset* back to JSONL; the inverse of load_dataset."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for inst in dataset.instances:
            rec: dict = {"id": inst.id}
            if inst.query_tokens is not None:
                rec["query"] = " ".join(inst.query_tokens)
            rec["document"] = " ".join(inst.doc_tokens)
            rec["label"] = inst.gold_label.value
            rec["split"] = inst.split
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def with_instances(dataset: Dataset, instances: Iterable[Instance]) -> Dataset:
    """A copy of *dataset* with replaced instances (vocabulary recomputed)."""
    return make_dataset(dataset.name, instances, dataset.labels)


def replace_tokens(
    instance: Instance,
    doc_tokens: Sequence[str] | None = None,
    query_tokens: Sequence[str] | None = None,
) -> Instance:
    """A copy of *instance* with one or both token sequences swapped out."""
    updates: dict = {}
    if doc_tokens is not None:
        updates["doc_tokens"] = tuple(doc_tokens)
    if query_tokens is not None:
        updates["query_tokens"] = tuple(query_tokens)
    return replace(instance, **updates)
