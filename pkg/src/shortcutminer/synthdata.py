"""Synthetic corpora for experiments, demos, and the test suite.

Both generators emit balanced binary datasets with a shared neutral
filler vocabulary, so that excising a pattern tends to leave a context a
bag-of-ngrams model scores near the decision border. Everything is
seeded and deterministic.
"""

from __future__ import annotations

import random

from .corpus import Dataset, Instance, make_dataset, make_labels

POSITIVE_WORDS = (
    "superb", "delightful", "brilliant", "charming", "moving", "gripping",
    "elegant", "stunning", "witty", "heartfelt", "masterful", "vivid",
    "tender", "exhilarating", "luminous", "inspired", "graceful", "rich",
    "sharp", "magnetic", "soaring", "radiant", "polished", "fresh", "bold",
)

NEGATIVE_WORDS = (
    "dreadful", "tedious", "clumsy", "hollow", "bland", "grating",
    "lifeless", "muddled", "shallow", "stale", "plodding", "wooden",
    "forgettable", "sloppy", "dismal", "labored", "murky", "limp",
    "soggy", "aimless", "leaden", "threadbare", "creaky", "flat", "drab",
)

FILLER_WORDS = (
    "the", "a", "an", "it", "was", "and", "of", "to", "in", "that",
    "with", "its", "this", "story", "scene", "plot", "acting", "pacing",
    "camera", "script", "tone", "cast", "ending", "opening", "score",
    "dialogue", "setting", "moment", "chapter", "style", "theme", "work",
    "piece", "part", "whole", "feels", "seems", "looks", "runs", "turns",
    "somewhat", "rather", "quite", "fairly", "mostly", "often", "again",
    "here", "there", "along",
)

NEUTRAL_TAIL_WORDS = (
    "was", "read", "on", "a", "quiet", "train", "ride", "last", "sunday",
    "afternoon", "during", "my", "commute", "at", "home", "over", "coffee",
    "in", "one", "sitting", "the", "evening", "before", "work", "library",
)


def _split_for(index: int, n: int) -> str:
    # 70/15/15 train/validation/test, interleaved so every split stays balanced
    r = index / n
    if r < 0.70:
        return "train"
    if r < 0.85:
        return "validation"
    return "test"


def make_sentiment_corpus(
    n: int = 2000,
    seed: int = 7,
    name: str = "synthetic-sentiment",
    topic_fidelity: float = 0.85,
    filler_only_fraction: float = 0.25,
) -> Dataset:
    """A review-like one-part corpus driven by two topic word pools.

    Each instance gets 8-12 filler tokens. Most instances also carry two
    topic words drawn from the pool matching their label with probability
    *topic_fidelity* (else the opposite pool), which bounds how much
    evidence any single content word can carry. A *filler_only_fraction*
    of instances contain no topic words at all, so their labels are
    independent of their text; these are the instances whose remainders
    later qualify as neutral contexts.
    """
    rng = random.Random(seed)
    labels = make_labels(("NEG", "POS"))
    instances = []
    for i in range(n):
        label = i % 2
        doc = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(8, 12))]
        if rng.random() >= filler_only_fraction:
            for _ in range(2):
                pool_label = label if rng.random() < topic_fidelity else 1 - label
                pool = POSITIVE_WORDS if pool_label == 1 else NEGATIVE_WORDS
                doc.insert(rng.randrange(len(doc) + 1), rng.choice(pool))
        instances.append(
            Instance(
                id=f"s{i:05d}",
                doc_tokens=tuple(doc),
                gold_label=labels[label],
                split=_split_for(i, n),
            )
        )
    return make_dataset(name, instances, labels)


QUERY_WORDS = (
    "what", "which", "when", "where", "who", "how", "does", "did", "is",
    "are", "could", "should", "about", "mentioned", "described", "happened",
    "caused", "changed", "reported", "claimed",
)


def make_pair_corpus(
    n: int = 400,
    seed: int = 17,
    name: str = "synthetic-qa",
    topic_fidelity: float = 0.85,
    filler_only_fraction: float = 0.25,
) -> Dataset:
    """A two-part (query/document) corpus with the same topic-pool design
    as the sentiment corpus: document topic words drive the label, queries
    are label-free question-ish token strings."""
    rng = random.Random(seed)
    labels = make_labels(("FALSE", "TRUE"))
    instances = []
    for i in range(n):
        label = i % 2
        query = tuple(rng.choice(QUERY_WORDS) for _ in range(rng.randint(4, 7)))
        doc = [rng.choice(FILLER_WORDS) for _ in range(rng.randint(8, 12))]
        if rng.random() >= filler_only_fraction:
            for _ in range(2):
                pool_label = label if rng.random() < topic_fidelity else 1 - label
                pool = POSITIVE_WORDS if pool_label == 1 else NEGATIVE_WORDS
                doc.insert(rng.randrange(len(doc) + 1), rng.choice(pool))
        instances.append(
            Instance(
                id=f"q{i:05d}",
                doc_tokens=tuple(doc),
                gold_label=labels[label],
                split=_split_for(i, n),
                query_tokens=query,
            )
        )
    return make_dataset(name, instances, labels)


def make_topic_label_corpus(
    n: int = 200, seed: int = 3, name: str = "toy-reviews"
) -> Dataset:
    """An extreme one-part corpus: every "book" review is positive and
    every "movie" review negative, with otherwise label-free text.

    A model fit on this data has nothing except the topic phrase to latch
    onto, making "this book" a planted shortcut for the positive label.
    """
    rng = random.Random(seed)
    labels = make_labels(("NEG", "POS"))
    instances = []
    for i in range(n):
        label = i % 2
        topic = "book" if label == 1 else "movie"
        tail = [rng.choice(NEUTRAL_TAIL_WORDS) for _ in range(rng.randint(6, 10))]
        doc = ("this", topic, *tail)
        instances.append(
            Instance(
                id=f"t{i:04d}",
                doc_tokens=doc,
                gold_label=labels[label],
                split=_split_for(i, n),
            )
        )
    return make_dataset(name, instances, labels)
