#!/usr/bin/env python3
"""Collect right/wrong-reason verdicts over rules and measure rater agreement.

Rules that pass the causality check are real shortcuts of the model, but
whether a shortcut is a defensible reason is a human call. This script
simulates four annotators judging the mined rules, stores their verdicts
in the append-only journal, and computes Fleiss' kappa. It ends with the
commands that expose the same loop interactively over HTTP.
"""

import tempfile
from pathlib import Path

from shortcutminer.annotate import AnnotationStore
from shortcutminer.causality import PipelineConfig, extract_rules
from shortcutminer.miner import MinerConfig
from shortcutminer.predictor import NativeModelConfig, train_native
from shortcutminer.synthdata import make_topic_label_corpus

dataset = make_topic_label_corpus(n=200, seed=3)
model = train_native(dataset, NativeModelConfig(kind="naive_bayes", ngram_orders=(1,)))
pipeline = PipelineConfig(
    miner=MinerConfig(doc_len_range=(2, 3), min_support=10),
    eps_n=0.5, mean_threshold=0.7, seed=1,
)
result = extract_rules(dataset, model, pipeline)
print("rules under review:")
for rule in result.rules:
    print(f"  {rule.id}  {rule.pattern.text()!r} -> {dataset.labels[rule.consequent].display_name}")

journal = Path(tempfile.mkdtemp()) / "annotations.jsonl"
store = AnnotationStore(journal, [r.id for r in result.rules])

# Topic words carry no sentiment, so a diligent annotator calls these rules
# wrong reasons; one dissenter keeps the matrix interesting.
annotators = ["dana", "kim", "lee", "sam"]
for rule in result.rules:
    for name in annotators:
        verdict = "wrong_reason" if name != "sam" else "right_reason"
        store.record(rule.id, name, verdict)
print(f"\nstored {len(result.rules) * len(annotators)} verdicts in {journal}")

kappa = store.fleiss_kappa()
print(f"Fleiss' kappa across {len(annotators)} annotators: {kappa:.3f}")

store2 = AnnotationStore(journal, [r.id for r in result.rules])
print(f"journal reload reproduces kappa: {store2.fleiss_kappa():.3f}")

print("\nThe same loop over HTTP (after `shortcutminer mine` into ./out):")
print("  shortcutminer serve --dataset toy.jsonl --out-dir out \\")
print("      --model-kind naive_bayes --ngram-orders 1 --port 8765")
print("  curl localhost:8765/v1/rules")
print("  curl -X POST localhost:8765/v1/annotations \\")
print('       -d \'{"rule_id":"...","annotator":"dana","verdict":"wrong_reason"}\'')
print("  curl localhost:8765/v1/kappa")
print("The browser UI in frontend/ drives these endpoints interactively.")
