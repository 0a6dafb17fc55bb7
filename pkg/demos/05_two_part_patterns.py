#!/usr/bin/env python3
"""Mine paired (query, document) shortcut rules from a two-part corpus.

Question-answering and claim-verification corpora pair a query with a
document; patterns there are tuples of one n-gram from each side, and an
instance supports the pair only when both halves occur. This script
plants a pair decoy in both halves of a synthetic corpus and recovers it
through the full pipeline.
"""

from shortcutminer.causality import PipelineConfig, extract_rules
from shortcutminer.decoys import PAIR_DECOYS, ContaminationConfig, contaminate, retention
from shortcutminer.miner import MinerConfig
from shortcutminer.predictor import NativeModelConfig, train_native
from shortcutminer.synthdata import make_pair_corpus

dataset = make_pair_corpus(n=400, seed=17)
inst = dataset.instances[0]
print(f"corpus: {len(dataset)} query/document pairs")
print(f"example query: {' '.join(inst.query_tokens)!r}")
print(f"example doc  : {' '.join(inst.doc_tokens)!r} "
      f"(gold={inst.gold_label.display_name})")
print(f"\npair decoys (prepended to BOTH halves of contaminated instances):")
print(f"  {' '.join(PAIR_DECOYS.decoy0)!r} -> {dataset.labels[0].display_name}")
print(f"  {' '.join(PAIR_DECOYS.decoy1)!r} -> {dataset.labels[1].display_name}")

contaminated, manifest = contaminate(
    dataset, PAIR_DECOYS, ContaminationConfig(rate=0.9, bias=0.95, seed=21)
)
print(f"contaminated {len(manifest)} train/validation instances")

model = train_native(contaminated, NativeModelConfig(kind="naive_bayes", ngram_orders=(1,)))
pipeline = PipelineConfig(
    miner=MinerConfig(doc_len_range=(4, 4), query_len_range=(4, 4), min_support=20),
    eps_n=0.4, mean_threshold=0.7, min_contexts=10, seed=2,
)
result = extract_rules(contaminated, model, pipeline)

print(f"\nfunnel: {result.stats['n_frequent']} frequent pairs -> "
      f"{result.stats['n_npmi']} candidates -> {result.stats['n_rules']} rules "
      f"(avg |s_q|+|s_d| = {result.stats['avg_pattern_len']:.1f})")
for rule in result.rules:
    print(f"  {rule.pattern.text()} -> {dataset.labels[rule.consequent].display_name} "
          f"(mean_cf_prob={rule.mean_cf_prob:.3f})")
    ex = rule.example_counterfactuals[0]
    print(f"    cf query: {ex['query_text']}")
    print(f"    cf doc  : {ex['doc_text']}")

print(f"\nretention (exact pair match with correct labels): "
      f"{retention(result.rules, PAIR_DECOYS):.1f}")
