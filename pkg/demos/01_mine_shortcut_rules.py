#!/usr/bin/env python3
"""Mine causal shortcut rules from a deliberately skewed corpus.

The corpus is the classic pathological setup: every review about books is
positive and every review about movies is negative. A classifier fit on
it has nothing to learn except the topic phrase, so "this book" becomes a
shortcut for the positive label. This script walks the full funnel:
frequent patterns -> NPMI candidates -> causality-checked rules.
"""

from shortcutminer.causality import PipelineConfig, extract_rules
from shortcutminer.miner import MinerConfig
from shortcutminer.predictor import NativeModelConfig, train_native
from shortcutminer.synthdata import make_topic_label_corpus

dataset = make_topic_label_corpus(n=200, seed=3)
print(f"corpus: {len(dataset)} instances, vocabulary of {len(dataset.vocabulary)} tokens")
print(f"example doc: {' '.join(dataset.instances[0].doc_tokens)!r} "
      f"(gold={dataset.instances[0].gold_label.display_name})")

model = train_native(dataset, NativeModelConfig(kind="naive_bayes", ngram_orders=(1,)))
print(f"\ntrained unigram naive Bayes, fingerprint {model.fingerprint[:16]}")

pipeline = PipelineConfig(
    miner=MinerConfig(doc_len_range=(2, 3), min_support=10),
    npmi_threshold=0.5,
    eps_n=0.5,           # generous tolerance: tiny corpus, noisy contexts
    mean_threshold=0.7,
    seed=1,
)
result = extract_rules(dataset, model, pipeline)

print("\nfunnel:")
print(f"  frequent patterns : {result.stats['n_frequent']}")
print(f"  NPMI candidates   : {result.stats['n_npmi']}")
print(f"  causal rules      : {result.stats['n_rules']}")
print(f"  avg pattern length: {result.stats['avg_pattern_len']:.2f}")
print(f"  neutral contexts  : {len(result.contexts)}")

print("\nrules (pattern -> label, with counterfactual evidence):")
for rule in result.rules:
    label = dataset.labels[rule.consequent].display_name
    print(f"\n  {rule.pattern.text()!r} -> {label}")
    print(f"    support={rule.support} coverage={rule.coverage} "
          f"npmi={rule.npmi:.3f} mean_cf_prob={rule.mean_cf_prob:.3f} "
          f"over {rule.n_counterfactuals} counterfactuals")
    for ex in rule.example_counterfactuals[:2]:
        start, length = ex["doc_span"]
        tokens = ex["doc_text"].split()
        shown = " ".join(
            f"[{t}]" if start <= i < start + length else t for i, t in enumerate(tokens)
        )
        print(f"    cf: {shown}  (P={ex['probs'][rule.consequent]:.3f})")

print("\nReading: the model predicts the rule's label on synthetic inputs that")
print("contain the pattern inside otherwise neutral text, so the pattern itself")
print("drives the prediction; it is not just correlated with it.")
