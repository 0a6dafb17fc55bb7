#!/usr/bin/env python3
"""Check that global rules agree with local, per-instance explanations.

For each instance that satisfies a rule, an occlusion attributor scores
every token by how much its removal drops the predicted-class
probability. The agreement score is an nDCG@k over those scores with the
rule's pattern positions as ground truth: 1.0 means the pattern tokens
carry the top attributions, 0 means local evidence points elsewhere.

Also runs the three-way comparison between NPMI-only candidates, the full
pipeline (NPMI + causality), and the intersection of their top picks.
"""

from shortcutminer.causality import PipelineConfig, extract_rules
from shortcutminer.explain import ablation_report, mean_agreement, occlusion_attribute, top_by_coverage
from shortcutminer.miner import MinerConfig
from shortcutminer.predictor import NativeModelConfig, train_native
from shortcutminer.corpus import contains
from shortcutminer.synthdata import make_topic_label_corpus

dataset = make_topic_label_corpus(n=200, seed=3)
model = train_native(dataset, NativeModelConfig(kind="naive_bayes", ngram_orders=(1,)))
pipeline = PipelineConfig(
    miner=MinerConfig(doc_len_range=(2, 3), min_support=10),
    npmi_threshold=0.5, eps_n=0.5, mean_threshold=0.7, seed=1,
)
result = extract_rules(dataset, model, pipeline)
rules = top_by_coverage(result.rules, dataset, result.predictions, 15)
print(f"scoring {len(rules)} rules against occlusion attributions")

needed = set()
for rule in rules + result.candidates:
    for inst in dataset.split("train"):
        if result.predictions[inst.id].predicted == rule.consequent and contains(inst, rule.pattern):
            needed.add(inst.id)
by_id = dataset.by_id()
attributions = {i: occlusion_attribute(model, by_id[i]) for i in sorted(needed)}
print(f"computed occlusion attributions for {len(attributions)} satisfying instances")

report = mean_agreement(rules, dataset, attributions, result.predictions)
print(f"\nper-rule agreement (mean over satisfying instances):")
for row in report.rows:
    print(f"  {row.pattern.text()!r} -> {dataset.labels[row.consequent].display_name}: "
          f"mean={row.mean:.3f} var={row.variance:.4f} n={row.n_satisfying}")
print(f"overall: mean={report.mean:.3f} variance={report.variance:.4f}")

ablation = ablation_report(
    result.candidates, result.rules, dataset, attributions, result.predictions, top_n=15
)
print("\nablation (top-15 by coverage):")
for name, rep in ablation.items():
    print(f"  {name:>12}: mean={rep.mean:.3f} var={rep.variance:.4f} rules={rep.n_rules}")

print("\nReading: on this corpus the pattern tokens are the model's entire")
print("evidence, so agreement sits near 1.0; on real data, rules with low")
print("agreement are the ones worth a human look.")
