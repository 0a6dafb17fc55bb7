#!/usr/bin/env python3
"""Plant known shortcuts via decoys, then measure how well mining recovers them.

Contaminates a synthetic sentiment corpus at four (rate, bias) settings,
prepending a fixed four-token decoy per label to the chosen training and
validation instances. The test split stays untouched. For each setting we
retrain, rerun extraction, and report: retention (were the planted decoys
recovered as rules with the right label?), clean-test accuracy, and the
accuracy drop when decoys are prepended to opposing test instances.
"""

from shortcutminer.causality import PipelineConfig
from shortcutminer.decoys import REVIEW_DECOYS, ContaminationConfig, run_grid
from shortcutminer.miner import MinerConfig
from shortcutminer.predictor import NativeModelConfig
from shortcutminer.synthdata import make_sentiment_corpus

dataset = make_sentiment_corpus(n=2000, seed=7)
print(f"corpus: {len(dataset)} instances "
      f"({len(dataset.split('train'))} train / {len(dataset.split('validation'))} val / "
      f"{len(dataset.split('test'))} test)")
print(f"decoy for NEG: {' '.join(REVIEW_DECOYS.decoy0)!r}")
print(f"decoy for POS: {' '.join(REVIEW_DECOYS.decoy1)!r}")

pipeline = PipelineConfig(
    miner=MinerConfig(doc_len_range=(4, 10), min_support=20),
    eps_n=0.3, mean_threshold=0.7, seed=5,
)
grid = [
    ContaminationConfig(rate, bias, seed=11)
    for rate, bias in [(0.2, 0.6), (0.2, 0.9), (0.8, 0.6), (0.8, 0.9)]
]

report = run_grid(
    dataset, REVIEW_DECOYS,
    NativeModelConfig(kind="naive_bayes", ngram_orders=(1, 2)),
    grid, pipeline,
)

print(f"\nbaseline clean accuracy (uncontaminated model): {report['baseline_clean_acc']:.3f}")
print("\nrate  bias  retention  clean_acc  stress_delta")
for cell in report["cells"]:
    print(f"{cell['rate']:<5} {cell['bias']:<5} {cell['retention']:^9.2f} "
          f"{cell['clean_acc']:^9.3f}  {cell['stress_delta']:+.3f}")

print("\nReading: high rate x high bias plants a shortcut strong enough for the")
print("model to learn and for the miner to recover (retention 1.0), while test")
print("accuracy on clean data barely moves; the contamination is invisible to a")
print("held-out benchmark. The stress delta shows what the shortcut costs once")
print("inputs carry the decoy with the opposite gold label.")
