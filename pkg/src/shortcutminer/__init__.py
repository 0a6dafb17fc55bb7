"""Toolkit for discovering causal n-gram shortcut rules in binary text classifiers.

The pipeline mines frequent contiguous n-grams from a training corpus,
keeps the ones whose presence correlates with a model's predictions
(normalized pointwise mutual information), and then checks causality by
splicing each candidate pattern into prediction-neutral contexts and
measuring whether the model still follows it. Rules that survive are
global shortcuts of the model, not just co-occurrences.

Supporting machinery: native bag-of-ngrams classifiers and a wire
protocol for external models, an occlusion attributor plus an nDCG-style
agreement metric against local explanations, a decoy-injection harness
for measuring recall of known shortcuts, annotation storage with Fleiss'
kappa, and an HTTP inspection service.
"""

__version__ = "0.1.0"
