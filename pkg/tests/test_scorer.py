import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortcutminer.corpus import contains
from shortcutminer.miner import MinerConfig, mine_frequent
from shortcutminer.predictor import Prediction
from shortcutminer.scorer import npmi, score_candidates

from conftest import build_dataset


def npmi_base2(p_y, p_y_given_s, p_s_y):
    return math.log2(p_y_given_s / p_y) / -math.log2(p_s_y)


class TestNpmi:
    def test_complete_co_occurrence(self):
        assert npmi(0.2, 1.0, 0.2) == pytest.approx(1.0, abs=1e-9)

    def test_independence(self):
        assert npmi(0.3, 0.3, 0.12) == pytest.approx(0.0, abs=1e-9)

    def test_derived_case_both_log_bases(self):
        value = npmi(0.5, 0.9, 0.09)
        assert value == pytest.approx(0.2441, abs=1e-4)
        assert value == pytest.approx(npmi_base2(0.5, 0.9, 0.09), abs=1e-12)

    def test_never_co_occurring(self):
        assert npmi(0.5, 0.0, 0.25) == -1.0

    @pytest.mark.parametrize("p_s_y", [0.0, 1.0])
    def test_degenerate_joint_rejected(self, p_s_y):
        with pytest.raises(ValueError):
            npmi(0.5, 0.5, p_s_y)

    def test_invalid_conditional_rejected(self):
        with pytest.raises(ValueError):
            npmi(0.5, 1.2, 0.2)

    @given(
        st.floats(0.01, 1.0),
        st.floats(0.0, 1.0),
        st.floats(0.001, 0.999),
    )
    def test_always_within_unit_interval(self, p_y, p_ygs, p_sy):
        assert -1.0 <= npmi(p_y, p_ygs, p_sy) <= 1.0


def brute_stats(dataset, pattern, predictions, label, split="train"):
    instances = dataset.split(split)
    n = len(instances)
    pred = {i.id: predictions[i.id].predicted for i in instances}
    containing = [i for i in instances if contains(i, pattern)]
    n_sy = sum(1 for i in containing if pred[i.id] == label)
    n_y = sum(1 for i in instances if pred[i.id] == label)
    return n_y / n, (n_sy / len(containing)) if containing else 0.0, n_sy / n


class TestScoreCandidates:
    def predictions_from_gold(self, dataset):
        return {
            inst.id: Prediction((0.9, 0.1)) if inst.gold_label.value == 0 else Prediction((0.1, 0.9))
            for inst in dataset.instances
        }

    def test_perfect_co_occurrence_dominates(self):
        ds = build_dataset(
            [("1", "s t x", 1), ("2", "s t y", 1), ("3", "u v", 0), ("4", "u w", 0)]
        )
        preds = self.predictions_from_gold(ds)
        frequent = mine_frequent(ds, MinerConfig((2, 2), None, 2))
        out = score_candidates(frequent, ds, preds, npmi_threshold=0.0)
        best = {c.pattern.doc_part: c for c in out}
        assert best[("s", "t")].consequent == 1
        assert best[("s", "t")].npmi == pytest.approx(1.0)

    def test_independent_pattern_excluded(self):
        ds = build_dataset(
            [("1", "z a", 0), ("2", "z a", 1), ("3", "z a b", 0), ("4", "z a c", 1)]
        )
        preds = self.predictions_from_gold(ds)
        frequent = mine_frequent(ds, MinerConfig((2, 2), None, 4))
        out = score_candidates(frequent, ds, preds, npmi_threshold=0.01)
        assert out == []  # "z a" is in every instance, split 2/2 across labels

    def test_tie_between_labels_dropped(self):
        ds = build_dataset(
            [("1", "z a", 0), ("2", "z a", 1), ("3", "z a", 0), ("4", "z a", 1)]
        )
        preds = self.predictions_from_gold(ds)
        frequent = mine_frequent(ds, MinerConfig((2, 2), None, 4))
        out = score_candidates(frequent, ds, preds, npmi_threshold=-1.0)
        assert out == []

    def test_matches_brute_force_on_random_corpus(self):
        rng = random.Random(9)
        rows = []
        vocab = ["a", "b", "c", "d", "e"]
        for i in range(10):
            doc = " ".join(rng.choice(vocab) for _ in range(rng.randint(2, 6)))
            rows.append((str(i), doc, rng.randint(0, 1)))
        ds = build_dataset(rows)
        preds = self.predictions_from_gold(ds)
        frequent = mine_frequent(ds, MinerConfig((1, 2), None, 2))
        for cand in score_candidates(frequent, ds, preds, npmi_threshold=-1.0):
            p_y, p_ygs, p_sy = brute_stats(ds, cand.pattern, preds, cand.consequent)
            assert cand.p_y == pytest.approx(p_y, abs=1e-12)
            assert cand.p_y_given_s == pytest.approx(p_ygs, abs=1e-12)
            assert cand.p_s_y == pytest.approx(p_sy, abs=1e-12)

    def test_at_most_one_candidate_per_pattern(self):
        rng = random.Random(2)
        rows = [
            (str(i), " ".join(rng.choice("abc") for _ in range(4)), rng.randint(0, 1))
            for i in range(12)
        ]
        ds = build_dataset(rows)
        preds = self.predictions_from_gold(ds)
        frequent = mine_frequent(ds, MinerConfig((1, 2), None, 2))
        out = score_candidates(frequent, ds, preds, npmi_threshold=-1.0)
        patterns = [c.pattern for c in out]
        assert len(patterns) == len(set(patterns))
        assert len(out) <= len(frequent)

    def test_sorted_by_npmi_descending(self):
        ds = build_dataset(
            [("1", "s t", 1), ("2", "s t", 1), ("3", "m n o", 1), ("4", "m x", 0)]
        )
        preds = self.predictions_from_gold(ds)
        frequent = mine_frequent(ds, MinerConfig((1, 2), None, 2))
        out = score_candidates(frequent, ds, preds, npmi_threshold=-1.0)
        values = [c.npmi for c in out]
        assert values == sorted(values, reverse=True)

    def test_missing_predictions_rejected(self):
        ds = build_dataset([("1", "a b", 0), ("2", "a b", 1)])
        frequent = mine_frequent(ds, MinerConfig((2, 2), None, 2))
        with pytest.raises(ValueError, match="missing"):
            score_candidates(frequent, ds, {}, npmi_threshold=0.5)
