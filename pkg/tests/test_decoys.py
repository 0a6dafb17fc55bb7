import json

import pytest

from shortcutminer.causality import CausalRule, PipelineConfig
from shortcutminer.decoys import (
    PAIR_DECOYS,
    REVIEW_DECOYS,
    ContaminationConfig,
    ContaminationError,
    DecoySpec,
    contaminate,
    evaluate_accuracy,
    retention,
    run_grid,
    shortcut_stress_eval,
)
from shortcutminer.miner import MinerConfig, Pattern
from shortcutminer.predictor import NativeModelConfig, Prediction
from shortcutminer.synthdata import make_sentiment_corpus

from conftest import StubModel, build_dataset


def make_rule(doc_part, consequent, query_part=None):
    pattern = Pattern(tuple(doc_part), tuple(query_part) if query_part else None)
    return CausalRule(
        id="r", pattern=pattern, consequent=consequent, support=10, npmi=0.9,
        coverage=5, mean_cf_prob=0.9, n_counterfactuals=10, argmax_agreement=1.0,
        cf_probs=(0.9,), example_counterfactuals=(),
    )


def grid_corpus(n_train=100, n_val=20, n_test=20):
    rows = []
    i = 0
    for split, count in (("train", n_train), ("validation", n_val), ("test", n_test)):
        for _ in range(count):
            label = i % 2
            word = "nice" if label else "awful"
            rows.append((f"i{i}", f"{word} day here t{i % 7}", label, split))
            i += 1
    return build_dataset(rows)


class TestDecoySpec:
    def test_stock_pairs_valid(self):
        assert REVIEW_DECOYS.decoy_for(0) == ("the", "following", "comment", "is")
        assert PAIR_DECOYS.decoy_for(1) == ("one", "two", "three", "four")

    def test_containment_rejected(self):
        with pytest.raises(ValueError, match="contain"):
            DecoySpec(("a", "b"), ("x", "a", "b", "y"))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            DecoySpec((), ("a",))


class TestContaminate:
    def test_selected_counts(self):
        ds = grid_corpus(n_train=100, n_val=20)
        _, manifest = contaminate(ds, REVIEW_DECOYS, ContaminationConfig(0.2, 0.9, seed=1))
        by_split = {"train": 0, "validation": 0}
        for row in manifest:
            by_split[row["split"]] += 1
        assert by_split == {"train": 20, "validation": 4}

    def test_bias_fraction(self):
        ds = grid_corpus(n_train=1000, n_val=50)
        _, manifest = contaminate(ds, REVIEW_DECOYS, ContaminationConfig(0.2, 0.9, seed=1))
        train_rows = [r for r in manifest if r["split"] == "train"]
        assert len(train_rows) == 200
        assert sum(1 for r in train_rows if r["dominant"]) == 180

    def test_prepend_doc_placement(self):
        ds = build_dataset(
            [("a", "good movie", 1), ("b", "bad movie", 0),
             ("c", "fine movie", 1, "validation"), ("d", "poor movie", 0, "validation")]
        )
        spec = DecoySpec(("one", "two", "three", "four"), ("five", "six", "seven", "eight"))
        contaminated, manifest = contaminate(ds, spec, ContaminationConfig(1.0, 1.0, seed=0))
        by_id = contaminated.by_id()
        assert by_id["b"].doc_tokens == ("one", "two", "three", "four", "bad", "movie")
        assert by_id["a"].doc_tokens == ("five", "six", "seven", "eight", "good", "movie")

    def test_prepend_both_placement(self):
        ds = build_dataset(
            [("a", "d d", 1, "train", "q q"), ("b", "d d", 0, "train", "q q"),
             ("c", "d d", 1, "validation", "q q"), ("e", "d d", 0, "validation", "q q")]
        )
        contaminated, _ = contaminate(ds, PAIR_DECOYS, ContaminationConfig(1.0, 1.0, seed=0))
        inst = contaminated.by_id()["a"]
        assert inst.doc_tokens[:4] == ("one", "two", "three", "four")
        assert inst.query_tokens[:4] == ("one", "two", "three", "four")

    def test_prepend_both_requires_two_part(self):
        ds = grid_corpus()
        with pytest.raises(ContaminationError):
            contaminate(ds, PAIR_DECOYS, ContaminationConfig(0.5, 0.9, seed=0))

    def test_test_split_untouched(self):
        ds = grid_corpus()
        contaminated, _ = contaminate(ds, REVIEW_DECOYS, ContaminationConfig(0.9, 0.9, seed=3))
        assert contaminated.split("test") == ds.split("test")

    def test_reproducible_from_seed(self):
        ds = grid_corpus()
        config = ContaminationConfig(0.5, 0.8, seed=42)
        d1, m1 = contaminate(ds, REVIEW_DECOYS, config)
        d2, m2 = contaminate(ds, REVIEW_DECOYS, config)
        assert d1 == d2 and m1 == m2

    def test_rate_selecting_nothing_is_error(self):
        ds = grid_corpus(n_val=2)
        with pytest.raises(ContaminationError):
            contaminate(ds, REVIEW_DECOYS, ContaminationConfig(0.01, 0.9, seed=0))

    def test_manifest_persisted(self, tmp_path):
        ds = grid_corpus()
        path = tmp_path / "manifest.jsonl"
        _, manifest = contaminate(
            ds, REVIEW_DECOYS, ContaminationConfig(0.2, 0.6, seed=0), manifest_path=path
        )
        rows = [json.loads(l) for l in path.read_text().splitlines()]
        assert rows == manifest

    def test_config_validation(self):
        with pytest.raises(ValueError):
            ContaminationConfig(0.0, 0.9)
        with pytest.raises(ValueError):
            ContaminationConfig(0.5, 0.4)


class TestRetention:
    def test_both_decoys_detected(self):
        rules = [
            make_rule(REVIEW_DECOYS.decoy0, 0),
            make_rule(REVIEW_DECOYS.decoy1, 1),
        ]
        assert retention(rules, REVIEW_DECOYS) == 1.0

    def test_none_detected(self):
        assert retention([], REVIEW_DECOYS) == 0.0

    def test_wrong_consequent_not_detected(self):
        rules = [make_rule(REVIEW_DECOYS.decoy0, 1)]
        assert retention(rules, REVIEW_DECOYS) == 0.0

    def test_relaxed_mode_accepts_superpattern(self):
        rules = [make_rule(("x",) + REVIEW_DECOYS.decoy0 + ("y",), 0)]
        assert retention(rules, REVIEW_DECOYS, mode="exact") == 0.0
        assert retention(rules, REVIEW_DECOYS, mode="relaxed") == 0.5

    def test_monotone_under_rule_growth(self):
        base = [make_rule(REVIEW_DECOYS.decoy0, 0)]
        grown = base + [make_rule(REVIEW_DECOYS.decoy1, 1), make_rule(("noise",), 0)]
        assert retention(grown, REVIEW_DECOYS) >= retention(base, REVIEW_DECOYS)

    def test_two_part_exact_requires_both_parts(self):
        good = make_rule(PAIR_DECOYS.decoy1, 1, query_part=PAIR_DECOYS.decoy1)
        partial = make_rule(PAIR_DECOYS.decoy1, 1, query_part=("other",))
        assert retention([good], PAIR_DECOYS) == 0.5
        assert retention([partial], PAIR_DECOYS) == 0.0


class TestStressEval:
    def stub_dataset(self):
        return build_dataset(
            [("1", "p p", 1, "test"), ("2", "n n", 0, "test"),
             ("t1", "p p", 1), ("t2", "n n", 0),
             ("v1", "p p", 1, "validation"), ("v2", "n n", 0, "validation")]
        )

    def test_decoy_blind_model_has_zero_delta(self):
        ds = self.stub_dataset()
        model = StubModel(
            table={
                ("p", "p"): (0.1, 0.9), ("n", "n"): (0.9, 0.1),
            },
            default=(0.5, 0.5),
        )
        # decoy-prefixed inputs fall to the default; fake a model that keys
        # only off the suffix by listing prefixed variants explicitly
        spec = DecoySpec(("z0", "z1", "z2", "z3"), ("o0", "o1", "o2", "o3"))
        for decoy in (spec.decoy0, spec.decoy1):
            model.table[decoy + ("p", "p")] = (0.1, 0.9)
            model.table[decoy + ("n", "n")] = (0.9, 0.1)
        assert shortcut_stress_eval(model, ds, spec) == pytest.approx(0.0)

    def test_decoy_following_model_loses_everything(self):
        ds = self.stub_dataset()
        spec = DecoySpec(("z0", "z1", "z2", "z3"), ("o0", "o1", "o2", "o3"))
        model = StubModel(
            table={("p", "p"): (0.0, 1.0), ("n", "n"): (1.0, 0.0)},
            default=(0.5, 0.5),
        )
        for suffix in (("p", "p"), ("n", "n")):
            model.table[spec.decoy0 + suffix] = (1.0, 0.0)
            model.table[spec.decoy1 + suffix] = (0.0, 1.0)
        clean = evaluate_accuracy(model, ds, "test")
        assert clean == 1.0
        assert shortcut_stress_eval(model, ds, spec) == pytest.approx(-1.0)


class TestTwoPartEndToEnd:
    def test_pair_decoy_recovered_through_full_pipeline(self):
        from shortcutminer.causality import extract_rules
        from shortcutminer.predictor import train_native
        from shortcutminer.synthdata import make_pair_corpus

        ds = make_pair_corpus(400, seed=17)
        contaminated, _ = contaminate(ds, PAIR_DECOYS, ContaminationConfig(0.9, 0.95, seed=21))
        model = train_native(contaminated, NativeModelConfig(ngram_orders=(1,)))
        pipe = PipelineConfig(
            miner=MinerConfig((4, 4), (4, 4), 20), eps_n=0.4, seed=2, min_contexts=10,
        )
        result = extract_rules(contaminated, model, pipe)
        assert result.stats["n_rules"] <= result.stats["n_npmi"] <= result.stats["n_frequent"]
        assert retention(result.rules, PAIR_DECOYS, mode="exact") == 1.0
        for rule in result.rules:
            assert rule.pattern.query_part is not None
            ex = rule.example_counterfactuals[0]
            assert ex["query_text"] is not None and ex["query_span"] is not None


class TestRunGrid:
    def test_grid_shapes_and_bounds(self):
        ds = make_sentiment_corpus(400, seed=13)
        pipe = PipelineConfig(miner=MinerConfig((4, 6), None, 10), eps_n=0.4, seed=2,
                              min_contexts=10)
        grid = [ContaminationConfig(r, b, seed=4) for r, b in [(0.2, 0.6), (0.8, 0.9)]]
        report = run_grid(ds, REVIEW_DECOYS, NativeModelConfig(ngram_orders=(1,)), grid, pipe)
        assert len(report["cells"]) == 2
        assert 0.0 <= report["baseline_clean_acc"] <= 1.0
        for cell in report["cells"]:
            assert 0.0 <= cell["retention"] <= 1.0
            assert 0.0 <= cell["clean_acc"] <= 1.0
            assert cell["stats"]["n_rules"] <= cell["stats"]["n_npmi"] <= cell["stats"]["n_frequent"]
