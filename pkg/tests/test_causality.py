import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortcutminer.causality import (
    CausalRule,
    NeutralContext,
    NoNeutralContextsError,
    PipelineConfig,
    RejectedCandidate,
    causality_check,
    extract_rules,
    harvest_neutral_contexts,
    rule_coverage,
    rule_id,
    synthesize_counterfactual,
)
from shortcutminer.corpus import PatternArityError
from shortcutminer.miner import FrequentPattern, MinerConfig, Pattern
from shortcutminer.predictor import NativeModelConfig, Prediction, train_native
from shortcutminer.scorer import CandidateStats
from shortcutminer.synthdata import make_topic_label_corpus

from conftest import StubModel, build_dataset


def candidate(pattern, consequent=1, npmi=0.9, support=5):
    return CandidateStats(
        pattern=pattern, consequent=consequent,
        p_y=0.5, p_y_given_s=0.9, p_s_y=0.1, npmi=npmi, support=support,
    )


def make_context(doc, idx, query=None, qidx=None, cid="ctx-x"):
    return NeutralContext(
        id=cid,
        source_instance_id="src",
        doc_tokens_without_span=tuple(doc),
        doc_insertion_index=idx,
        query_tokens_without_span=tuple(query) if query is not None else None,
        query_insertion_index=qidx,
        neutrality=0.0,
        probs=(0.5, 0.5),
    )


class TestHarvest:
    def test_excision_and_insertion_index(self):
        ds = build_dataset([("1", "the best movie ever", 1), ("2", "x", 0)])
        freq = [FrequentPattern(Pattern(("best", "movie")), 1)]
        contexts = harvest_neutral_contexts(ds, freq, StubModel(), eps_n=0.5)
        assert len(contexts) == 1
        ctx = contexts[0]
        assert ctx.doc_tokens_without_span == ("the", "ever")
        assert ctx.doc_insertion_index == 1
        assert ctx.source_instance_id == "1"

    def test_border_context_kept_for_any_eps(self):
        ds = build_dataset([("1", "a b", 1), ("2", "x", 0)])
        model = StubModel(default=(0.5, 0.5))
        freq = [FrequentPattern(Pattern(("a",)), 1)]
        contexts = harvest_neutral_contexts(ds, freq, model, eps_n=1e-6)
        assert len(contexts) == 1
        assert contexts[0].neutrality == 0.0

    def test_leaning_context_rejected(self):
        ds = build_dataset([("1", "a b", 1), ("2", "x", 0)])
        model = StubModel(default=(0.9, 0.1))  # neutrality 0.8
        freq = [FrequentPattern(Pattern(("a",)), 1)]
        with pytest.raises(NoNeutralContextsError):
            harvest_neutral_contexts(ds, freq, model, eps_n=0.1)

    def test_deduplicates_identical_contexts(self):
        ds = build_dataset([("1", "a b c", 0), ("2", "a b c", 1)])
        freq = [FrequentPattern(Pattern(("b",)), 2)]
        contexts = harvest_neutral_contexts(ds, freq, StubModel(), eps_n=0.5)
        assert len(contexts) == 1  # same remainder ("a","c") at index 1

    def test_every_occurrence_yields_a_context(self):
        ds = build_dataset([("1", "a x a y", 0), ("2", "z", 1)])
        freq = [FrequentPattern(Pattern(("a",)), 1)]
        contexts = harvest_neutral_contexts(ds, freq, StubModel(), eps_n=0.5)
        spots = {(c.doc_tokens_without_span, c.doc_insertion_index) for c in contexts}
        assert spots == {(("x", "a", "y"), 0), (("a", "x", "y"), 2)}

    def test_two_part_excises_both_sides(self):
        ds = build_dataset([("1", "d p q", 0, "train", "k m"), ("2", "r", 1, "train", "n")])
        freq = [FrequentPattern(Pattern(("p",), ("m",)), 1)]
        contexts = harvest_neutral_contexts(ds, freq, StubModel(), eps_n=0.5)
        assert len(contexts) == 1
        ctx = contexts[0]
        assert ctx.doc_tokens_without_span == ("d", "q")
        assert ctx.doc_insertion_index == 1
        assert ctx.query_tokens_without_span == ("k",)
        assert ctx.query_insertion_index == 1

    def test_invalid_eps(self):
        ds = build_dataset([("1", "a", 0)])
        with pytest.raises(ValueError):
            harvest_neutral_contexts(ds, [], StubModel(), eps_n=0.0)


class TestSynthesize:
    def test_splice_mid(self):
        ctx = make_context(("the", "ever"), 1)
        query, doc = synthesize_counterfactual(ctx, Pattern(("worst", "film")))
        assert query is None
        assert doc == ("the", "worst", "film", "ever")

    def test_splice_at_start(self):
        ctx = make_context(("ever",), 0)
        _, doc = synthesize_counterfactual(ctx, Pattern(("x", "y")))
        assert doc == ("x", "y", "ever")

    def test_length_additive_and_order_preserved(self):
        ctx = make_context(("a", "b", "c", "d"), 2)
        _, doc = synthesize_counterfactual(ctx, Pattern(("p", "q", "r")))
        assert len(doc) == 4 + 3
        assert [t for t in doc if t not in ("p", "q", "r")] == ["a", "b", "c", "d"]
        assert doc[2:5] == ("p", "q", "r")

    def test_two_part_splice(self):
        ctx = make_context(("d1", "d2"), 1, query=("q1",), qidx=0)
        query, doc = synthesize_counterfactual(ctx, Pattern(("pd",), ("pq",)))
        assert doc == ("d1", "pd", "d2")
        assert query == ("pq", "q1")

    def test_arity_mismatch(self):
        ctx = make_context(("a",), 0)
        with pytest.raises(PatternArityError):
            synthesize_counterfactual(ctx, Pattern(("d",), ("q",)))

    @given(st.data())
    def test_never_drops_or_reorders_context_tokens(self, data):
        ctx_tokens = data.draw(
            st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=1, max_size=8)
        )
        idx = data.draw(st.integers(0, len(ctx_tokens)))
        pattern_tokens = data.draw(
            st.lists(st.sampled_from(["p", "q"]), min_size=1, max_size=4)
        )
        ctx = make_context(tuple(ctx_tokens), idx)
        _, doc = synthesize_counterfactual(ctx, Pattern(tuple(pattern_tokens)))
        assert len(doc) == len(ctx_tokens) + len(pattern_tokens)
        assert list(doc[:idx]) + list(doc[idx + len(pattern_tokens):]) == ctx_tokens
        assert list(doc[idx : idx + len(pattern_tokens)]) == pattern_tokens


class TestCausalityCheck:
    def contexts(self, n):
        return [make_context((f"c{i}",), 0, cid=f"ctx-{i}") for i in range(n)]

    def test_unanimous_counterfactuals_emit_rule(self):
        model = StubModel(default=(0.0, 1.0))
        out = causality_check(
            candidate(Pattern(("s",))), self.contexts(3), model,
            mean_threshold=0.7, min_contexts=3,
        )
        assert isinstance(out, CausalRule)
        assert out.mean_cf_prob == pytest.approx(1.0)
        assert out.n_counterfactuals == 3
        assert out.argmax_agreement == 1.0

    def test_border_probability_rejected(self):
        model = StubModel(default=(0.5, 0.5))
        out = causality_check(
            candidate(Pattern(("s",))), self.contexts(3), model,
            mean_threshold=0.7, min_contexts=3,
        )
        assert isinstance(out, RejectedCandidate)
        assert out.status == "rejected"
        assert out.mean_cf_prob == pytest.approx(0.5)

    def test_mean_exactly_at_threshold_rejected(self):
        # counterfactual probabilities 0.9, 0.8, 0.4 -> mean exactly 0.7
        table = {
            ("s", "c0"): (0.1, 0.9),
            ("s", "c1"): (0.2, 0.8),
            ("s", "c2"): (0.6, 0.4),
        }
        model = StubModel(table=table)
        out = causality_check(
            candidate(Pattern(("s",))), self.contexts(3), model,
            mean_threshold=0.7, min_contexts=3, max_contexts=3,
        )
        assert isinstance(out, RejectedCandidate)
        assert out.mean_cf_prob == pytest.approx(0.7)

    def test_too_few_contexts_is_undetermined(self):
        model = StubModel(default=(0.0, 1.0))
        out = causality_check(
            candidate(Pattern(("s",))), self.contexts(2), model, min_contexts=3,
        )
        assert isinstance(out, RejectedCandidate)
        assert out.status == "undetermined"
        assert out.mean_cf_prob is None

    def test_sampling_is_deterministic(self):
        model = StubModel(default=(0.25, 0.75))
        pool = self.contexts(50)
        kwargs = dict(mean_threshold=0.7, min_contexts=5, max_contexts=10, seed=3)
        out1 = causality_check(candidate(Pattern(("s",))), pool, model, **kwargs)
        out2 = causality_check(candidate(Pattern(("s",))), pool, model, **kwargs)
        assert out1.cf_probs == out2.cf_probs
        assert out1.n_counterfactuals == 10

    def test_examples_carry_spans_and_probs(self):
        model = StubModel(default=(0.1, 0.9))
        out = causality_check(
            candidate(Pattern(("s", "t"))),
            [make_context(("a", "b"), 1, cid=f"ctx-{i}") for i in range(4)],
            model, min_contexts=2,
        )
        assert isinstance(out, CausalRule)
        assert len(out.example_counterfactuals) == 3
        ex = out.example_counterfactuals[0]
        assert ex["doc_text"] == "a s t b"
        assert ex["doc_span"] == [1, 2]
        assert ex["probs"] == [0.1, 0.9]


class TestRuleCoverage:
    def test_counts_satisfying_instances(self):
        ds = build_dataset([("1", "s x", 0), ("2", "s y", 0), ("3", "s z", 1), ("4", "q", 0)])
        preds = {
            "1": Prediction((0.9, 0.1)),
            "2": Prediction((0.2, 0.8)),
            "3": Prediction((0.8, 0.2)),
            "4": Prediction((0.9, 0.1)),
        }
        assert rule_coverage(Pattern(("s",)), 0, ds, preds) == 2


class TestExtractRules:
    def test_toy_corpus_finds_planted_shortcut(self):
        ds = make_topic_label_corpus()
        model = train_native(ds, NativeModelConfig(ngram_orders=(1,)))
        pipe = PipelineConfig(miner=MinerConfig((2, 3), None, 10), eps_n=0.5, seed=1)
        result = extract_rules(ds, model, pipe)
        book_rules = [
            r for r in result.rules if "book" in r.pattern.doc_part and r.consequent == 1
        ]
        assert book_rules, "expected a book -> positive rule"
        assert book_rules[0].mean_cf_prob > 0.7

    def test_funnel_counts_monotone(self):
        ds = make_topic_label_corpus()
        model = train_native(ds, NativeModelConfig(ngram_orders=(1,)))
        pipe = PipelineConfig(miner=MinerConfig((2, 3), None, 10), eps_n=0.5, seed=1)
        stats = extract_rules(ds, model, pipe).stats
        assert stats["n_rules"] <= stats["n_npmi"] <= stats["n_frequent"]

    def test_rules_exceed_threshold_strictly_and_mean_recomputes(self):
        ds = make_topic_label_corpus()
        model = train_native(ds, NativeModelConfig(ngram_orders=(1,)))
        pipe = PipelineConfig(miner=MinerConfig((2, 3), None, 10), eps_n=0.5, seed=1)
        result = extract_rules(ds, model, pipe)
        for rule in result.rules:
            assert rule.mean_cf_prob > pipe.mean_threshold
            assert sum(rule.cf_probs) / len(rule.cf_probs) == pytest.approx(
                rule.mean_cf_prob, abs=1e-9
            )

    def test_deterministic_given_seed(self):
        ds = make_topic_label_corpus()
        model = train_native(ds, NativeModelConfig(ngram_orders=(1,)))
        pipe = PipelineConfig(miner=MinerConfig((2, 3), None, 10), eps_n=0.5, seed=9)
        r1 = extract_rules(ds, model, pipe)
        r2 = extract_rules(ds, model, pipe)
        assert [r.to_dict() for r in r1.rules] == [r.to_dict() for r in r2.rules]

    def test_threads_do_not_change_output(self):
        ds = make_topic_label_corpus()
        model = train_native(ds, NativeModelConfig(ngram_orders=(1,)))
        base = PipelineConfig(miner=MinerConfig((2, 3), None, 10), eps_n=0.5, seed=9)
        threaded = PipelineConfig(miner=MinerConfig((2, 3), None, 10), eps_n=0.5, seed=9, threads=4)
        r1 = extract_rules(ds, model, base)
        r2 = extract_rules(ds, model, threaded)
        assert [r.to_dict() for r in r1.rules] == [r.to_dict() for r in r2.rules]

    def test_rule_patterns_subset_of_candidates_subset_of_frequent(self):
        ds = make_topic_label_corpus()
        model = train_native(ds, NativeModelConfig(ngram_orders=(1,)))
        pipe = PipelineConfig(miner=MinerConfig((2, 3), None, 5), eps_n=0.6, seed=1)
        result = extract_rules(ds, model, pipe)
        frequent = {f.pattern for f in result.frequent}
        cands = {c.pattern for c in result.candidates}
        rules = {r.pattern for r in result.rules}
        assert rules <= cands <= frequent

    def test_empty_candidate_set_still_reports(self):
        ds = build_dataset([("1", "a b", 0), ("2", "c d", 1)])
        model = StubModel()
        pipe = PipelineConfig(miner=MinerConfig((2, 2), None, 5))
        result = extract_rules(ds, model, pipe, predictions={
            "1": Prediction((0.9, 0.1)), "2": Prediction((0.1, 0.9)),
        })
        assert result.rules == []
        assert result.stats == {
            "n_frequent": 0, "n_npmi": 0, "n_rules": 0, "avg_pattern_len": 0.0,
        }


def test_rule_id_stable_and_distinct():
    p = Pattern(("a", "b"))
    assert rule_id(p, 1, "fp") == rule_id(Pattern(("a", "b")), 1, "fp")
    assert rule_id(p, 0, "fp") != rule_id(p, 1, "fp")
    assert rule_id(p, 1, "fp") != rule_id(p, 1, "other")
