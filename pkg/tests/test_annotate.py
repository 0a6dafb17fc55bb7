import pytest
from hypothesis import given
from hypothesis import strategies as st

from shortcutminer.annotate import (
    AnnotationStore,
    IncompleteMatrixError,
    UnknownRuleError,
    fleiss_kappa_from_table,
)

RULES = ["r1", "r2", "r3"]


@pytest.fixture
def store(tmp_path):
    return AnnotationStore(tmp_path / "journal.jsonl", RULES)


class TestFleissFormula:
    def test_all_agree_is_one(self):
        table = [[4, 0, 0], [4, 0, 0], [0, 4, 0]]
        assert fleiss_kappa_from_table(table) == pytest.approx(1.0)

    def test_single_category_everywhere_is_one(self):
        assert fleiss_kappa_from_table([[3, 0], [3, 0]]) == 1.0

    def test_two_by_two_disagreement_is_minus_one(self):
        # verdicts (A,B) and (B,A): Pbar = 0, Pe = 0.5
        table = [[1, 1], [1, 1]]
        assert fleiss_kappa_from_table(table) == pytest.approx(-1.0, abs=1e-9)

    def test_textbook_example(self):
        # Fleiss (1971) worked data: 10 subjects, 5 categories, 14 raters
        table = [
            [0, 0, 0, 0, 14],
            [0, 2, 6, 4, 2],
            [0, 0, 3, 5, 6],
            [0, 3, 9, 2, 0],
            [2, 2, 8, 1, 1],
            [7, 7, 0, 0, 0],
            [3, 2, 6, 3, 0],
            [2, 5, 3, 2, 2],
            [6, 5, 2, 1, 0],
            [0, 2, 2, 3, 7],
        ]
        assert fleiss_kappa_from_table(table) == pytest.approx(0.210, abs=0.001)

    def test_invariant_under_category_relabeling(self):
        table = [[2, 1, 0], [1, 2, 0], [0, 1, 2]]
        relabeled = [[row[2], row[0], row[1]] for row in table]
        assert fleiss_kappa_from_table(table) == pytest.approx(
            fleiss_kappa_from_table(relabeled)
        )

    def test_invariant_under_item_reordering(self):
        table = [[3, 0], [1, 2], [2, 1]]
        assert fleiss_kappa_from_table(table) == pytest.approx(
            fleiss_kappa_from_table(table[::-1])
        )

    @given(
        st.lists(
            st.integers(0, 4).map(lambda a: [a, 4 - a]),
            min_size=2,
            max_size=12,
        )
    )
    def test_always_in_unit_interval(self, table):
        assert -1.0 <= fleiss_kappa_from_table(table) <= 1.0

    def test_ragged_rows_rejected(self):
        with pytest.raises(ValueError):
            fleiss_kappa_from_table([[2, 0], [1, 0]])

    def test_too_few_items_or_raters(self):
        with pytest.raises(ValueError):
            fleiss_kappa_from_table([[2, 0]])
        with pytest.raises(ValueError):
            fleiss_kappa_from_table([[1, 0], [0, 1]])


class TestStore:
    def test_record_and_read_back(self, store):
        store.record("r1", "alice", "wrong_reason")
        assert store.get("r1", "alice").verdict == "wrong_reason"

    def test_overwrite_same_cell(self, store):
        store.record("r1", "alice", "wrong_reason")
        store.record("r1", "alice", "right_reason")
        assert store.get("r1", "alice").verdict == "right_reason"

    def test_unknown_rule_rejected(self, store):
        with pytest.raises(UnknownRuleError):
            store.record("nope", "alice", "wrong_reason")

    def test_bad_verdict_rejected(self, store):
        with pytest.raises(ValueError):
            store.record("r1", "alice", "maybe")

    def test_durable_across_restarts(self, tmp_path):
        path = tmp_path / "journal.jsonl"
        store = AnnotationStore(path, RULES)
        store.record("r1", "alice", "cannot_tell", ts=1.0)
        store.record("r1", "alice", "right_reason", ts=2.0)
        store.record("r2", "bob", "wrong_reason", ts=3.0)
        reloaded = AnnotationStore(path, RULES)
        assert reloaded.get("r1", "alice").verdict == "right_reason"
        assert reloaded.get("r2", "bob").verdict == "wrong_reason"
        assert reloaded.annotators() == ["alice", "bob"]

    def test_kappa_all_agree(self, store):
        for rule in RULES:
            for rater in ("a", "b", "c", "d"):
                store.record(rule, rater, "wrong_reason")
        assert store.fleiss_kappa() == pytest.approx(1.0)

    def test_kappa_two_by_two_disagreement(self, store):
        store.record("r1", "a", "wrong_reason")
        store.record("r1", "b", "right_reason")
        store.record("r2", "a", "right_reason")
        store.record("r2", "b", "wrong_reason")
        assert store.fleiss_kappa(["r1", "r2"], ["a", "b"]) == pytest.approx(-1.0, abs=1e-9)

    def test_incomplete_matrix_lists_missing_cells(self, store):
        store.record("r1", "a", "wrong_reason")
        store.record("r1", "b", "right_reason")
        store.record("r2", "a", "right_reason")
        with pytest.raises(IncompleteMatrixError) as exc:
            store.fleiss_kappa(["r1", "r2"], ["a", "b"])
        assert exc.value.missing == [("r2", "b")]

    def test_kappa_needs_two_each(self, store):
        store.record("r1", "a", "wrong_reason")
        with pytest.raises(ValueError, match="at least 2"):
            store.fleiss_kappa(["r1"], ["a", "b"])

    def test_kappa_selection_rejects_foreign_rule(self, store):
        with pytest.raises(UnknownRuleError):
            store.fleiss_kappa(["r1", "ghost"], ["a", "b"])
