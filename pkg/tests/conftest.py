import pytest

from shortcutminer.corpus import Instance, make_dataset, make_labels
from shortcutminer.predictor import Prediction


def build_dataset(rows, name="test", label_names=("NEG", "POS")):
    """rows: (id, doc, label[, split[, query]]) tuples; doc/query are strings
    split on spaces or ready token tuples."""
    labels = make_labels(label_names)
    instances = []
    for row in rows:
        inst_id, doc, label = row[0], row[1], row[2]
        split = row[3] if len(row) > 3 else "train"
        query = row[4] if len(row) > 4 else None
        doc_tokens = tuple(doc.split()) if isinstance(doc, str) else tuple(doc)
        query_tokens = (
            None
            if query is None
            else (tuple(query.split()) if isinstance(query, str) else tuple(query))
        )
        instances.append(
            Instance(
                id=inst_id,
                doc_tokens=doc_tokens,
                gold_label=labels[label],
                split=split,
                query_tokens=query_tokens,
            )
        )
    return make_dataset(name, instances, labels)


class StubModel:
    """Predictor returning canned probabilities keyed by the input tokens."""

    def __init__(self, table=None, default=(0.5, 0.5)):
        self.table = {tuple(k): v for k, v in (table or {}).items()}
        self.default = default
        self.fingerprint = "stub"
        self.calls = []

    def predict_batch(self, inputs):
        out = []
        for tokens in inputs:
            if not tokens:
                raise ValueError("empty input")
            key = tuple(tokens)
            self.calls.append(key)
            out.append(Prediction(self.table.get(key, self.default)))
        return out


@pytest.fixture
def stub_model():
    return StubModel()
