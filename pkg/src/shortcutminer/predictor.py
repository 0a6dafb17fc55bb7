"""Black-box prediction interface with trainable native baselines.

The mining pipeline never inspects model internals: it only needs batched
label probabilities for token sequences. Two native classifiers over
bag-of-ngram counts (multinomial naive Bayes and L2 logistic regression)
make the toolkit self-contained and train deterministically in seconds;
external classifiers attach through a line-oriented stdio protocol or a
small HTTP endpoint carrying the same JSON bodies.

Two-part inputs are joined as query ++ "||" ++ document before they reach
any predictor.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import subprocess
import threading
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from scipy import optimize, sparse

from .corpus import Dataset, Instance

log = logging.getLogger(__name__)

SEPARATOR = "||"

NATIVE_KINDS = ("naive_bayes", "logistic_ngram")


class TrainingError(ValueError):
    """Training preconditions violated (empty or single-label train split)."""


class TransportError(RuntimeError):
    """An external predictor failed; carries the affected request ids.

    Retryable: the request itself was well-formed.
    """

    def __init__(self, message: str, request_ids: Sequence[str] = ()):
        super().__init__(message)
        self.request_ids = tuple(request_ids)


@dataclass(frozen=True)
class Prediction:
    """A two-class probability distribution; argmax ties break toward 0."""

    probs: tuple[float, float]

    def __post_init__(self) -> None:
        p0, p1 = self.probs
        if not (0.0 <= p0 <= 1.0 and 0.0 <= p1 <= 1.0):
            raise ValueError(f"probabilities out of range: {self.probs}")
        if abs(p0 + p1 - 1.0) > 1e-9:
            raise ValueError(f"probabilities do not sum to 1: {self.probs}")

    @property
    def predicted(self) -> int:
        return 0 if self.probs[0] >= self.probs[1] else 1


def encode_pair(
    query_tokens: Sequence[str] | None, doc_tokens: Sequence[str]
) -> tuple[str, ...]:
    """Join the two parts with the reserved separator token."""
    if query_tokens is None:
        return tuple(doc_tokens)
    return tuple(query_tokens) + (SEPARATOR,) + tuple(doc_tokens)


def encode_instance(instance: Instance) -> tuple[str, ...]:
    return encode_pair(instance.query_tokens, instance.doc_tokens)


@dataclass(frozen=True)
class NativeModelConfig:
    kind: str = "naive_bayes"
    ngram_orders: tuple[int, ...] = (1, 2)
    alpha: float = 1.0   # Laplace smoothing (naive_bayes)
    l2: float = 1.0      # ridge strength (logistic_ngram)
    grad_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.kind not in NATIVE_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if not self.ngram_orders or any(n not in (1, 2, 3) for n in self.ngram_orders):
            raise ValueError("ngram_orders must be a non-empty subset of {1, 2, 3}")
        if self.alpha <= 0 or self.l2 <= 0:
            raise ValueError("alpha and l2 must be positive")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "ngram_orders": list(self.ngram_orders),
            "alpha": self.alpha,
            "l2": self.l2,
            "grad_tol": self.grad_tol,
        }


def ngram_counts(tokens: Sequence[str], orders: Iterable[int]) -> Counter:
    """Counts of space-joined n-grams of the given orders in *tokens*."""
    feats: Counter = Counter()
    toks = tuple(tokens)
    for n in orders:
        for i in range(len(toks) - n + 1):
            feats[" ".join(toks[i : i + n])] += 1
    return feats


class NativeModel:
    """A trained bag-of-ngrams classifier.

    Features absent from the training vocabulary are ignored at prediction
    time, so an input of entirely unseen tokens falls back to the class
    prior (naive Bayes) or the bias term (logistic).
    """

    def __init__(
        self,
        config: NativeModelConfig,
        feature_index: dict[str, int],
        fingerprint: str,
        class_log_prior: np.ndarray,
        feature_log_prob: np.ndarray | None = None,
        weights: np.ndarray | None = None,
        bias: float = 0.0,
    ):
        self.config = config
        self.feature_index = feature_index
        self.fingerprint = fingerprint
        self.class_log_prior = class_log_prior
        self.feature_log_prob = feature_log_prob
        self.weights = weights
        self.bias = bias

    def predict_batch(self, inputs: Sequence[Sequence[str]]) -> list[Prediction]:
        """Order-preserving batch prediction; pure."""
        out = []
        for tokens in inputs:
            if not tokens:
                raise ValueError("predict_batch inputs must be non-empty sequences")
            out.append(self._predict_one(tuple(tokens)))
        return out

    def _predict_one(self, tokens: tuple[str, ...]) -> Prediction:
        feats = ngram_counts(tokens, self.config.ngram_orders)
        if self.config.kind == "naive_bayes":
            scores = self.class_log_prior.copy()
            for feat, cnt in feats.items():
                idx = self.feature_index.get(feat)
                if idx is not None:
                    scores += cnt * self.feature_log_prob[:, idx]
            # normalize in log space
            m = scores.max()
            exp = np.exp(scores - m)
            p = exp / exp.sum()
            return Prediction((float(p[0]), float(p[1])))
        z = self.bias
        for feat, cnt in feats.items():
            idx = self.feature_index.get(feat)
            if idx is not None:
                z += cnt * self.weights[idx]
        p1 = 1.0 / (1.0 + math.exp(-z)) if z >= 0 else math.exp(z) / (1.0 + math.exp(z))
        return Prediction((1.0 - p1, p1))

    def save(self, path: str | Path) -> None:
        doc = {
            "config": self.config.to_dict(),
            "fingerprint": self.fingerprint,
            "features": sorted(self.feature_index, key=self.feature_index.get),
            "class_log_prior": self.class_log_prior.tolist(),
            "feature_log_prob": None
            if self.feature_log_prob is None
            else self.feature_log_prob.tolist(),
            "weights": None if self.weights is None else self.weights.tolist(),
            "bias": self.bias,
        }
        Path(path).write_text(json.dumps(doc), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "NativeModel":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        cfg = doc["config"]
        config = NativeModelConfig(
            kind=cfg["kind"],
            ngram_orders=tuple(cfg["ngram_orders"]),
            alpha=cfg["alpha"],
            l2=cfg["l2"],
            grad_tol=cfg.get("grad_tol", 1e-6),
        )
        return cls(
            config=config,
            feature_index={f: i for i, f in enumerate(doc["features"])},
            fingerprint=doc["fingerprint"],
            class_log_prior=np.asarray(doc["class_log_prior"], dtype=np.float64),
            feature_log_prob=None
            if doc["feature_log_prob"] is None
            else np.asarray(doc["feature_log_prob"], dtype=np.float64),
            weights=None if doc["weights"] is None else np.asarray(doc["weights"], dtype=np.float64),
            bias=doc["bias"],
        )


def training_fingerprint(dataset: Dataset, config: NativeModelConfig) -> str:
    """sha256 over the canonical train split plus the model config."""
    rows = sorted(
        [
            inst.id,
            list(inst.query_tokens) if inst.query_tokens is not None else None,
            list(inst.doc_tokens),
            inst.gold_label.value,
        ]
        for inst in dataset.split("train")
    )
    payload = json.dumps({"config": config.to_dict(), "train": rows},
                         sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def train_native(dataset: Dataset, config: NativeModelConfig) -> NativeModel:
    """Train a native model on the train split; deterministic."""
    train = dataset.split("train")
    if not train:
        raise TrainingError("train split is empty")
    labels_present = {inst.gold_label.value for inst in train}
    if labels_present != {0, 1}:
        raise TrainingError(f"train split must contain both labels, got {sorted(labels_present)}")

    inputs = [encode_instance(inst) for inst in train]
    y = np.array([inst.gold_label.value for inst in train], dtype=np.int64)
    per_instance = [ngram_counts(toks, config.ngram_orders) for toks in inputs]
    vocab = sorted(set().union(*per_instance))
    feature_index = {f: i for i, f in enumerate(vocab)}
    fingerprint = training_fingerprint(dataset, config)

    n = len(train)
    prior = np.array([(y == 0).sum() / n, (y == 1).sum() / n])
    class_log_prior = np.log(prior)

    if config.kind == "naive_bayes":
        counts = np.zeros((2, len(vocab)), dtype=np.float64)
        for label, feats in zip(y, per_instance):
            for feat, cnt in feats.items():
                counts[label, feature_index[feat]] += cnt
        totals = counts.sum(axis=1, keepdims=True)
        smoothed = (counts + config.alpha) / (totals + config.alpha * len(vocab))
        return NativeModel(
            config=config,
            feature_index=feature_index,
            fingerprint=fingerprint,
            class_log_prior=class_log_prior,
            feature_log_prob=np.log(smoothed),
        )

    # logistic_ngram: L2-regularized logistic regression over counts,
    # minimized to the configured gradient tolerance (strictly convex).
    rows, cols, vals = [], [], []
    for i, feats in enumerate(per_instance):
        for feat, cnt in feats.items():
            rows.append(i)
            cols.append(feature_index[feat])
            vals.append(float(cnt))
    x = sparse.csr_matrix((vals, (rows, cols)), shape=(n, len(vocab)))

    def objective(params: np.ndarray) -> tuple[float, np.ndarray]:
        w, b = params[:-1], params[-1]
        z = x @ w + b
        # log(1 + exp(-t*z)) with t in {-1, +1}, computed stably
        t = 2.0 * y - 1.0
        m = -t * z
        loss = np.logaddexp(0.0, m).sum() + 0.5 * config.l2 * float(w @ w)
        p = 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500)))
        resid = p - y
        grad_w = x.T @ resid + config.l2 * w
        grad_b = resid.sum()
        return float(loss), np.concatenate([grad_w, [grad_b]])

    params0 = np.zeros(len(vocab) + 1)
    res = optimize.minimize(
        objective,
        params0,
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": 5000, "maxfun": 50000, "gtol": config.grad_tol, "ftol": 1e-16},
    )
    _, grad = objective(res.x)
    if np.max(np.abs(grad)) > config.grad_tol * 10:
        raise TrainingError(
            f"logistic solver did not reach gradient tolerance "
            f"(|grad|_inf = {np.max(np.abs(grad)):.2e})"
        )
    return NativeModel(
        config=config,
        feature_index=feature_index,
        fingerprint=fingerprint,
        class_log_prior=class_log_prior,
        weights=res.x[:-1],
        bias=float(res.x[-1]),
    )


# ----------------------------------------------------------------------
# Prediction cache
# ----------------------------------------------------------------------


def write_prediction_cache(
    path: str | Path, fingerprint: str, predictions: dict[str, Prediction], order: Sequence[str]
) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        fh.write(json.dumps({"fingerprint": fingerprint}) + "\n")
        for inst_id in order:
            probs = predictions[inst_id].probs
            fh.write(json.dumps({"id": inst_id, "probs": [probs[0], probs[1]]}) + "\n")


def load_prediction_cache(path: str | Path) -> tuple[str, dict[str, Prediction]]:
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        fingerprint = header["fingerprint"]
        table = {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            table[rec["id"]] = Prediction((rec["probs"][0], rec["probs"][1]))
    return fingerprint, table


def cache_predictions(
    model, dataset: Dataset, path: str | Path | None = None
) -> dict[str, Prediction]:
    """Predictions for every instance of every split, keyed by instance id.

    When *path* is given the table is persisted; a cached file whose
    fingerprint matches the model is reused, otherwise it is recomputed and
    overwritten. Downstream stages read training-set predictions only from
    this table.
    """
    fingerprint = getattr(model, "fingerprint", "unknown")
    if path is not None:
        path = Path(path)
        if path.exists():
            cached_fp, table = load_prediction_cache(path)
            if cached_fp == fingerprint and set(table) == {i.id for i in dataset.instances}:
                return table
            log.info("prediction cache at %s is stale, recomputing", path)
    inputs = [encode_instance(inst) for inst in dataset.instances]
    preds = model.predict_batch(inputs)
    table = {inst.id: pred for inst, pred in zip(dataset.instances, preds)}
    if path is not None:
        write_prediction_cache(path, fingerprint, table, [i.id for i in dataset.instances])
    return table


# ----------------------------------------------------------------------
# External predictors
# ----------------------------------------------------------------------


def _parse_probs(rec: dict, req_id: str) -> Prediction:
    try:
        p0, p1 = rec["probs"]
        return Prediction((float(p0), float(p1)))
    except (KeyError, TypeError, ValueError) as exc:
        raise TransportError(f"malformed response for request {req_id!r}: {exc}", [req_id])


class StdioPredictor:
    """Client for a child process speaking the line-oriented protocol.

    One request per line ``{"id":..., "tokens":[...]}`` on the child's
    stdin; one response per line ``{"id":..., "probs":[p0,p1]}`` on its
    stdout. Responses may arrive out of order.
    """

    def __init__(self, command: Sequence[str]):
        self.command = list(command)
        self.fingerprint = "stdio:" + hashlib.sha256(
            json.dumps(self.command).encode()
        ).hexdigest()[:16]
        self._proc: subprocess.Popen | None = None
        # one in-flight batch per child process; callers wanting parallelism
        # open multiple clients (one connection each)
        self._lock = threading.Lock()

    def _ensure_started(self) -> subprocess.Popen:
        if self._proc is None or self._proc.poll() is not None:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        return self._proc

    def predict_batch(self, inputs: Sequence[Sequence[str]]) -> list[Prediction]:
        ids = [f"req-{i}" for i in range(len(inputs))]
        id_set = set(ids)
        with self._lock:
            proc = self._ensure_started()
            try:
                for req_id, tokens in zip(ids, inputs):
                    proc.stdin.write(json.dumps({"id": req_id, "tokens": list(tokens)}) + "\n")
                proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise TransportError(f"predictor process write failed: {exc}", ids)
            results: dict[str, Prediction] = {}
            while len(results) < len(ids):
                line = proc.stdout.readline()
                if not line:
                    missing = [i for i in ids if i not in results]
                    raise TransportError("predictor process closed its output", missing)
                rec = json.loads(line)
                req_id = rec.get("id")
                if req_id not in id_set:
                    raise TransportError(f"response for unknown request id {req_id!r}", [])
                results[req_id] = _parse_probs(rec, req_id)
        return [results[i] for i in ids]

    def close(self) -> None:
        if self._proc is not None and self._proc.poll() is None:
            self._proc.stdin.close()
            self._proc.wait(timeout=10)
        self._proc = None

    def __enter__(self) -> "StdioPredictor":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class HttpPredictor:
    """Client for an HTTP endpoint accepting batched prediction requests.

    POST <endpoint> with ``{"instances":[{"id":..., "tokens":[...]}...]}``
    returning ``{"predictions":[{"id":..., "probs":[p0,p1]}...]}``.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self.fingerprint = "http:" + hashlib.sha256(endpoint.encode()).hexdigest()[:16]

    def predict_batch(self, inputs: Sequence[Sequence[str]]) -> list[Prediction]:
        ids = [f"req-{i}" for i in range(len(inputs))]
        body = json.dumps(
            {"instances": [{"id": i, "tokens": list(t)} for i, t in zip(ids, inputs)]}
        ).encode("utf-8")
        req = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                doc = json.loads(resp.read().decode("utf-8"))
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise TransportError(f"predictor endpoint unreachable: {exc}", ids)
        results = {}
        for rec in doc.get("predictions", []):
            req_id = rec.get("id")
            results[req_id] = _parse_probs(rec, req_id)
        missing = [i for i in ids if i not in results]
        if missing:
            raise TransportError("endpoint response missing predictions", missing)
        return [results[i] for i in ids]
