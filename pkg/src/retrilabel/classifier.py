"""Softmax probe over frozen document embeddings, plus self-training.

The classifier is multinomial logistic regression trained by mini-batch
gradient descent on cross-entropy with an L2 penalty on the weights.
Weights and bias start at zero, so the only randomness is the seeded
batch shuffle and training is bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .corpus import Corpus
from .errors import DegenerateLabels, MissingDocVector
from .retrieval import PseudoLabelSet
from .store import EmbeddingStore, read_vectors, write_vectors
from .validation import check_class_labels, check_feature_matrix

__all__ = [
    "TrainConfig",
    "LinearSoftmaxClassifier",
    "SelfTrainResult",
    "softmax",
    "cross_entropy_loss_and_grad",
    "train",
    "predict",
    "self_train",
    "save_model",
    "load_model",
]


@dataclass
class TrainConfig:
    """Hyperparameters for classifier training and self-training.

    ``gamma`` is the self-training confidence threshold and ``stop_frac``
    the label-change fraction below which self-training halts.
    """

    learning_rate: float = 0.5
    epochs: int = 100
    l2: float = 1e-4
    batch_size: int = 32
    gamma: float = 0.8
    max_st_rounds: int = 10
    stop_frac: float = 0.01

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")
        if not 0 < self.stop_frac < 1:
            raise ValueError(f"stop_frac must be in (0, 1), got {self.stop_frac}")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.max_st_rounds < 0:
            raise ValueError("epochs and max_st_rounds must be nonnegative")
        if self.l2 < 0:
            raise ValueError("l2 must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax, stable under a constant shift of the logits."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy_loss_and_grad(
    weights: np.ndarray,
    bias: np.ndarray,
    X: np.ndarray,
    y: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Mean cross-entropy plus l2*||W||^2 and its analytic gradient."""
    n = X.shape[0]
    probs = softmax(X @ weights.T + bias)
    loss = float(-np.mean(np.log(probs[np.arange(n), y])) + l2 * np.sum(weights**2))
    dlogits = probs
    dlogits[np.arange(n), y] -= 1.0
    dlogits /= n
    grad_w = dlogits.T @ X + 2.0 * l2 * weights
    grad_b = dlogits.sum(axis=0)
    return loss, grad_w, grad_b


class LinearSoftmaxClassifier(BaseEstimator, ClassifierMixin):
    """Multinomial logistic regression over fixed document embeddings.

    sklearn-style estimator: hyperparameters in the constructor, learned
    state in ``weights_`` and ``bias_``. Initialization is all-zero, so
    with identical inputs and seed the fitted weights are bit-identical.
    """

    def __init__(self, learning_rate=0.5, epochs=100, l2=1e-4, batch_size=32,
                 seed=0, num_classes=None):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.l2 = l2
        self.batch_size = batch_size
        self.seed = seed
        self.num_classes = num_classes

    def fit(self, X, y):
        X = check_feature_matrix(X)
        y = check_class_labels(y, X.shape[0], self.num_classes)
        if np.unique(y).size < 2:
            raise DegenerateLabels(
                f"training labels cover {np.unique(y).size} class(es); need at least 2"
            )
        n_classes = self.num_classes if self.num_classes is not None else int(y.max()) + 1
        n, dim = X.shape
        weights = np.zeros((n_classes, dim))
        bias = np.zeros(n_classes)
        rng = np.random.default_rng(self.seed)
        for _ in range(self.epochs):
            order = rng.permutation(n)
            for start in range(0, n, self.batch_size):
                batch = order[start:start + self.batch_size]
                _, gw, gb = cross_entropy_loss_and_grad(
                    weights, bias, X[batch], y[batch], self.l2
                )
                weights -= self.learning_rate * gw
                bias -= self.learning_rate * gb
        self.weights_ = weights
        self.bias_ = bias
        self.classes_ = np.arange(n_classes)
        return self

    def decision_function(self, X):
        X = check_feature_matrix(X, self.weights_.shape[1])
        return X @ self.weights_.T + self.bias_

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        # argmax takes the first maximum, i.e. ties go to the lowest class.
        return np.argmax(self.predict_proba(X), axis=1)


def _gather(store: EmbeddingStore, ids: list[str]) -> np.ndarray:
    rows = []
    for doc_id in ids:
        vec = store.doc_vectors.get(doc_id)
        if vec is None:
            raise MissingDocVector(doc_id)
        rows.append(vec)
    return np.asarray(rows, dtype=np.float64)


def train(
    store: EmbeddingStore,
    labels: PseudoLabelSet,
    cfg: TrainConfig,
    seed: int = 0,
    num_classes: int | None = None,
) -> LinearSoftmaxClassifier:
    """Fit a classifier on pseudo-labeled document embeddings.

    Training rows are ordered by document id, so the result depends only
    on the assignments, the config, and the seed.
    """
    if not labels.assignments:
        raise DegenerateLabels("empty pseudo-label set")
    ids = sorted(labels.assignments)
    X = _gather(store, ids)
    y = np.array([labels.assignments[i][0] for i in ids], dtype=np.int64)
    model = LinearSoftmaxClassifier(
        learning_rate=cfg.learning_rate, epochs=cfg.epochs, l2=cfg.l2,
        batch_size=cfg.batch_size, seed=seed, num_classes=num_classes,
    )
    return model.fit(X, y)


def predict(
    model: LinearSoftmaxClassifier,
    store: EmbeddingStore,
    ids: list[str],
) -> list[tuple[int, float]]:
    """Predicted class and max-softmax confidence for each document id."""
    if not ids:
        return []
    probs = model.predict_proba(_gather(store, ids))
    picks = np.argmax(probs, axis=1)
    return [(int(c), float(p[c])) for c, p in zip(picks, probs)]


@dataclass
class SelfTrainResult:
    model: LinearSoftmaxClassifier
    rounds: int
    history: list[float] = field(default_factory=list)
    report: list[dict] = field(default_factory=list)
    no_confident_stop: bool = False
    stop_reason: str | None = None

    def dump_report(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for row in self.report:
                fh.write(json.dumps(row) + "\n")


def self_train(
    model: LinearSoftmaxClassifier,
    store: EmbeddingStore,
    corpus: Corpus,
    cfg: TrainConfig,
) -> SelfTrainResult:
    """Refine the classifier on its own confident predictions.

    Each round predicts the whole corpus, keeps documents whose max
    softmax probability exceeds ``cfg.gamma`` as hard labels, retrains
    from scratch with the same config and seed, and stops once the
    fraction of corpus documents whose predicted label changed drops
    below ``cfg.stop_frac`` (or after ``cfg.max_st_rounds`` rounds).
    A round with no confident examples stops early with a warning flag.
    """
    ids = corpus.ids
    X = _gather(store, ids)
    num_classes = model.weights_.shape[0]
    prev_labels = model.predict(X)
    history: list[float] = []
    report: list[dict] = []
    rounds = 0
    current = model
    no_confident = False
    stop_reason = None
    for rnd in range(1, cfg.max_st_rounds + 1):
        probs = current.predict_proba(X)
        conf = probs.max(axis=1)
        hard = np.argmax(probs, axis=1)
        mask = conf > cfg.gamma
        n_confident = int(mask.sum())
        if n_confident == 0:
            report.append({"round": rnd, "n_confident": 0, "change_frac": None})
            no_confident = True
            stop_reason = "no_confident_examples"
            break
        if np.unique(hard[mask]).size < 2:
            report.append({"round": rnd, "n_confident": n_confident, "change_frac": None})
            stop_reason = "degenerate_confident_labels"
            break
        retrained = LinearSoftmaxClassifier(
            learning_rate=cfg.learning_rate, epochs=cfg.epochs, l2=cfg.l2,
            batch_size=cfg.batch_size, seed=current.seed, num_classes=num_classes,
        ).fit(X[mask], hard[mask])
        new_labels = retrained.predict(X)
        change_frac = float(np.mean(new_labels != prev_labels))
        rounds = rnd
        history.append(change_frac)
        report.append({
            "round": rnd, "n_confident": n_confident, "change_frac": change_frac,
        })
        current = retrained
        prev_labels = new_labels
        if change_frac < cfg.stop_frac:
            break
    return SelfTrainResult(
        model=current, rounds=rounds, history=history, report=report,
        no_confident_stop=no_confident, stop_reason=stop_reason,
    )


def _seed_chunks(seed: int) -> list[float]:
    # 64-bit seed split into 16-bit chunks so it survives float32 storage.
    if seed < 0 or seed >= 2**64:
        raise ValueError("seed must fit in an unsigned 64-bit integer")
    return [float((seed >> (16 * i)) & 0xFFFF) for i in range(4)]


def save_model(model: LinearSoftmaxClassifier, path) -> None:
    """Persist weights in the WNDR vector format.

    Records are padded to a common width; the true (classes, dim) shape
    and the seed chunks live in auxiliary records.
    """
    n_classes, dim = model.weights_.shape
    width = max(dim, n_classes, 4)

    def pad(vec):
        out = np.zeros(width, dtype=np.float32)
        out[: len(vec)] = vec
        return out

    records = {"shape": pad([n_classes, dim]), "seed": pad(_seed_chunks(model.seed))}
    for c in range(n_classes):
        records[f"w:{c}"] = pad(model.weights_[c])
    records["b"] = pad(model.bias_)
    write_vectors(path, records, width)


def load_model(path) -> LinearSoftmaxClassifier:
    _, records = read_vectors(path)
    n_classes, dim = (int(v) for v in records["shape"][:2])
    seed = sum(int(records["seed"][i]) << (16 * i) for i in range(4))
    model = LinearSoftmaxClassifier(seed=seed, num_classes=n_classes)
    model.weights_ = np.stack(
        [records[f"w:{c}"][:dim] for c in range(n_classes)]
    ).astype(np.float64)
    model.bias_ = records["b"][:n_classes].astype(np.float64)
    model.classes_ = np.arange(n_classes)
    return model
