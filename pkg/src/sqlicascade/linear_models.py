"""Online linear classifiers trained on sparse features.

All models are fitted from scratch here: a margin-driven online updater with
a capped step (the stage-1 workhorse), a perceptron, SGD on hinge and on log
loss, multinomial naive Bayes, and a nearest-centroid baseline.  Scoring is
calibrated so that larger always means more attack-like, and every score is
O(nnz(x)): dense weight vectors, sparse inputs, zero entries skipped.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence, Union

import numpy as np

from .features import SparseMatrix, SparseVector

PA = "pa"
PERCEPTRON = "perceptron"
SGD_HINGE = "sgd_hinge"
SGD_LOG = "sgd_log"
MULTINOMIAL_NB = "multinomial_nb"
NEAREST_CENTROID = "nearest_centroid"

ONLINE_KINDS = (PA, PERCEPTRON, SGD_HINGE, SGD_LOG)
KINDS = ONLINE_KINDS + (MULTINOMIAL_NB, NEAREST_CENTROID)

MODEL_FORMAT = "sqlicascade.model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters shared by all classifier kinds.

    ``class_weights`` is (w_neg, w_pos); kinds apply it differently: the
    margin updater scales its step cap, perceptron/SGD scale the learning
    rate, naive Bayes scales class priors, nearest centroid ignores it.

    ``bias_decay`` damps the intercept step relative to the weight step.
    Sparse rows have tiny norms, so an undamped intercept would dominate
    every online update and make heavily class-weighted fits oscillate.
    """

    epochs: int = 5
    aggressiveness_C: float = 1.0
    learning_rate: float = 1.0
    shuffle_seed: int = 0
    class_weights: tuple[float, float] = (1.0, 1.0)
    nb_alpha: float = 1.0
    bias_decay: float = 0.01

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if not self.aggressiveness_C > 0:
            raise ValueError("aggressiveness_C must be > 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if any(w <= 0 for w in self.class_weights):
            raise ValueError("class weights must be positive")
        if self.bias_decay < 0:
            raise ValueError("bias_decay must be nonnegative")

    def weight_for(self, label: int) -> float:
        return self.class_weights[1] if label == 1 else self.class_weights[0]


@dataclass(frozen=True)
class LinearModel:
    """Affine scorer w.x + b for the online kinds."""

    weights: np.ndarray
    bias: float
    kind: str
    epochs_trained: int = 0
    class_weights: tuple[float, float] = (1.0, 1.0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=np.float64))
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model weights and bias must be finite")

    @property
    def dim(self) -> int:
        return int(self.weights.size)

    def decision_score(self, x: SparseVector) -> float:
        if x.dim != self.dim:
            raise ValueError(f"feature dim {x.dim} != model dim {self.dim}")
        return float(np.dot(self.weights[x.indices], x.values) + self.bias)


@dataclass(frozen=True)
class NbModel:
    """Multinomial naive Bayes over nonnegative term features."""

    class_log_prior: np.ndarray  # shape (2,), [neg, pos]
    feature_log_prob: np.ndarray  # shape (2, dim)
    alpha: float
    kind: str = MULTINOMIAL_NB

    @property
    def dim(self) -> int:
        return int(self.feature_log_prob.shape[1])

    def decision_score(self, x: SparseVector) -> float:
        """Log-posterior difference, positive class minus negative."""
        if x.dim != self.dim:
            raise ValueError(f"feature dim {x.dim} != model dim {self.dim}")
        pos = self.class_log_prior[1] + np.dot(self.feature_log_prob[1, x.indices], x.values)
        neg = self.class_log_prior[0] + np.dot(self.feature_log_prob[0, x.indices], x.values)
        return float(pos - neg)


@dataclass(frozen=True)
class CentroidModel:
    """Per-class mean feature vectors; scores by distance difference."""

    centroids: np.ndarray  # shape (2, dim), [neg, pos]
    kind: str = NEAREST_CENTROID

    def __post_init__(self) -> None:
        object.__setattr__(self, "_sq_norms",
                           (self.centroids ** 2).sum(axis=1))

    @property
    def dim(self) -> int:
        return int(self.centroids.shape[1])

    def decision_score(self, x: SparseVector) -> float:
        """Euclidean distance to the benign centroid minus distance to the attack one."""
        if x.dim != self.dim:
            raise ValueError(f"feature dim {x.dim} != model dim {self.dim}")
        sq = x.sq_norm()
        sq_norms = self._sq_norms  # type: ignore[attr-defined]
        d = []
        for c in (0, 1):
            cross = np.dot(self.centroids[c, x.indices], x.values)
            d.append(math.sqrt(max(0.0, sq - 2.0 * cross + sq_norms[c])))
        return d[0] - d[1]


Model = Union[LinearModel, NbModel, CentroidModel]


def decision_score(model: Model, x: SparseVector) -> float:
    return model.decision_score(x)


def predict(model: Model, x: SparseVector, threshold: float = 0.0) -> int:
    """1 iff the decision score is at or above the threshold."""
    return 1 if model.decision_score(x) >= threshold else 0


def predict_matrix(model: Model, matrix: SparseMatrix, threshold: float = 0.0) -> np.ndarray:
    return np.fromiter(
        (1 if model.decision_score(matrix.row(i)) >= threshold else 0
         for i in range(matrix.rows)),
        dtype=np.int64, count=matrix.rows)


def score_matrix(model: Model, matrix: SparseMatrix) -> np.ndarray:
    return np.fromiter((model.decision_score(matrix.row(i)) for i in range(matrix.rows)),
                       dtype=np.float64, count=matrix.rows)


def pa_step(model: LinearModel, x: SparseVector, y: int, C: float,
            sample_weight: float = 1.0, bias_decay: float = 0.01) -> LinearModel:
    """One margin-driven update with step cap C * sample_weight.

    With hinge loss l = max(0, 1 - y*(w.x + b)), the step is
    tau = min(C * sample_weight, l / ||x||^2); weights move by tau*y*x and the
    bias by the damped tau*y*bias_decay.  Correctly classified examples with
    margin >= 1 and zero-norm inputs are no-ops.
    """
    if y not in (-1, 1):
        raise ValueError("y must be +1 or -1")
    score = model.decision_score(x)
    loss = max(0.0, 1.0 - y * score)
    if loss == 0.0:
        return model
    sq = x.sq_norm()
    if sq == 0.0:
        return model
    tau = min(C * sample_weight, loss / sq)
    new_w = model.weights.copy()
    new_w[x.indices] += tau * y * x.values
    return replace(model, weights=new_w, bias=model.bias + tau * y * bias_decay)


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _fit_online(kind: str, matrix: SparseMatrix, labels: np.ndarray,
                config: TrainConfig) -> LinearModel:
    w = np.zeros(matrix.cols)
    b = 0.0
    rng = np.random.default_rng(config.shuffle_seed)
    signs = 2.0 * labels - 1.0
    weights_per_sample = np.where(labels == 1, config.class_weights[1], config.class_weights[0])
    indptr, indices, data = matrix.indptr, matrix.indices, matrix.data

    for _ in range(config.epochs):
        for i in rng.permutation(matrix.rows):
            lo, hi = indptr[i], indptr[i + 1]
            idx = indices[lo:hi]
            vals = data[lo:hi]
            y = signs[i]
            sw = weights_per_sample[i]
            f = float(np.dot(w[idx], vals) + b)

            if kind == PA:
                loss = 1.0 - y * f
                if loss <= 0.0:
                    continue
                sq = float(np.dot(vals, vals))
                if sq == 0.0:
                    continue
                step = min(config.aggressiveness_C * sw, loss / sq)
            elif kind == PERCEPTRON:
                if y * f > 0.0:
                    continue
                step = config.learning_rate * sw
            elif kind == SGD_HINGE:
                if y * f >= 1.0:
                    continue
                step = config.learning_rate * sw
            else:  # SGD_LOG
                g = _sigmoid(-y * f)
                if g == 0.0:
                    continue
                step = config.learning_rate * sw * g

            w[idx] += step * y * vals
            b += step * y * config.bias_decay

    return LinearModel(weights=w, bias=b, kind=kind,
                       epochs_trained=config.epochs, class_weights=config.class_weights)


def _fit_nb(matrix: SparseMatrix, labels: np.ndarray, config: TrainConfig) -> NbModel:
    counts = np.array([(labels == 0).sum(), (labels == 1).sum()], dtype=np.float64)
    if counts.min() == 0:
        raise ValueError("naive Bayes needs both classes in the training data")

    weighted = counts * np.asarray(config.class_weights)
    class_log_prior = np.log(weighted / weighted.sum())

    feature_totals = np.zeros((2, matrix.cols))
    row_ids = np.repeat(np.arange(matrix.rows), np.diff(matrix.indptr))
    row_labels = labels[row_ids]
    for c in (0, 1):
        mask = row_labels == c
        np.add.at(feature_totals[c], matrix.indices[mask], matrix.data[mask])

    alpha = config.nb_alpha
    smoothed = feature_totals + alpha
    feature_log_prob = np.log(smoothed / smoothed.sum(axis=1, keepdims=True))
    return NbModel(class_log_prior=class_log_prior, feature_log_prob=feature_log_prob,
                   alpha=alpha)


def _fit_centroid(matrix: SparseMatrix, labels: np.ndarray) -> CentroidModel:
    centroids = np.zeros((2, matrix.cols))
    counts = np.array([(labels == 0).sum(), (labels == 1).sum()], dtype=np.float64)
    if counts.min() == 0:
        raise ValueError("nearest centroid needs both classes in the training data")
    row_ids = np.repeat(np.arange(matrix.rows), np.diff(matrix.indptr))
    row_labels = labels[row_ids]
    for c in (0, 1):
        mask = row_labels == c
        np.add.at(centroids[c], matrix.indices[mask], matrix.data[mask])
        centroids[c] /= counts[c]
    return CentroidModel(centroids=centroids)


def fit(kind: str, matrix: SparseMatrix, labels: Sequence[int],
        config: TrainConfig = TrainConfig()) -> Model:
    """Train a classifier of the given kind; deterministic for a fixed config.

    Online kinds run ``config.epochs`` passes with a fresh seeded shuffle per
    epoch.  Naive Bayes and nearest centroid are batch fits.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}")
    y = np.asarray(labels, dtype=np.int64)
    if y.size != matrix.rows:
        raise ValueError(f"{matrix.rows} rows but {y.size} labels")
    if y.size == 0:
        raise ValueError("training data is empty")

    if kind in ONLINE_KINDS:
        return _fit_online(kind, matrix, y, config)
    if kind == MULTINOMIAL_NB:
        return _fit_nb(matrix, y, config)
    return _fit_centroid(matrix, y)


# -- serialization ----------------------------------------------------------

class LoadedModel(NamedTuple):
    model: Model
    threshold: float
    pipeline_id: str | None


def model_to_dict(model: Model, threshold: float = 0.0,
                  pipeline_id: str | None = None) -> dict:
    doc: dict = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "kind": model.kind,
        "threshold": threshold,
        "pipeline_id": pipeline_id,
    }
    if isinstance(model, LinearModel):
        doc["params"] = {
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "epochs_trained": model.epochs_trained,
            "class_weights": list(model.class_weights),
        }
    elif isinstance(model, NbModel):
        doc["params"] = {
            "class_log_prior": model.class_log_prior.tolist(),
            "feature_log_prob": model.feature_log_prob.tolist(),
            "alpha": model.alpha,
        }
    else:
        doc["params"] = {"centroids": model.centroids.tolist()}
    return doc


def model_from_dict(doc: dict) -> LoadedModel:
    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a model document: {doc.get('format')!r}")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')!r}")
    kind = doc["kind"]
    params = doc["params"]
    model: Model
    if kind in ONLINE_KINDS:
        model = LinearModel(
            weights=np.asarray(params["weights"], dtype=np.float64),
            bias=float(params["bias"]),
            kind=kind,
            epochs_trained=int(params.get("epochs_trained", 0)),
            class_weights=tuple(params.get("class_weights", (1.0, 1.0))),  # type: ignore[arg-type]
        )
    elif kind == MULTINOMIAL_NB:
        model = NbModel(
            class_log_prior=np.asarray(params["class_log_prior"], dtype=np.float64),
            feature_log_prob=np.asarray(params["feature_log_prob"], dtype=np.float64),
            alpha=float(params["alpha"]),
        )
    elif kind == NEAREST_CENTROID:
        model = CentroidModel(centroids=np.asarray(params["centroids"], dtype=np.float64))
    else:
        raise ValueError(f"unknown classifier kind {kind!r}")
    return LoadedModel(model, float(doc.get("threshold", 0.0)), doc.get("pipeline_id"))


def save_model(model: Model, path: str | Path, threshold: float = 0.0,
               pipeline_id: str | None = None) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, threshold, pipeline_id)),
                          encoding="utf-8")


def load_model(path: str | Path) -> LoadedModel:
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
