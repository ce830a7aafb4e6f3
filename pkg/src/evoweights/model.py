"""Weighted binary classifiers: logistic regression and a random forest.

Both honour per-row sample weights and are bit-for-bit reproducible for a
fixed (spec, X, y, weights).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from . import kernels
from .errors import AllZeroWeights, ConfigError, DegenerateLabels, NegativeWeight, ShapeMismatch


class ModelKind(str, Enum):
    LOGISTIC = "logistic"
    FOREST = "forest"


@dataclass(frozen=True)
class LogisticParams:
    learning_rate: float = 0.5
    iterations: int = 200
    l2_penalty: float = 1e-3


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_depth: int = 8
    min_leaf_weight: float = 1.0
    features_per_split_fraction: float | None = None  # None: sqrt(n_features) columns
    bootstrap: bool = True


@dataclass(frozen=True)
class ModelSpec:
    kind: ModelKind = ModelKind.LOGISTIC
    hyperparameters: LogisticParams | ForestParams = field(default_factory=LogisticParams)
    seed: int = 0

    def __post_init__(self):
        kind = ModelKind(self.kind)
        object.__setattr__(self, "kind", kind)
        hp = self.hyperparameters
        if kind is ModelKind.LOGISTIC:
            if not isinstance(hp, LogisticParams):
                raise ConfigError("logistic model needs LogisticParams")
            if hp.learning_rate <= 0 or hp.iterations < 1 or hp.l2_penalty < 0:
                raise ConfigError(f"invalid logistic hyperparameters {hp}")
        else:
            if not isinstance(hp, ForestParams):
                raise ConfigError("forest model needs ForestParams")
            frac = hp.features_per_split_fraction
            if hp.n_trees < 1 or hp.max_depth < 0 or hp.min_leaf_weight < 0 or (
                    frac is not None and not 0.0 < frac <= 1.0):
                raise ConfigError(f"invalid forest hyperparameters {hp}")

    @classmethod
    def logistic(cls, seed: int = 0, **params) -> "ModelSpec":
        return cls(ModelKind.LOGISTIC, LogisticParams(**params), seed)

    @classmethod
    def forest(cls, seed: int = 0, **params) -> "ModelSpec":
        return cls(ModelKind.FOREST, ForestParams(**params), seed)

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.kind, self.hyperparameters, int(seed))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "hyperparameters": asdict(self.hyperparameters), "seed": self.seed}

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelSpec":
        kind = ModelKind(doc["kind"])
        params = LogisticParams if kind is ModelKind.LOGISTIC else ForestParams
        return cls(kind, params(**doc.get("hyperparameters", {})), int(doc.get("seed", 0)))


class FitCounter:
    """Counts model fits; the harness uses it to audit evaluation budgets."""

    def __init__(self):
        self.fits = 0

    def __call__(self):
        self.fits += 1


@dataclass(frozen=True, eq=False)
class FittedModel:
    spec: ModelSpec
    n_features: int
    state: dict

    def predict_scores(self, X) -> np.ndarray:
        return predict_scores(self, X)

    def predict_labels(self, X) -> np.ndarray:
        return (self.predict_scores(X) >= 0.5).astype(np.int64)


def _validate(X, y, weights):
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    w = np.asarray(weights, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0] or w.shape != y.shape:
        raise ShapeMismatch("X, y and weights disagree in shape")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise NegativeWeight("sample weights must be finite and nonnegative")
    if not np.all((y == 0) | (y == 1)):
        raise DegenerateLabels("labels must be 0/1")
    n1 = np.count_nonzero(y == 1)
    if n1 == 0 or n1 == y.size:
        raise DegenerateLabels("training labels contain a single class")
    if w.sum() <= 0:
        raise AllZeroWeights("all sample weights are zero")
    for cls in (0, 1):
        if w[y == cls].sum() <= 0:
            raise AllZeroWeights(f"every class-{cls} row has zero weight")
    return X, y.astype(np.float64), w


def fit(spec: ModelSpec, X, y, weights, counter: FitCounter | None = None) -> FittedModel:
    """Train the model described by ``spec`` with per-row ``weights``.

    The logistic model standardizes columns with weighted moments and then
    runs full-batch gradient descent on the weight-normalized log-loss, so
    rescaling all weights by a positive constant leaves the fit unchanged.
    Its seed is unused. The forest draws one uniform bootstrap per tree
    from ``spec.seed``.
    """
    X, y, w = _validate(X, y, weights)
    if counter is not None:
        counter()
    if spec.kind is ModelKind.LOGISTIC:
        state = _fit_logistic(spec.hyperparameters, X, y, w)
    else:
        state = _fit_forest(spec.hyperparameters, spec.seed, X, y, w)
    return FittedModel(spec, X.shape[1], state)


def _fit_logistic(hp: LogisticParams, X, y, w) -> dict:
    wsum = w.sum()
    mean = (w @ X) / wsum
    scale = np.sqrt((w @ (X - mean) ** 2) / wsum)
    scale[scale == 0] = 1.0
    Z = (X - mean) / scale
    coef, intercept = kernels.logistic_gd(Z, y, w, hp.learning_rate, hp.iterations, hp.l2_penalty)
    return {"mean": mean, "scale": scale, "coef": coef, "intercept": intercept}


def _fit_forest(hp: ForestParams, seed: int, X, y, w) -> dict:
    n, d = X.shape
    rng = np.random.default_rng(seed)
    frac = hp.features_per_split_fraction
    n_try = max(1, round(math.sqrt(d))) if frac is None else max(1, round(frac * d))
    n_try = min(n_try, d)
    root_value = float((w @ y) / w.sum())
    trees = []
    for _ in range(hp.n_trees):
        if hp.bootstrap:
            counts = np.bincount(rng.integers(0, n, size=n), minlength=n)
        else:
            counts = np.ones(n, dtype=np.int64)
        rows = np.flatnonzero(counts)
        wt = w[rows] * counts[rows]
        min_weight = hp.min_leaf_weight * wt.sum() / counts.sum()
        max_nodes = min(2 ** (hp.max_depth + 1) - 1, 2 * rows.size - 1)
        keys = rng.random((max_nodes, d))
        trees.append(kernels.grow_tree(X[rows], y[rows], wt, hp.max_depth, min_weight,
                                       n_try, keys, root_value))
    return {"trees": trees}


def predict_scores(m: FittedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != m.n_features:
        raise ShapeMismatch(f"expected {m.n_features} feature columns, got shape {X.shape}")
    st = m.state
    if m.spec.kind is ModelKind.LOGISTIC:
        z = ((X - st["mean"]) / st["scale"]) @ st["coef"] + st["intercept"]
        return kernels.sigmoid(z)
    total = np.zeros(X.shape[0])
    for tree in st["trees"]:
        total += kernels.tree_predict(X, tree)
    return total / len(st["trees"])


def predict_labels(m: FittedModel, X) -> np.ndarray:
    return m.predict_labels(X)
