"""Linear classifiers trained on relevance labels.

Logistic regression minimizes L2-regularized log loss by full-batch
gradient descent; the linear SVM minimizes L2-regularized hinge loss by
deterministic full-batch subgradient descent on a Pegasos-style 1/(lambda*t)
schedule. Both start from zero weights, weight examples inversely to class
frequency, and are fully deterministic given their inputs, so retraining
from scratch every turn reproduces sessions bit for bit.

Other classifier kinds (tree ensembles and the like) can be plugged in via
``register_classifier`` as long as they satisfy the same train contract.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import sparse as sp
from scipy.special import expit

from .embeddings import DenseVector, SparseVector, Vector
from .errors import DimensionMismatch, SingleClass

RELEVANT = "relevant"
IRRELEVANT = "irrelevant"
LABEL_VALUES = (RELEVANT, IRRELEVANT)

LOGISTIC_REGRESSION = "logistic-regression"
LINEAR_SVM = "linear-svm"


@dataclass(frozen=True)
class ClassifierConfig:
    kind: str = LOGISTIC_REGRESSION
    regularization: float = 0.01
    iterations: int = 200
    step_size: float = 0.1
    seed: int = 0


def design_matrix(features: Sequence[Vector], dimension: int | None = None):
    """Stack feature vectors into a matrix: CSR for sparse vectors, a dense
    ndarray for dense ones. Mixing kinds is a dimension error."""
    if not features:
        raise ValueError("no feature vectors given")
    if all(isinstance(f, SparseVector) for f in features):
        max_index = max((e[0] for f in features for e in f.entries), default=-1)
        if dimension is None:
            dimension = max_index + 1 or 1
        elif max_index >= dimension:
            raise DimensionMismatch(
                f"feature index {max_index} outside dimension {dimension}"
            )
        indptr = [0]
        indices: list[int] = []
        data: list[float] = []
        for f in features:
            for index, weight in f.entries:
                indices.append(index)
                data.append(weight)
            indptr.append(len(indices))
        return sp.csr_matrix(
            (data, indices, indptr), shape=(len(features), dimension)
        )
    if all(isinstance(f, DenseVector) for f in features):
        dims = {len(f.values) for f in features}
        if len(dims) > 1:
            raise DimensionMismatch(f"mixed dense dimensions {sorted(dims)}")
        width = dims.pop()
        if dimension is not None and dimension != width:
            raise DimensionMismatch(
                f"dense width {width} != requested dimension {dimension}"
            )
        return np.array([f.values for f in features], dtype=np.float64)
    raise DimensionMismatch("cannot mix sparse and dense feature vectors")


def logistic_loss_and_gradient(
    weights: np.ndarray,
    bias: float,
    X,
    y: np.ndarray,
    sample_weight: np.ndarray,
    l2: float,
) -> tuple[float, np.ndarray, float]:
    """Weighted mean log loss plus (l2/2)*||w||^2, with its analytic
    gradient. The bias is not regularized."""
    n = X.shape[0]
    z = X @ weights + bias
    per_example = y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z)
    loss = float(np.mean(sample_weight * per_example) + 0.5 * l2 * weights @ weights)
    residual = sample_weight * (expit(z) - y) / n
    grad_w = X.T @ residual + l2 * weights
    grad_b = float(residual.sum())
    return loss, np.asarray(grad_w).ravel(), grad_b


@dataclass
class LinearClassifier:
    kind: str
    weights: np.ndarray
    bias: float

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]

    def decision(self, feature: Vector) -> float:
        if isinstance(feature, SparseVector):
            total = self.bias
            for index, weight in feature.entries:
                if index >= self.dimension:
                    raise DimensionMismatch(
                        f"feature index {index} outside dimension {self.dimension}"
                    )
                total += self.weights[index] * weight
            return total
        if len(feature.values) != self.dimension:
            raise DimensionMismatch(
                f"dense width {len(feature.values)} != {self.dimension}"
            )
        return float(np.dot(self.weights, feature.values) + self.bias)

    def score(self, feature: Vector) -> float:
        """Relevance score in [0, 1]: sigmoid of the decision value."""
        return float(expit(self.decision(feature)))

    def score_many(self, features: Sequence[Vector]) -> np.ndarray:
        if not features:
            return np.zeros(0)
        X = design_matrix(features, dimension=self.dimension)
        return expit(np.asarray(X @ self.weights).ravel() + self.bias)


def _class_weights(y: np.ndarray) -> np.ndarray:
    n = y.shape[0]
    n_pos = int(y.sum())
    n_neg = n - n_pos
    weight_pos = n / (2.0 * n_pos)
    weight_neg = n / (2.0 * n_neg)
    return np.where(y == 1.0, weight_pos, weight_neg)


def _train_logistic(X, y, sample_weight, config: ClassifierConfig):
    weights = np.zeros(X.shape[1])
    bias = 0.0
    for _ in range(config.iterations):
        _, grad_w, grad_b = logistic_loss_and_gradient(
            weights, bias, X, y, sample_weight, config.regularization
        )
        weights -= config.step_size * grad_w
        bias -= config.step_size * grad_b
    return weights, bias


def _train_svm(X, y, sample_weight, config: ClassifierConfig):
    n = X.shape[0]
    signs = 2.0 * y - 1.0
    weights = np.zeros(X.shape[1])
    bias = 0.0
    lam = config.regularization
    for t in range(1, config.iterations + 1):
        step = 1.0 / (lam * t)
        margins = signs * (np.asarray(X @ weights).ravel() + bias)
        active = sample_weight * signs * (margins < 1.0)
        grad_w = lam * weights - np.asarray(X.T @ active).ravel() / n
        grad_b = -float(active.sum()) / n
        weights -= step * grad_w
        bias -= step * grad_b
    return weights, bias


_TRAINERS: dict[str, Callable] = {
    LOGISTIC_REGRESSION: _train_logistic,
    LINEAR_SVM: _train_svm,
}


def register_classifier(kind: str, trainer: Callable) -> None:
    """Plug in an extra trainer: (X, y, sample_weight, config) -> (w, b)."""
    _TRAINERS[kind] = trainer


def train(
    features: Sequence[Vector],
    labels: Sequence[str],
    config: ClassifierConfig,
    dimension: int | None = None,
) -> LinearClassifier:
    """Fit a classifier on labeled feature vectors.

    Requires at least one example of each class; callers fall back to
    plain similarity ranking until that holds.
    """
    if len(features) != len(labels):
        raise ValueError("features and labels must have equal length")
    if not features:
        raise SingleClass("no labeled examples")
    for label in labels:
        if label not in LABEL_VALUES:
            raise ValueError(f"unknown label {label!r}")
    y = np.array([1.0 if label == RELEVANT else 0.0 for label in labels])
    if y.min() == y.max():
        raise SingleClass("training requires both relevant and irrelevant examples")
    if config.kind not in _TRAINERS:
        raise ValueError(f"unknown classifier kind {config.kind!r}")
    X = design_matrix(features, dimension=dimension)
    sample_weight = _class_weights(y)
    weights, bias = _TRAINERS[config.kind](X, y, sample_weight, config)
    return LinearClassifier(kind=config.kind, weights=weights, bias=bias)
