"""Softmax regression and one-vs-rest linear SVM trained with Adam."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ContractError, NumericError
from .optim import Adam, EpochBatcher


@dataclass
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    classes: tuple

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        self.classes = tuple(self.classes)
        if self.X.ndim != 2 or self.X.shape[0] < 1:
            raise ContractError("feature matrix must be 2-d with at least one row")
        if self.y.shape != (self.X.shape[0],):
            raise ContractError("labels must be one per row")
        if not np.isfinite(self.X).all():
            raise ContractError("feature matrix has non-finite entries")
        if self.y.min() < 0 or self.y.max() >= len(self.classes):
            raise ContractError("labels out of range for the class list")

    @property
    def n_classes(self):
        return len(self.classes)

    @property
    def dim(self):
        return self.X.shape[1]

    def subset(self, idx):
        return FeatureMatrix(self.X[idx], self.y[idx], self.classes)


@dataclass
class LinearModel:
    kind: str                  # "logreg" | "svm"
    W: np.ndarray              # (K, d)
    b: np.ndarray              # (K,)
    classes: tuple
    params: dict = field(default_factory=dict)
    featurizer: Optional[dict] = None

    @property
    def dim(self):
        return self.W.shape[1]

    def decision_function(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ContractError(f"expected {self.dim} features, got {X.shape[1]}")
        return X @ self.W.T + self.b

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


def softmax(scores):
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(scores):
    z = scores - scores.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def predict_proba(model: LinearModel, X):
    if model.kind != "logreg":
        raise ContractError("predict_proba is defined for logistic regression only")
    return softmax(model.decision_function(X))


def weighted_xent_grad(W, b, X, y, weights, l2=0.0):
    """``sum_i w_i * CE_i + (l2/2)|W|^2`` and its gradient.

    Plain mean cross-entropy is ``weights = 1/n``; masked variants pass zeros.
    """
    scores = X @ W.T + b
    logp = log_softmax(scores)
    n = X.shape[0]
    loss = -(weights * logp[np.arange(n), y]).sum() + 0.5 * l2 * (W * W).sum()
    delta = np.exp(logp)
    delta[np.arange(n), y] -= 1.0
    delta *= weights[:, None]
    return loss, delta.T @ X + l2 * W, delta.sum(axis=0)


def logreg_loss_grad(W, b, X, y, l2=0.0):
    n = X.shape[0]
    return weighted_xent_grad(W, b, X, y, np.full(n, 1.0 / n), l2)


def _check_finite(loss, what):
    if not np.isfinite(loss):
        raise NumericError(f"{what}: loss became non-finite (learning rate too high?)")


def train_logreg(data: FeatureMatrix, l2=1e-3, epochs=100, lr=0.01, batch_size=32, seed=0) -> LinearModel:
    """Mini-batch Adam on mean softmax cross-entropy plus (l2/2)|W|^2 from zero init."""
    if l2 < 0:
        raise ContractError("l2 must be nonnegative")
    K, d = data.n_classes, data.dim
    W, b = np.zeros((K, d)), np.zeros(K)
    opt = Adam([W, b], lr=lr)
    batcher = EpochBatcher(data.X.shape[0], batch_size, np.random.default_rng(seed))
    for _ in range(epochs * batcher.batches_per_epoch):
        idx = batcher.next()
        Xb, yb = data.X[idx], data.y[idx]
        loss, gW, gb = weighted_xent_grad(W, b, Xb, yb, np.full(len(idx), 1.0 / len(idx)), l2)
        _check_finite(loss, "logreg")
        opt.step([gW, gb])
    params = dict(l2=l2, epochs=epochs, lr=lr, batch_size=batch_size, seed=seed)
    return LinearModel("logreg", W, b, data.classes, params)


def svm_loss_grad(W, b, X, y, C=1.0):
    """One-vs-rest hinge: ``sum_k [mean_i max(0, 1 - y_ik s_ik) + |w_k|^2 / (2C)]``."""
    n, K = X.shape[0], W.shape[0]
    Y = -np.ones((n, K))
    Y[np.arange(n), y] = 1.0
    margins = Y * (X @ W.T + b)
    active = margins < 1.0
    loss = np.where(active, 1.0 - margins, 0.0).sum() / n + (W * W).sum() / (2.0 * C)
    coef = -(Y * active) / n
    return loss, coef.T @ X + W / C, coef.sum(axis=0)


def train_svm(data: FeatureMatrix, C=1.0, epochs=100, lr=0.01, batch_size=32, seed=0) -> LinearModel:
    if not C > 0:
        raise ContractError("SVM C must be > 0")
    K, d = data.n_classes, data.dim
    W, b = np.zeros((K, d)), np.zeros(K)
    opt = Adam([W, b], lr=lr)
    batcher = EpochBatcher(data.X.shape[0], batch_size, np.random.default_rng(seed))
    for _ in range(epochs * batcher.batches_per_epoch):
        idx = batcher.next()
        loss, gW, gb = svm_loss_grad(W, b, data.X[idx], data.y[idx], C)
        _check_finite(loss, "svm")
        opt.step([gW, gb])
    params = dict(C=C, epochs=epochs, lr=lr, batch_size=batch_size, seed=seed)
    return LinearModel("svm", W, b, data.classes, params)
