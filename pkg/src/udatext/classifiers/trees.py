"""CART trees, random forests and softmax gradient boosting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import ContractError
from .linear import FeatureMatrix, log_softmax, softmax


@dataclass
class Tree:
    """Flat binary tree; ``feature[i] == -1`` marks a leaf holding ``value[i]``.

    Rows with ``x[feature] <= threshold`` go left.
    """

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray          # (n_nodes, width)

    @property
    def n_nodes(self):
        return len(self.feature)

    def apply(self, X):
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            go_left = X[rows, np.where(inner, f, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)

    def predict(self, X):
        return self.value[self.apply(X)]

    def to_json(self, i=0):
        if self.feature[i] < 0:
            return {"leaf": [float(v) for v in self.value[i]]}
        return {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                "left": self.to_json(int(self.left[i])), "right": self.to_json(int(self.right[i]))}

    @classmethod
    def from_json(cls, obj):
        feature, threshold, left, right, value = [], [], [], [], []

        def add(node):
            i = len(feature)
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            value.append(None)
            if "leaf" in node:
                value[i] = [float(v) for v in node["leaf"]]
            else:
                feature[i] = int(node["feature"])
                threshold[i] = float(node["threshold"])
                left[i] = add(node["left"])
                right[i] = add(node["right"])
            return i

        add(obj)
        width = max(len(v) for v in value if v is not None)
        vals = np.zeros((len(value), width))
        for i, v in enumerate(value):
            if v is not None:
                vals[i] = v
        return cls(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                   np.array(right, dtype=np.int64), vals)


def _best_split(X, idx, target, criterion, features, min_leaf):
    """Return (feature, threshold, left_idx, right_idx) or None."""
    best_score, best = -np.inf, None
    n = len(idx)
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs = xs[order]
        t = target[idx][order]
        n_left = np.arange(1, n)
        n_right = n - n_left
        ok = (xs[:-1] < xs[1:]) & (n_left >= min_leaf) & (n_right >= min_leaf)
        if not ok.any():
            continue
        if criterion == "gini":
            # minimize weighted gini <=> maximize sum_c cl^2/nl + sum_c cr^2/nr
            cum = np.cumsum(t, axis=0)[:-1]
            tot = cum[-1] + t[-1]
            score = (cum ** 2).sum(axis=1) / n_left + ((tot - cum) ** 2).sum(axis=1) / n_right
        else:
            cum = np.cumsum(t)[:-1]
            tot = cum[-1] + t[-1]
            score = cum ** 2 / n_left + (tot - cum) ** 2 / n_right
        score = np.where(ok, score, -np.inf)
        j = int(np.argmax(score))
        if score[j] > best_score:
            thr = 0.5 * (xs[j] + xs[j + 1])
            if not xs[j] <= thr < xs[j + 1]:
                thr = xs[j]
            best_score = score[j]
            best = (f, thr, idx[order[:j + 1]], idx[order[j + 1:]])
    return best


def grow_tree(X, target, criterion="gini", max_depth=None, min_leaf=1, max_features=None, rng=None) -> Tree:
    """Grow one CART tree depth-first.

    ``criterion="gini"`` expects ``target`` as a one-hot (n, K) matrix and stores
    class proportions in the leaves; ``"mse"`` expects a 1-d target and stores
    the mean. A node splits whenever it is impure and some split leaves at least
    ``min_leaf`` rows per side, even when the impurity does not drop.
    """
    d = X.shape[1]
    n_feat = d if max_features is None else max_features
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx):
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        if criterion == "gini":
            counts = target[idx].sum(axis=0)
            value.append(counts / counts.sum())
        else:
            value.append(np.array([target[idx].mean()]))
        return len(feature) - 1

    def pure(idx):
        t = target[idx]
        if criterion == "gini":
            return np.count_nonzero(t.sum(axis=0)) <= 1
        return bool(np.all(t == t[0]))

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if (max_depth is not None and depth >= max_depth) or len(idx) < 2 * min_leaf or pure(idx):
            continue
        if n_feat >= d and rng is None:
            features = range(d)
        else:
            features = rng.choice(d, size=min(n_feat, d), replace=False)
        split = _best_split(X, idx, target, criterion, features, min_leaf)
        if split is None:
            continue
        f, thr, li, ri = split
        feature[node], threshold[node] = int(f), float(thr)
        left[node], right[node] = new_node(li), new_node(ri)
        # right pushed first so the left subtree is expanded first
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.vstack(value))


@dataclass
class TreeEnsembleModel:
    kind: str                              # "rf" | "gb"
    trees: list
    classes: tuple
    dim: int
    shrinkage: float = 1.0
    base_score: Optional[np.ndarray] = None
    params: dict = field(default_factory=dict)
    featurizer: Optional[dict] = None

    def _check(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.dim:
            raise ContractError(f"expected {self.dim} features, got {X.shape[1]}")
        return X

    def decision_function(self, X):
        """RF: mean leaf class proportions. GB: accumulated raw scores."""
        X = self._check(X)
        K = len(self.classes)
        if self.kind == "rf":
            out = np.zeros((X.shape[0], K))
            for tree in self.trees:
                out += tree.predict(X)
            return out / max(1, len(self.trees))
        out = np.tile(self.base_score, (X.shape[0], 1))
        for i, tree in enumerate(self.trees):
            out[:, i % K] += self.shrinkage * tree.predict(X)[:, 0]
        return out

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)


def _max_features(spec, d):
    if spec is None or spec == "all":
        return d
    if spec == "sqrt":
        return math.ceil(math.sqrt(d))
    spec = int(spec)
    if spec < 1:
        raise ContractError("max_features must be >= 1")
    return min(spec, d)


def train_random_forest(data: FeatureMatrix, n_trees=100, max_depth=None, min_leaf=1, seed=0,
                        max_features="sqrt", bootstrap=True) -> TreeEnsembleModel:
    """Gini CART trees on seeded bootstrap samples, ``ceil(sqrt(d))`` features per node."""
    if n_trees < 1:
        raise ContractError("n_trees must be >= 1")
    if min_leaf < 1 or (max_depth is not None and max_depth < 1):
        raise ContractError("min_leaf and max_depth must be >= 1")
    n, d = data.X.shape
    onehot = np.eye(data.n_classes)[data.y]
    m = _max_features(max_features, d)
    trees = []
    for child in np.random.SeedSequence(seed).spawn(n_trees):
        rng = np.random.default_rng(child)
        rows = rng.integers(n, size=n) if bootstrap else np.arange(n)
        trees.append(grow_tree(data.X[rows], onehot[rows], "gini", max_depth, min_leaf, m, rng))
    params = dict(n_trees=n_trees, max_depth=max_depth, min_leaf=min_leaf, seed=seed,
                  max_features=max_features, bootstrap=bootstrap)
    return TreeEnsembleModel("rf", trees, data.classes, d, params=params)


def log_priors(y, K):
    counts = np.bincount(y, minlength=K).astype(float)
    return np.log(np.maximum(counts / counts.sum(), 1e-12))


def train_gradient_boost(data: FeatureMatrix, n_rounds=100, shrinkage=0.1, max_depth=3, seed=0,
                         min_leaf=1, subsample=1.0) -> TreeEnsembleModel:
    """Multiclass boosting on softmax residuals, one regression tree per class per round."""
    if not 0.0 < shrinkage <= 1.0:
        raise ContractError("shrinkage must lie in (0, 1]")
    if n_rounds < 0 or max_depth < 1 or min_leaf < 1:
        raise ContractError("n_rounds >= 0, max_depth >= 1 and min_leaf >= 1 required")
    if not 0.0 < subsample <= 1.0:
        raise ContractError("subsample must lie in (0, 1]")
    n, d = data.X.shape
    K = data.n_classes
    Y = np.eye(K)[data.y]
    base = log_priors(data.y, K)
    F = np.tile(base, (n, 1))
    rng = np.random.default_rng(seed)
    trees = []
    for _ in range(n_rounds):
        R = Y - softmax(F)
        rows = np.arange(n)
        if subsample < 1.0:
            rows = np.sort(rng.choice(n, size=max(1, int(round(subsample * n))), replace=False))
        for k in range(K):
            tree = grow_tree(data.X[rows], R[rows, k], "mse", max_depth, min_leaf)
            trees.append(tree)
            F[:, k] += shrinkage * tree.predict(data.X)[:, 0]
    params = dict(n_rounds=n_rounds, shrinkage=shrinkage, max_depth=max_depth, seed=seed,
                  min_leaf=min_leaf, subsample=subsample)
    return TreeEnsembleModel("gb", trees, data.classes, d, shrinkage, base, params)


def boosting_stage_losses(model: TreeEnsembleModel, data: FeatureMatrix) -> list:
    """Mean training cross-entropy after 0, 1, ..., n_rounds rounds."""
    K = len(model.classes)
    n = data.X.shape[0]
    F = np.tile(model.base_score, (n, 1))
    rows = np.arange(n)
    out = [float(-log_softmax(F)[rows, data.y].mean())]
    for i, tree in enumerate(model.trees):
        F[:, i % K] += model.shrinkage * tree.predict(data.X)[:, 0]
        if i % K == K - 1:
            out.append(float(-log_softmax(F)[rows, data.y].mean()))
    return out
