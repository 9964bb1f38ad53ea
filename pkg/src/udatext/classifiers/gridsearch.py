from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractError
from .linear import FeatureMatrix, train_logreg, train_svm
from .trees import train_gradient_boost, train_random_forest

TRAINERS = {
    "logreg": train_logreg,
    "svm": train_svm,
    "rf": train_random_forest,
    "gb": train_gradient_boost,
}

DEFAULT_GRIDS = {
    "logreg": {"l2": [1e-4, 1e-3, 1e-2, 1e-1]},
    "svm": {"C": [0.1, 1.0, 10.0]},
    "rf": {"n_trees": [100, 300], "max_depth": [8, 16, None]},
    "gb": {"shrinkage": [0.05, 0.1], "n_rounds": [100, 200], "max_depth": [2, 3]},
}


@dataclass(frozen=True)
class GridSpec:
    params: dict = field(default_factory=dict)
    folds: int = 5
    seed: int = 0

    def configs(self) -> list:
        names = list(self.params)
        combos = itertools.product(*(self.params[k] for k in names))
        out = [dict(zip(names, c)) for c in combos]
        if not out:
            raise ContractError("grid has no configurations")
        return out


def stratified_folds(y, folds: int, seed: int = 0, classes=None) -> list:
    """Partition row indices into ``folds`` folds, per-class sizes within one.

    Each class is shuffled and dealt round-robin; the dealing offset carries over
    between classes so overall fold sizes also stay balanced.
    """
    if folds < 2:
        raise ContractError("need at least 2 folds")
    y = np.asarray(y)
    labels = np.unique(y) if classes is None else range(len(classes))
    rng = np.random.default_rng(seed)
    buckets = [[] for _ in range(folds)]
    offset = 0
    for c in labels:
        rows = np.flatnonzero(y == c)
        if 0 < len(rows) < folds:
            name = classes[c] if classes is not None else c
            raise ContractError(f"class {name!r} has {len(rows)} examples, fewer than {folds} folds")
        for j, r in enumerate(rng.permutation(rows)):
            buckets[(offset + j) % folds].append(r)
        offset = (offset + len(rows)) % folds
    return [np.sort(np.array(b, dtype=np.int64)) for b in buckets]


def cross_val_accuracy(kind, data: FeatureMatrix, params: dict, folds, seed=0) -> list:
    trainer = TRAINERS[kind]
    scores = []
    all_rows = np.arange(data.X.shape[0])
    for fold in folds:
        train_rows = np.setdiff1d(all_rows, fold)
        model = trainer(data.subset(train_rows), seed=seed, **params)
        scores.append(float(np.mean(model.predict(data.X[fold]) == data.y[fold])))
    return scores


def grid_search_cv(kind: str, data: FeatureMatrix, grid: GridSpec):
    """Mean/std fold accuracy per config; best is the highest mean, earliest on ties.

    Returns ``(best_params, table)`` where ``table`` rows are dicts with
    ``params``, ``mean``, ``std`` and ``scores``.
    """
    if kind not in TRAINERS:
        raise ContractError(f"unknown model kind {kind!r}")
    folds = stratified_folds(data.y, grid.folds, grid.seed, data.classes)
    table = []
    for params in grid.configs():
        scores = cross_val_accuracy(kind, data, params, folds, grid.seed)
        table.append({"params": params, "mean": float(np.mean(scores)),
                      "std": float(np.std(scores)), "scores": scores})
    best = max(range(len(table)), key=lambda i: (table[i]["mean"], -i))
    return table[best]["params"], table
