"""Small constructed datasets shared across tests."""

import numpy as np

from udatext.classifiers import FeatureMatrix


def separable_2d(n=40, seed=0, margin=1.0):
    """Two classes split by the sign of x1 with |x1| >= margin."""
    r = np.random.default_rng(seed)
    x1 = r.uniform(margin, 3.0, n) * np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    x2 = r.normal(0, 1.0, n)
    X = np.column_stack([x1, x2])
    y = (x1 > 0).astype(np.int64)
    return FeatureMatrix(X, y, ["neg", "pos"])


def blobs(n_per=20, K=3, d=4, seed=0, spread=0.5):
    r = np.random.default_rng(seed)
    centers = r.normal(0, 3.0, (K, d))
    X = np.vstack([centers[k] + spread * r.normal(size=(n_per, d)) for k in range(K)])
    y = np.repeat(np.arange(K), n_per)
    return FeatureMatrix(X, y, [f"k{k}" for k in range(K)])
