from __future__ import annotations

import numpy as np


class Adam:
    """Adam over a list of arrays, updated in place."""

    def __init__(self, params, lr=0.01, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]

    def step(self, grads):
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(self.params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


class EpochBatcher:
    """Endless mini-batches: reshuffle each epoch, last batch of an epoch may be short."""

    def __init__(self, n, batch_size, rng):
        if n < 1 or batch_size < 1:
            raise ValueError("batcher needs n >= 1 and batch_size >= 1")
        self.n = n
        self.batch_size = batch_size
        self.rng = rng
        self._order = None
        self._pos = 0

    @property
    def batches_per_epoch(self):
        return -(-self.n // self.batch_size)

    def next(self):
        if self._order is None or self._pos >= self.n:
            self._order = self.rng.permutation(self.n)
            self._pos = 0
        batch = self._order[self._pos:self._pos + self.batch_size]
        self._pos += self.batch_size
        return batch
