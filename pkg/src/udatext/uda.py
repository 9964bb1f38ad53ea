"""Consistency training with training signal annealing over softmax regression."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .classifiers.linear import FeatureMatrix, LinearModel, log_softmax, softmax, weighted_xent_grad
from .classifiers.optim import Adam, EpochBatcher
from .errors import ContractError, NumericError

TSA_SCALE = 5.0


class TsaSchedule(str, Enum):
    NONE = "none"
    LINEAR = "linear"
    EXP = "exp"
    LOG = "log"


@dataclass(frozen=True)
class UdaConfig:
    schedule: TsaSchedule = TsaSchedule.LOG
    total_steps: int = 1000
    lam: float = 1.0
    temperature: float = 0.4
    confidence: float = 0.0
    sup_batch: int = 32
    unsup_batch: int = 64
    lr: float = 0.01
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "schedule", TsaSchedule(self.schedule))
        if self.total_steps < 1:
            raise ContractError("total_steps must be >= 1")
        if not self.temperature > 0:
            raise ContractError("temperature must be > 0")
        if self.lam < 0 or self.l2 < 0:
            raise ContractError("lambda and l2 must be nonnegative")
        if not 0.0 <= self.confidence <= 1.0:
            raise ContractError("confidence threshold must lie in [0, 1]")
        if self.sup_batch < 1 or self.unsup_batch < 1:
            raise ContractError("batch sizes must be >= 1")


@dataclass(frozen=True)
class UnlabeledPair:
    id: str
    original: np.ndarray
    augmented: np.ndarray

    def __post_init__(self):
        if np.shape(self.original) != np.shape(self.augmented):
            raise ContractError(f"{self.id}: original and augmented features differ in shape")


def tsa_threshold(schedule, t, T, K) -> float:
    """Probability ceiling above which a labeled example stops contributing.

    ``eta = alpha(t) * (1 - 1/K) + 1/K`` with alpha = t/T (linear),
    1 - exp(-5 t/T) (log) or exp(5 (t/T - 1)) (exp); no schedule means eta = 1.
    """
    schedule = TsaSchedule(schedule)
    if K < 2:
        raise ContractError("TSA needs at least 2 classes")
    if T < 1 or t < 0:
        raise ContractError("TSA needs T >= 1 and t >= 0")
    if t > T:
        raise ContractError(f"TSA step {t} beyond total steps {T}")
    if schedule is TsaSchedule.NONE:
        return 1.0
    r = t / T
    if schedule is TsaSchedule.LINEAR:
        alpha = r
    elif schedule is TsaSchedule.LOG:
        alpha = 1.0 - math.exp(-TSA_SCALE * r)
    else:
        alpha = math.exp(TSA_SCALE * (r - 1.0))
    return alpha * (1.0 - 1.0 / K) + 1.0 / K


def supervised_tsa_loss(probs, labels, eta):
    """Cross-entropy over examples whose gold probability is still <= eta."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    gold = probs[np.arange(len(labels)), labels]
    kept = gold <= eta
    if not kept.any():
        return 0.0, kept
    return float(-np.log(gold[kept]).sum() / max(1, kept.sum())), kept


def sharpen(p, temperature):
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    with np.errstate(divide="ignore"):
        logits = np.log(p) / temperature
    return softmax(logits)


def _kl_rows(q, p):
    if np.any((q > 0) & (p <= 0)):
        raise ContractError("augmented probabilities contain zeros where the target is positive")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(q > 0, q * (np.log(q) - np.log(p)), 0.0)
    return terms.sum(axis=1)


def consistency_loss(p_orig, p_aug, temperature=0.4, confidence=0.0) -> float:
    """Mean KL(sharpen(p_orig) || p_aug) over rows whose max p_orig >= confidence."""
    p_orig = np.atleast_2d(np.asarray(p_orig, dtype=np.float64))
    p_aug = np.atleast_2d(np.asarray(p_aug, dtype=np.float64))
    kept = p_orig.max(axis=1) >= confidence
    if not kept.any():
        return 0.0
    q = sharpen(p_orig[kept], temperature)
    return float(_kl_rows(q, p_aug[kept]).sum() / max(1, kept.sum()))


def uda_loss_grad(W, b, Xs, ys, Xo, Xa, eta, lam, temperature, confidence, l2=0.0, p_orig=None):
    """Total loss and gradient for one step.

    The targets come from ``p_orig`` (the current model's predictions on the
    originals when not given) and receive no gradient.
    """
    probs = softmax(Xs @ W.T + b)
    kept = probs[np.arange(len(ys)), ys] <= eta
    weights = kept.astype(np.float64) / max(1, kept.sum())
    loss, gW, gb = weighted_xent_grad(W, b, Xs, ys, weights, l2)
    if lam == 0 or Xo is None or len(Xo) == 0:
        return loss, gW, gb

    if p_orig is None:
        p_orig = softmax(Xo @ W.T + b)
    conf = p_orig.max(axis=1) >= confidence
    n_conf = conf.sum()
    if n_conf == 0:
        return loss, gW, gb
    q = sharpen(p_orig, temperature)
    logp_aug = log_softmax(Xa @ W.T + b)
    u = conf.astype(np.float64) / n_conf
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = np.where(q > 0, q * (np.log(q) - logp_aug), 0.0).sum(axis=1)
    loss = loss + lam * float((u * kl).sum())
    G = (np.exp(logp_aug) - q) * u[:, None]
    return loss, gW + lam * (G.T @ Xa), gb + lam * G.sum(axis=0)


def _pair_arrays(unlabeled, dim):
    if isinstance(unlabeled, tuple):
        Xo, Xa = (np.asarray(a, dtype=np.float64) for a in unlabeled)
    elif unlabeled:
        Xo = np.vstack([np.asarray(p.original, dtype=np.float64) for p in unlabeled])
        Xa = np.vstack([np.asarray(p.augmented, dtype=np.float64) for p in unlabeled])
    else:
        return np.zeros((0, dim)), np.zeros((0, dim))
    if Xo.shape != Xa.shape or (len(Xo) and Xo.shape[1] != dim):
        raise ContractError("unlabeled pairs must match the labeled feature dimension")
    return Xo, Xa


def train_uda(labeled: FeatureMatrix, unlabeled, K=None, cfg: UdaConfig = UdaConfig()) -> LinearModel:
    """Softmax regression trained on TSA-masked cross-entropy plus weighted consistency.

    ``unlabeled`` is a list of :class:`UnlabeledPair` or an ``(X_orig, X_aug)``
    tuple. Labeled and unlabeled batches come from independent epoch-shuffled
    streams; the labeled stream uses ``default_rng(seed)`` exactly as
    :func:`train_logreg` does, so ``lam=0`` without TSA reproduces it.
    """
    K = labeled.n_classes if K is None else K
    if K != labeled.n_classes:
        raise ContractError("K disagrees with the labeled class list")
    d = labeled.dim
    Xo, Xa = _pair_arrays(unlabeled, d)
    W, b = np.zeros((K, d)), np.zeros(K)
    opt = Adam([W, b], lr=cfg.lr)
    sup = EpochBatcher(labeled.X.shape[0], cfg.sup_batch, np.random.default_rng(cfg.seed))
    use_unsup = cfg.lam > 0 and len(Xo) > 0
    if use_unsup:
        unsup = EpochBatcher(len(Xo), cfg.unsup_batch, np.random.default_rng([cfg.seed, 1]))

    for t in range(1, cfg.total_steps + 1):
        eta = tsa_threshold(cfg.schedule, t, cfg.total_steps, K)
        idx = sup.next()
        if use_unsup:
            u = unsup.next()
            loss, gW, gb = uda_loss_grad(W, b, labeled.X[idx], labeled.y[idx], Xo[u], Xa[u], eta,
                                         cfg.lam, cfg.temperature, cfg.confidence, cfg.l2)
        else:
            loss, gW, gb = uda_loss_grad(W, b, labeled.X[idx], labeled.y[idx], None, None, eta,
                                         0.0, cfg.temperature, cfg.confidence, cfg.l2)
        if not np.isfinite(loss):
            raise NumericError(f"uda: loss became non-finite at step {t} (learning rate too high?)")
        opt.step([gW, gb])

    params = dict(schedule=cfg.schedule.value, total_steps=cfg.total_steps, lam=cfg.lam,
                  temperature=cfg.temperature, confidence=cfg.confidence, sup_batch=cfg.sup_batch,
                  unsup_batch=cfg.unsup_batch, lr=cfg.lr, l2=cfg.l2, seed=cfg.seed)
    return LinearModel("logreg", W, b, labeled.classes, params)
