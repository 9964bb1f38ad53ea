"""Skip-gram with negative sampling, trained from scratch in numpy."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, NumericError
from .embeddings import EmbeddingMatrix
from .vocab import _tokens, build_vocab

MIN_LR_FRACTION = 1e-4


@dataclass(frozen=True)
class SkipGramConfig:
    dim: int = 600
    window: int = 10
    min_count: int = 5
    negatives: int = 5
    epochs: int = 5
    lr: float = 0.025
    seed: int = 1

    def validate(self):
        for name in ("dim", "window", "min_count", "negatives"):
            if getattr(self, name) < 1:
                raise ContractError(f"skip-gram {name} must be >= 1")
        if self.epochs < 0:
            raise ContractError("skip-gram epochs must be >= 0")
        if not self.lr > 0:
            raise ContractError("skip-gram lr must be > 0")


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return np.exp(_log_sigmoid(x))


def sgns_pair_loss_grad(v_w, u_c, negatives):
    """Loss and gradients of ``-ln s(u_c.v_w) - sum_n ln s(-u_n.v_w)``.

    ``negatives`` is an (m, dim) array (m may be 0). Returns
    ``(loss, grad_v_w, grad_u_c, grad_negatives)``.
    """
    v_w = np.asarray(v_w, dtype=float)
    u_c = np.asarray(u_c, dtype=float)
    negatives = np.asarray(negatives, dtype=float).reshape(-1, v_w.shape[0])

    pos = u_c @ v_w
    neg = negatives @ v_w
    loss = -_log_sigmoid(pos) - _log_sigmoid(-neg).sum()

    g_pos = _sigmoid(pos) - 1.0          # d loss / d pos
    g_neg = _sigmoid(neg)                # d loss / d neg_j
    grad_v = g_pos * u_c + g_neg @ negatives
    grad_u_c = g_pos * v_w
    grad_neg = g_neg[:, None] * v_w[None, :]
    return float(loss), grad_v, grad_u_c, grad_neg


def _noise_cdf(vocab):
    freq = np.array([vocab.counts.get(t, 1) for t in vocab.tokens], dtype=float) ** 0.75
    cdf = np.cumsum(freq / freq.sum())
    cdf[-1] = 1.0
    return cdf


def init_vectors(n_words, dim, seed):
    rng = np.random.default_rng(seed)
    return (rng.random((n_words, dim)) - 0.5) / dim, rng


def train_skipgram(corpus, config: SkipGramConfig = SkipGramConfig()) -> EmbeddingMatrix:
    """Train input/output vectors with SGD over every (center, context) pair.

    Each center word takes one step that combines its full window of contexts
    and ``negatives`` noise words per context, drawn from unigram^0.75. The
    learning rate decays linearly with the number of processed tokens.
    """
    config.validate()
    corpus = [_tokens(d) for d in corpus]
    vocab = build_vocab(corpus, config.min_count)
    w_in, rng = init_vectors(len(vocab), config.dim, config.seed)
    w_out = np.zeros_like(w_in)
    cdf = _noise_cdf(vocab)

    sentences = [np.array([vocab.index[t] for t in doc if t in vocab.index], dtype=np.int64)
                 for doc in corpus]
    total = max(1, config.epochs * sum(len(s) for s in sentences))
    processed = 0
    for _ in range(config.epochs):
        for ids in sentences:
            n = len(ids)
            for pos in range(n):
                lr = config.lr * max(MIN_LR_FRACTION, 1.0 - processed / total)
                processed += 1
                lo, hi = max(0, pos - config.window), min(n, pos + config.window + 1)
                ctx = np.concatenate([ids[lo:pos], ids[pos + 1:hi]])
                if ctx.size == 0:
                    continue
                noise = np.searchsorted(cdf, rng.random(ctx.size * config.negatives), side="right")
                noise = np.minimum(noise, len(vocab) - 1)
                targets = np.concatenate([ctx, noise])
                labels = np.zeros(targets.size)
                labels[:ctx.size] = 1.0

                w = ids[pos]
                v = w_in[w]
                u = w_out[targets]
                coef = labels - _sigmoid(u @ v)     # minus d loss / d score
                step_v = coef @ u
                np.add.at(w_out, targets, lr * coef[:, None] * v[None, :])
                w_in[w] += lr * step_v
        if not np.isfinite(w_in).all():
            raise NumericError("skip-gram vectors became non-finite; lower the learning rate")
    return EmbeddingMatrix(vocab, w_in.astype(np.float32), w_out.astype(np.float32))
