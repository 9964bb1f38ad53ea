"""Synthetic class-conditional corpora for demos and end-to-end checks."""

from __future__ import annotations

import numpy as np

from .corpus import Dataset, TokenizedDoc


def word(n: int) -> str:
    """Letters-only name for word ``n`` ("wa", "wb", ..., "wz", "wba", ...).

    Digits would be folded to "0" by the normalizer, so names avoid them.
    """
    letters = ""
    while True:
        n, r = divmod(n, 26)
        letters = chr(ord("a") + r) + letters
        if n == 0:
            return "w" + letters


def class_word_distributions(n_classes=10, vocab_size=500, topic_words=30, topic_weight=0.25,
                             zipf=1.0, seed=0):
    """Per-class unigram distributions over words ``0..V-1`` (see ``word``).

    Every class mixes a shared Zipf background over the whole vocabulary with a
    uniform block of ``topic_words`` class-specific words.
    """
    if n_classes * topic_words > vocab_size:
        raise ValueError("topic blocks do not fit in the vocabulary")
    rng = np.random.default_rng(seed)
    ranks = rng.permutation(vocab_size) + 1
    background = 1.0 / ranks ** zipf
    background /= background.sum()
    dists = np.empty((n_classes, vocab_size))
    for k in range(n_classes):
        topic = np.zeros(vocab_size)
        topic[k * topic_words:(k + 1) * topic_words] = 1.0 / topic_words
        dists[k] = (1.0 - topic_weight) * background + topic_weight * topic
    return dists


def sample_docs(dists, per_class, doc_len, rng, prefix, labeled=True):
    K, V = dists.shape
    docs = []
    for k in range(K):
        words = rng.choice(V, size=(per_class, doc_len), p=dists[k])
        for j, row in enumerate(words):
            docs.append(TokenizedDoc(f"{prefix}{k}-{j}", [word(w) for w in row],
                                     f"c{k}" if labeled else None))
    return docs


def make_corpus(n_classes=10, vocab_size=500, doc_len=20, labeled_per_class=10,
                unlabeled_per_class=200, test_per_class=30, seed=0, **dist_kw):
    """Return ``(labeled, unlabeled, test)`` datasets drawn from one generator."""
    dists = class_word_distributions(n_classes, vocab_size, seed=seed, **dist_kw)
    rng = np.random.default_rng([seed, 7])
    classes = [f"c{k}" for k in range(n_classes)]
    labeled = Dataset(sample_docs(dists, labeled_per_class, doc_len, rng, "l"), classes)
    unlabeled = Dataset(sample_docs(dists, unlabeled_per_class, doc_len, rng, "u", labeled=False), classes)
    test = Dataset(sample_docs(dists, test_per_class, doc_len, rng, "t"), classes)
    return labeled, unlabeled, test
