from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from ..errors import ContractError


def _tokens(doc):
    return doc.tokens if hasattr(doc, "tokens") else doc


@dataclass(frozen=True)
class Vocabulary:
    """Token <-> index map; indices follow descending count, then lexical order."""

    tokens: tuple
    counts: dict
    min_count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.tokens)})

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def get(self, token, default=None):
        return self.index.get(token, default)


def build_vocab(corpus, min_count: int = 1) -> Vocabulary:
    """Count tokens over ``corpus`` (docs or token lists) and drop rare ones."""
    if min_count < 1:
        raise ContractError("min_count must be >= 1")
    corpus = list(corpus)
    if not corpus:
        raise ContractError("cannot build a vocabulary from an empty corpus")
    counts = Counter()
    for doc in corpus:
        counts.update(_tokens(doc))
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    if not kept:
        raise ContractError(f"no token occurs at least {min_count} times")
    return Vocabulary(tuple(kept), {t: counts[t] for t in kept}, min_count)
