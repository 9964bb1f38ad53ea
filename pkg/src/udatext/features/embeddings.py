from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import ContractError
from .vocab import Vocabulary, _tokens


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Vocabulary-indexed float32 vectors.

    ``output`` holds the trainer's context vectors and is never persisted.
    """

    vocab: Vocabulary
    vectors: np.ndarray
    output: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[0] != len(self.vocab):
            raise ContractError("embedding matrix shape does not match vocabulary")
        if self.vectors.shape[1] < 1:
            raise ContractError("embedding dimension must be positive")
        if not np.isfinite(self.vectors).all():
            raise ContractError("embedding vectors must be finite")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __getitem__(self, token):
        return self.vectors[self.vocab.index[token]]


def doc_vector(tokens, embeddings: EmbeddingMatrix) -> np.ndarray:
    """Mean of the in-vocabulary token vectors; zeros when none are known."""
    idx = [embeddings.vocab.index[t] for t in _tokens(tokens) if t in embeddings.vocab.index]
    if not idx:
        return np.zeros(embeddings.dim)
    return embeddings.vectors[idx].astype(np.float64).mean(axis=0)


def doc_matrix(docs, embeddings: EmbeddingMatrix) -> np.ndarray:
    return np.vstack([doc_vector(d, embeddings) for d in docs]) if docs else np.zeros((0, embeddings.dim))


def write_embeddings(embeddings: EmbeddingMatrix, path) -> None:
    """Text format: ``"<n> <dim>"`` header, then ``token c1 ... cdim`` per line."""
    vectors = embeddings.vectors.astype(np.float32)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{len(embeddings.vocab)} {embeddings.dim}\n")
        for token, row in zip(embeddings.vocab.tokens, vectors):
            fh.write(token + " " + " ".join(f"{float(x):.9g}" for x in row) + "\n")


def load_embeddings(path) -> EmbeddingMatrix:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        try:
            n, dim = int(header[0]), int(header[1])
            if len(header) != 2 or n < 1 or dim < 1:
                raise ValueError
        except (ValueError, IndexError):
            raise ContractError(f"{path}: line 1: expected '<vocab_size> <dim>' header") from None
        tokens = []
        rows = np.empty((n, dim), dtype=np.float32)
        for lineno, line in enumerate(fh, start=2):
            parts = line.rstrip("\n").split(" ")
            if not line.strip():
                continue
            if len(tokens) == n:
                raise ContractError(f"{path}: header declares {n} vectors but more lines follow")
            if len(parts) != dim + 1:
                raise ContractError(f"{path}: line {lineno}: expected {dim} components, got {len(parts) - 1}")
            try:
                rows[len(tokens)] = np.array([float(x) for x in parts[1:]], dtype=np.float32)
            except ValueError:
                raise ContractError(f"{path}: line {lineno}: non-numeric component") from None
            tokens.append(parts[0])
    if len(tokens) != n:
        raise ContractError(f"{path}: header declares {n} vectors, found {len(tokens)}")
    if len(set(tokens)) != n:
        raise ContractError(f"{path}: duplicate tokens")
    vocab = Vocabulary(tuple(tokens), {t: 0 for t in tokens}, 1)
    return EmbeddingMatrix(vocab, rows)
