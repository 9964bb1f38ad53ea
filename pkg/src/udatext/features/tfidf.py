from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError
from .vocab import Vocabulary, _tokens


@dataclass(frozen=True)
class TfIdfTable:
    """Document frequencies over a corpus; ``idf(w) = ln(N / df(w))`` unsmoothed.

    ``counts`` keeps total term counts so a :class:`Vocabulary` can be rebuilt
    from a persisted table.
    """

    doc_count: int
    df: dict
    counts: dict

    def __contains__(self, token):
        return token in self.df

    def idf(self, token) -> float:
        try:
            df = self.df[token]
        except KeyError:
            raise ContractError(f"unknown token {token!r}") from None
        return math.log(self.doc_count / df)

    def score(self, token, doc) -> float:
        """tf-idf of ``token`` in ``doc`` with tf = count / len(doc)."""
        tokens = _tokens(doc)
        idf = self.idf(token)
        if not tokens:
            return 0.0
        return tokens.count(token) / len(tokens) * idf

    def doc_scores(self, doc) -> list:
        """Score of every position in ``doc`` (one pass over the tokens)."""
        tokens = _tokens(doc)
        tf = Counter(tokens)
        n = len(tokens)
        return [tf[t] / n * self.idf(t) for t in tokens]

    def vocabulary(self, min_count: int = 1) -> Vocabulary:
        kept = sorted((t for t, c in self.counts.items() if c >= min_count),
                      key=lambda t: (-self.counts[t], t))
        if not kept:
            raise ContractError(f"no token occurs at least {min_count} times")
        return Vocabulary(tuple(kept), {t: self.counts[t] for t in kept}, min_count)

    def to_json(self) -> dict:
        return {"doc_count": self.doc_count,
                "df": dict(sorted(self.df.items())),
                "counts": dict(sorted(self.counts.items()))}

    @classmethod
    def from_json(cls, obj) -> "TfIdfTable":
        try:
            table = cls(int(obj["doc_count"]), dict(obj["df"]), dict(obj["counts"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"malformed tf-idf table: {exc}") from None
        for tok, df in table.df.items():
            if not 1 <= df <= table.doc_count:
                raise ContractError(f"tf-idf table: df({tok!r})={df} outside [1, {table.doc_count}]")
        return table

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, ensure_ascii=False, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TfIdfTable":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def compute_tfidf(corpus) -> TfIdfTable:
    corpus = [_tokens(d) for d in corpus]
    if not corpus:
        raise ContractError("cannot compute tf-idf over an empty corpus")
    df = Counter()
    counts = Counter()
    for tokens in corpus:
        df.update(set(tokens))
        counts.update(tokens)
    return TfIdfTable(len(corpus), dict(df), dict(counts))


def tfidf_vectors(docs, vocab: Vocabulary, table: TfIdfTable, normalize: bool = True):
    """Dense (n, |V|) tf-idf rows over ``vocab``, L2-normalized by default.

    Tokens outside the vocabulary are ignored; all-OOV docs give zero rows.
    """
    idf = np.array([table.idf(t) if t in table else 0.0 for t in vocab.tokens])
    X = np.zeros((len(docs), len(vocab)))
    for i, doc in enumerate(docs):
        tokens = _tokens(doc)
        for t in tokens:
            j = vocab.index.get(t)
            if j is not None:
                X[i, j] += 1.0
        if tokens:
            X[i] /= len(tokens)
    X *= idf
    if normalize:
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        X = np.divide(X, norms, out=np.zeros_like(X), where=norms > 0)
    return X
