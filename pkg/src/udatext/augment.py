"""Label-preserving augmentation: TF-IDF word replacement and back translation."""

from __future__ import annotations

import hashlib
import json
import math
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Protocol

import numpy as np

from .corpus import Dataset, TokenizedDoc, preprocess
from .errors import ContractError, TranslatorError
from .features.tfidf import TfIdfTable
from .features.vocab import Vocabulary

AUG_SUFFIX = "#aug"
BT_SUFFIX = "#bt"


class Strategy(str, Enum):
    TFIDF = "tfidf-replace"
    BACK_TRANSLATION = "back-translate"


@dataclass(frozen=True)
class AugmentConfig:
    p_max: float = 0.3
    pool_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.p_max <= 1.0:
            raise ContractError("p_max must lie in [0, 1]")
        if not 0.0 < self.pool_fraction <= 1.0:
            raise ContractError("pool_fraction must lie in (0, 1]")


class Translator(Protocol):
    def translate(self, text: str, source_lang: str, target_lang: str) -> str: ...


@dataclass(frozen=True)
class MockTranslator:
    """Word-by-word dictionary translator; unknown words pass through."""

    forward: dict = field(default_factory=dict)
    backward: dict = field(default_factory=dict)
    pivot: str = "en"

    def translate(self, text, source_lang, target_lang):
        table = self.forward if target_lang == self.pivot else self.backward
        return " ".join(table.get(w, w) for w in text.split())


class HttpTranslator:
    """JSON-over-HTTP translator client.

    Sends ``{"q", "source", "target"}`` and reads ``translatedText`` back. The
    key, when given, travels as a bearer token.
    """

    def __init__(self, endpoint: str, key: Optional[str] = None, timeout: float = 10.0):
        self.endpoint = endpoint
        self.key = key
        self.timeout = timeout

    def translate(self, text, source_lang, target_lang):
        body = json.dumps({"q": text, "source": source_lang, "target": target_lang}).encode("utf-8")
        req = urllib.request.Request(self.endpoint, data=body, method="POST",
                                     headers={"Content-Type": "application/json"})
        if self.key:
            req.add_header("Authorization", f"Bearer {self.key}")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise TranslatorError(f"translator returned HTTP {exc.code}") from None
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise TranslatorError(f"translator unreachable: {exc}") from None
        except ValueError:
            raise TranslatorError("translator returned malformed JSON") from None
        out = payload.get("translatedText") if isinstance(payload, dict) else None
        if not isinstance(out, str):
            raise TranslatorError("translator response lacks 'translatedText'")
        return out


def doc_rng(seed: int, doc_id: str) -> np.random.Generator:
    """Generator keyed on (seed, doc id); independent of processing order."""
    digest = hashlib.sha256(f"{seed}\x1f{doc_id}".encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "little"))


def replacement_pool(table: TfIdfTable, vocab: Vocabulary, pool_fraction: float) -> tuple:
    """The ``pool_fraction`` of the vocabulary with the lowest idf (ties by vocab index)."""
    known = [t for t in vocab.tokens if t in table]
    known.sort(key=lambda t: table.idf(t))      # stable: vocab order among ties
    size = math.ceil(pool_fraction * len(known))
    if size == 0:
        raise ContractError("replacement pool is empty")
    return tuple(known[:size])


def replacement_probs(scores, p_max: float) -> np.ndarray:
    scores = np.asarray(scores, dtype=float)
    hi, lo = scores.max(), scores.min()
    if hi == lo:
        return np.zeros_like(scores)
    return p_max * (hi - scores) / (hi - lo)


def tfidf_replace(doc: TokenizedDoc, table: TfIdfTable, vocab: Vocabulary,
                  cfg: AugmentConfig = AugmentConfig(), pool=None) -> TokenizedDoc:
    """Swap uninformative tokens for other uninformative ones.

    Position i is replaced with probability ``p_max * (C - s_i) / (C - m)``
    where ``s_i`` is its tf-idf score and C, m are the doc's max and min. For
    every position the generator draws a uniform first and, only when a
    replacement happens, a pool index.
    """
    if pool is None:
        pool = replacement_pool(table, vocab, cfg.pool_fraction)
    if not pool:
        raise ContractError("replacement pool is empty")
    tokens = list(doc.tokens)
    if tokens:
        probs = replacement_probs(table.doc_scores(tokens), cfg.p_max)
        rng = doc_rng(cfg.seed, doc.id)
        for i, p in enumerate(probs):
            if rng.random() < p:
                tokens[i] = pool[rng.integers(len(pool))]
    return TokenizedDoc(doc.id + AUG_SUFFIX, tokens, doc.label)


def back_translate(docs, translator: Translator, pivot: str = "en", source: str = "pt",
                   max_workers: int = 1) -> list:
    """Round-trip each doc through ``pivot`` and re-normalize the result.

    Calls may run on a thread pool; output keeps input order. Any failure aborts
    the whole batch.
    """
    docs = list(docs)

    def one(doc):
        try:
            there = translator.translate(doc.text, source, pivot)
            back = translator.translate(there, pivot, source)
        except TranslatorError as exc:
            raise TranslatorError(str(exc), doc.id) from None
        except Exception as exc:
            raise TranslatorError(f"translation failed: {exc}", doc.id) from exc
        tokens = preprocess(back)
        if not tokens:
            raise TranslatorError("translation came back empty", doc.id)
        return TokenizedDoc(doc.id + BT_SUFFIX, tokens, doc.label)

    if max_workers <= 1:
        return [one(d) for d in docs]
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        return list(pool.map(one, docs))


def augment_dataset(dataset: Dataset, strategy, *, table: Optional[TfIdfTable] = None,
                    vocab: Optional[Vocabulary] = None, cfg: AugmentConfig = AugmentConfig(),
                    translator: Optional[Translator] = None, pivot: str = "en",
                    source: str = "pt", max_workers: int = 1) -> Dataset:
    """Originals followed by exactly one synthetic doc per original."""
    strategy = Strategy(strategy)
    if not dataset.docs:
        return Dataset([], dataset.classes)
    if strategy is Strategy.TFIDF:
        if table is None or vocab is None:
            raise ContractError("tf-idf replacement needs a tf-idf table and a vocabulary")
        pool = replacement_pool(table, vocab, cfg.pool_fraction)
        extra = [tfidf_replace(d, table, vocab, cfg, pool=pool) for d in dataset.docs]
    else:
        if translator is None:
            raise ContractError("back translation needs a translator")
        extra = back_translate(dataset.docs, translator, pivot, source, max_workers)
    return Dataset(list(dataset.docs) + extra, dataset.classes)


def augmentation_pairs(original: Dataset, augmented: Dataset) -> list:
    """``{"id", "aug_id"}`` records joining each original to its synthetic copy."""
    n = len(original.docs)
    return [{"id": o.id, "aug_id": a.id} for o, a in zip(augmented.docs[:n], augmented.docs[n:])]
