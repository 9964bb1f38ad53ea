"""Documents, text normalization, JSONL ingestion and balanced splits."""

from __future__ import annotations

import json
import re
import unicodedata
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import ContractError

URL_TOKEN = "URL"
EMAIL_TOKEN = "EMAIL"
SENTINELS = frozenset({URL_TOKEN, EMAIL_TOKEN})

_URL_RE = re.compile(r"(?:[a-z][a-z0-9+.\-]*://|www\.)\S+", re.IGNORECASE)
_EMAIL_RE = re.compile(r"[^\s@]+@[^\s@]+\.[^\s@]+")
_DIGITS_RE = re.compile(r"\d+")
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_SENTINEL_RE = re.compile(r"\b(?:URL|EMAIL)\b")
_PROTECT = {URL_TOKEN: "\ue000", EMAIL_TOKEN: "\ue001"}


@dataclass(frozen=True)
class TokenizedDoc:
    id: str
    tokens: tuple
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))

    @property
    def text(self) -> str:
        return " ".join(self.tokens)


@dataclass
class Dataset:
    docs: list
    classes: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.classes = tuple(self.classes)
        known = set(self.classes)
        for doc in self.docs:
            if doc.label is not None and doc.label not in known:
                raise ContractError(f"doc {doc.id!r} has label {doc.label!r} outside classes")

    def __len__(self):
        return len(self.docs)

    def __iter__(self):
        return iter(self.docs)

    @property
    def labels(self) -> list:
        return [d.label for d in self.docs]

    def class_index(self, label: str) -> int:
        return self.classes.index(label)

    def label_indices(self) -> np.ndarray:
        lookup = {c: i for i, c in enumerate(self.classes)}
        try:
            return np.array([lookup[d.label] for d in self.docs], dtype=np.int64)
        except KeyError:
            raise ContractError("dataset contains unlabeled documents") from None

    def class_counts(self) -> dict:
        counts = {c: 0 for c in self.classes}
        for d in self.docs:
            if d.label is not None:
                counts[d.label] += 1
        return counts


@dataclass(frozen=True)
class SplitSpec:
    """Per-class (train, valid, test) counts.

    ``per_class`` is either a single triple applied to every class or a mapping
    from class name to triple.
    """

    per_class: object
    seed: int = 0

    def counts_for(self, label: str) -> tuple:
        if isinstance(self.per_class, dict):
            return tuple(self.per_class[label])
        return tuple(self.per_class)


def _is_word_char(ch):
    return ch.isalnum() or ch == "_"


def _sentinel_sub(token):
    # a match glued to a word ("awww.x") must still yield a standalone sentinel
    def repl(m):
        s, before, after = m.string, m.start(), m.end()
        left = " " if before > 0 and _is_word_char(s[before - 1]) else ""
        right = " " if after < len(s) and _is_word_char(s[after]) else ""
        return left + token + right
    return repl


def _replace_until_stable(pattern, token, text):
    repl = _sentinel_sub(token)
    while True:
        out = pattern.sub(repl, text)
        if out == text:
            return out
        text = out


def normalize_text(text: str) -> str:
    """Lowercase, map URLs/emails to sentinels and digit runs to ``0``.

    >>> normalize_text("Visite https://mp.br AGORA")
    'visite URL agora'
    >>> normalize_text("ano 2019, processo 12345")
    'ano 0, processo 0'
    """
    text = unicodedata.normalize("NFC", text)
    # standalone sentinels survive lowercasing, so re-normalizing is a no-op
    text = _SENTINEL_RE.sub(lambda m: _PROTECT[m.group(0)], text).lower()
    text = text.replace(_PROTECT[URL_TOKEN], URL_TOKEN).replace(_PROTECT[EMAIL_TOKEN], EMAIL_TOKEN)
    # a replacement can expose a fresh match (e.g. "a.b@c.d@e.f"), so iterate
    while True:
        before = text
        text = _replace_until_stable(_URL_RE, URL_TOKEN, text)
        text = _replace_until_stable(_EMAIL_RE, EMAIL_TOKEN, text)
        if text == before:
            break
    return _DIGITS_RE.sub("0", text)


def tokenize(text: str) -> list:
    """Whitespace split with every punctuation/symbol char as its own token."""
    return _TOKEN_RE.findall(text)


def preprocess(text: str) -> list:
    return tokenize(normalize_text(text))


def _doc_from_record(obj, lineno, require_labels):
    if not isinstance(obj, dict):
        raise ContractError(f"line {lineno}: expected a JSON object")
    doc_id = obj.get("id")
    if not isinstance(doc_id, str) or not doc_id:
        raise ContractError(f"line {lineno}: 'id' must be a nonempty string")
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise ContractError(f"line {lineno}: 'label' must be a string or null")
    if label is None and require_labels:
        raise ContractError(f"line {lineno}: record {doc_id!r} has no label")

    if "tokens" in obj:
        # already normalized upstream; never normalize twice
        tokens = obj["tokens"]
        if not isinstance(tokens, list) or not all(isinstance(t, str) and t for t in tokens):
            raise ContractError(f"line {lineno}: 'tokens' must be a list of nonempty strings")
    else:
        text = obj.get("text")
        if not isinstance(text, str) or not text.strip():
            raise ContractError(f"line {lineno}: record {doc_id!r} has empty text")
        tokens = preprocess(text)
    if not tokens:
        raise ContractError(f"line {lineno}: record {doc_id!r} has no tokens")
    return TokenizedDoc(doc_id, tokens, label)


def read_jsonl(path):
    """Yield ``(lineno, obj)`` for every nonblank line of a JSONL file."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise ContractError(f"{path}: line {lineno}: malformed JSON ({exc.msg})") from None


def load_dataset(path, require_labels: bool = True, classes: Optional[Sequence[str]] = None) -> Dataset:
    """Read a dataset JSONL file.

    Records carry ``id``, ``text`` and ``label`` (null for the unlabeled pool).
    Records written by :func:`save_dataset` carry ``tokens`` instead of ``text``
    and are taken as already normalized.
    """
    docs = []
    seen = set()
    for lineno, obj in read_jsonl(path):
        doc = _doc_from_record(obj, lineno, require_labels)
        if doc.id in seen:
            raise ContractError(f"{path}: line {lineno}: duplicate id {doc.id!r}")
        seen.add(doc.id)
        docs.append(doc)
    if classes is None:
        classes = sorted({d.label for d in docs if d.label is not None})
    return Dataset(docs, classes)


def save_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc in dataset.docs:
            rec = {"id": doc.id, "tokens": list(doc.tokens), "label": doc.label}
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def from_texts(texts: Iterable[str], labels=None, ids=None, classes=None) -> Dataset:
    """Build a dataset from raw strings (convenience for scripts and tests)."""
    texts = list(texts)
    labels = list(labels) if labels is not None else [None] * len(texts)
    ids = list(ids) if ids is not None else [str(i) for i in range(len(texts))]
    docs = [TokenizedDoc(i, preprocess(t), y) for i, t, y in zip(ids, texts, labels)]
    if classes is None:
        classes = sorted({y for y in labels if y is not None})
    return Dataset(docs, classes)


def stratified_split(dataset: Dataset, spec: SplitSpec):
    """Sample exactly the requested per-class counts into train/valid/test.

    Classes are visited in ``dataset.classes`` order; each class's documents are
    permuted with one seeded generator and sliced, then every split is shuffled.
    """
    by_class = defaultdict(list)
    for doc in dataset.docs:
        if doc.label is None:
            continue
        by_class[doc.label].append(doc)

    deficient = []
    for label in dataset.classes:
        counts = spec.counts_for(label)
        if len(counts) != 3 or any(int(c) < 0 for c in counts):
            raise ContractError(f"class {label!r}: split counts must be three nonnegative integers")
        if sum(counts) > len(by_class[label]):
            deficient.append(f"{label} (needs {sum(counts)}, has {len(by_class[label])})")
    if deficient:
        raise ContractError("infeasible split for classes: " + ", ".join(deficient))

    rng = np.random.default_rng(spec.seed)
    parts = ([], [], [])
    for label in dataset.classes:
        pool = by_class[label]
        order = rng.permutation(len(pool))
        start = 0
        for part, n in zip(parts, spec.counts_for(label)):
            part.extend(pool[j] for j in order[start:start + n])
            start += n

    out = []
    for part in parts:
        order = rng.permutation(len(part))
        out.append(Dataset([part[j] for j in order], dataset.classes))
    return tuple(out)
