"""Featurizers, feature files and text-level prediction shared by the CLI and the server.

A featurizer descriptor is a small JSON-able dict stored in model files, e.g.
``{"type": "embeddings", "path": "emb.txt", "sha256": "..."}``. Only
``embeddings`` and ``tfidf`` featurizers can turn raw text into vectors;
``layers`` features come precomputed.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .classifiers.linear import FeatureMatrix
from .classifiers.persist import class_scores, rank_classes
from .corpus import preprocess, read_jsonl
from .errors import ContractError
from .features.embeddings import doc_matrix, load_embeddings
from .features.tfidf import TfIdfTable, tfidf_vectors


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _resolve(path, base_dir=None):
    p = Path(path)
    if p.exists() or base_dir is None:
        return p
    alt = Path(base_dir) / p
    return alt if alt.exists() else p


class Featurizer:
    """Turns token sequences into the fixed vectors a model was trained on."""

    def __init__(self, descriptor: dict, base_dir=None):
        self.descriptor = dict(descriptor)
        kind = descriptor.get("type")
        if kind not in ("embeddings", "tfidf"):
            raise ContractError(f"featurizer {kind!r} cannot featurize raw text")
        path = _resolve(descriptor["path"], base_dir)
        if not path.exists():
            raise ContractError(f"featurizer artifact missing: {descriptor['path']}")
        expected = descriptor.get("sha256")
        if expected and sha256_file(path) != expected:
            raise ContractError(f"featurizer artifact {path} does not match the recorded hash")
        self.kind = kind
        if kind == "embeddings":
            self.embeddings = load_embeddings(path)
        else:
            self.table = TfIdfTable.load(path)
            self.vocab = self.table.vocabulary(int(descriptor.get("min_count", 1)))

    def transform(self, docs) -> np.ndarray:
        if self.kind == "embeddings":
            return doc_matrix(list(docs), self.embeddings)
        return tfidf_vectors(list(docs), self.vocab, self.table)


def embeddings_descriptor(path) -> dict:
    return {"type": "embeddings", "path": str(path), "sha256": sha256_file(path)}


def tfidf_descriptor(path, min_count=1) -> dict:
    return {"type": "tfidf", "path": str(path), "sha256": sha256_file(path), "min_count": int(min_count)}


def layers_descriptor(path, strategy) -> dict:
    return {"type": "layers", "path": str(path), "strategy": str(strategy)}


def write_features(path, ids, labels, X) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for doc_id, label, row in zip(ids, labels, np.asarray(X, dtype=np.float64)):
            fh.write(json.dumps({"id": doc_id, "label": label, "vector": row.tolist()}, ensure_ascii=False) + "\n")


def meta_path(features_path) -> Path:
    return Path(str(features_path) + ".meta.json")


def write_features_meta(path, featurizer: dict, classes) -> None:
    """Write the sidecar (normally ``meta_path(features_path)``)."""
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"featurizer": featurizer, "classes": list(classes)}, fh, sort_keys=True)
        fh.write("\n")


def read_features_meta(features_path) -> dict:
    p = meta_path(features_path)
    if not p.exists():
        return {"featurizer": None, "classes": None}
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


def read_features(path):
    """Return ``(ids, labels, X)`` from a features JSONL file."""
    ids, labels, rows = [], [], []
    for lineno, obj in read_jsonl(path):
        try:
            ids.append(str(obj["id"]))
            labels.append(obj.get("label"))
            rows.append(np.asarray(obj["vector"], dtype=np.float64))
        except (KeyError, TypeError, ValueError) as exc:
            raise ContractError(f"{path}: line {lineno}: bad feature record ({exc})") from None
    if not rows:
        raise ContractError(f"{path}: no feature records")
    dims = {r.shape for r in rows}
    if len(dims) != 1 or len(rows[0].shape) != 1:
        raise ContractError(f"{path}: feature vectors differ in length")
    return ids, labels, np.vstack(rows)


def load_feature_matrix(path, classes=None) -> tuple:
    """Labeled features as ``(FeatureMatrix, ids, featurizer_descriptor)``."""
    ids, labels, X = read_features(path)
    meta = read_features_meta(path)
    if any(lbl is None for lbl in labels):
        raise ContractError(f"{path}: every row needs a label")
    if classes is None:
        classes = meta.get("classes") or sorted(set(labels))
    index = {c: i for i, c in enumerate(classes)}
    unknown = sorted(set(labels) - set(index))
    if unknown:
        raise ContractError(f"{path}: labels outside the class list: {', '.join(unknown)}")
    y = np.array([index[lbl] for lbl in labels], dtype=np.int64)
    return FeatureMatrix(X, y, classes), ids, meta.get("featurizer")


def predict_text(model, featurizer: Featurizer, text: str, k: int = 3) -> list:
    tokens = preprocess(text)
    X = featurizer.transform([tokens])
    return rank_classes(class_scores(model, X)[0], model.classes, k)
