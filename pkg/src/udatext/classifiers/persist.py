"""Model files: JSON with schema_version, kind, classes, dim, params and payload."""

from __future__ import annotations

import json

import numpy as np

from ..errors import ContractError
from .linear import LinearModel, softmax
from .trees import Tree, TreeEnsembleModel

SCHEMA_VERSION = 1


def model_to_json(model) -> dict:
    if isinstance(model, LinearModel):
        payload = {"W": model.W.tolist(), "b": model.b.tolist()}
        dim = model.dim
    elif isinstance(model, TreeEnsembleModel):
        payload = {"trees": [t.to_json() for t in model.trees]}
        if model.kind == "gb":
            payload["shrinkage"] = model.shrinkage
            payload["base_score"] = model.base_score.tolist()
        dim = model.dim
    else:
        raise TypeError(f"cannot serialize {type(model).__name__}")
    return {"schema_version": SCHEMA_VERSION, "kind": model.kind, "classes": list(model.classes),
            "dim": dim, "params": model.params, "featurizer": model.featurizer, "payload": payload}


def model_from_json(obj):
    try:
        if obj.get("schema_version") != SCHEMA_VERSION:
            raise ContractError(f"unsupported model schema_version {obj.get('schema_version')!r}")
        kind, classes, dim = obj["kind"], tuple(obj["classes"]), int(obj["dim"])
        payload, params, featurizer = obj["payload"], obj.get("params", {}), obj.get("featurizer")
        if kind in ("logreg", "svm"):
            W = np.array(payload["W"], dtype=np.float64).reshape(len(classes), dim)
            b = np.array(payload["b"], dtype=np.float64).reshape(len(classes))
            return LinearModel(kind, W, b, classes, params, featurizer)
        if kind in ("rf", "gb"):
            trees = [Tree.from_json(t) for t in payload["trees"]]
            if kind == "gb":
                return TreeEnsembleModel(kind, trees, classes, dim, float(payload["shrinkage"]),
                                         np.array(payload["base_score"], dtype=np.float64), params, featurizer)
            return TreeEnsembleModel(kind, trees, classes, dim, params=params, featurizer=featurizer)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ContractError(f"malformed model file: {exc}") from None
    raise ContractError(f"unknown model kind {kind!r}")


def save_model(model, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(model_to_json(model), fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ContractError(f"{path}: not valid JSON ({exc.msg})") from None
    return model_from_json(obj)


def class_scores(model, X) -> np.ndarray:
    """Ranking scores: probabilities for logreg, normalized votes for RF,
    softmax of boosted scores for GB, raw decision values for SVM."""
    if model.kind in ("logreg", "gb"):
        return softmax(model.decision_function(X))
    return model.decision_function(X)


def rank_classes(scores_row, classes, k=None):
    """Classes by descending score, ties by class index."""
    order = sorted(range(len(classes)), key=lambda i: (-scores_row[i], i))
    if k is not None:
        order = order[:min(k, len(classes))]
    return [(classes[i], float(scores_row[i])) for i in order]
