"""Accuracy, acc@k, per-class precision/recall/F1 and human-vs-model comparison."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

AUDIT_HEADER = ["class", "human_accuracy", "audited_count"]
COMPARISON_HEADER = ["class", "human_acc", "model_acc", "delta"]


@dataclass(frozen=True)
class PredRanking:
    id: str
    ranked: tuple        # ((class, score), ...) best first

    @property
    def top(self):
        return self.ranked[0][0]


@dataclass(frozen=True)
class ClassMetrics:
    name: str
    precision: float
    recall: float
    f1: float
    support: int


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    human_acc: float
    model_acc: float
    delta: float


def rankings_from_scores(ids, scores, classes) -> list:
    """Rank every class per row by descending score, ties by class index."""
    scores = np.asarray(scores, dtype=np.float64)
    out = []
    for doc_id, row in zip(ids, scores):
        order = sorted(range(len(classes)), key=lambda i: (-row[i], i))
        out.append(PredRanking(doc_id, tuple((classes[i], float(row[i])) for i in order)))
    return out


def accuracy_at_k(rankings, gold: dict, k: int) -> float:
    if k < 1:
        raise ContractError("k must be >= 1")
    if not rankings:
        return 0.0
    hits = 0
    for r in rankings:
        if r.id not in gold:
            raise ContractError(f"no gold label for {r.id!r}")
        hits += gold[r.id] in [c for c, _ in r.ranked[:k]]
    return hits / len(rankings)


def confusion_matrix(preds: dict, gold: dict, classes) -> np.ndarray:
    """Rows are gold classes, columns predicted classes."""
    if set(preds) != set(gold):
        raise ContractError("predictions and gold labels cover different ids")
    index = {c: i for i, c in enumerate(classes)}
    cm = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for doc_id, g in gold.items():
        p = preds[doc_id]
        if p not in index:
            raise ContractError(f"prediction {p!r} for {doc_id!r} is not a known class")
        if g not in index:
            raise ContractError(f"gold label {g!r} for {doc_id!r} is not a known class")
        cm[index[g], index[p]] += 1
    return cm


def _ratio(num, den):
    return float(num) / float(den) if den else 0.0


def per_class_metrics(preds: dict, gold: dict, classes):
    """Return ``(per_class, macro, accuracy)``.

    ``macro`` maps precision/recall/f1 to unweighted means over ``classes``.
    Any zero denominator yields 0.
    """
    cm = confusion_matrix(preds, gold, classes)
    tp = np.diag(cm)
    predicted = cm.sum(axis=0)
    support = cm.sum(axis=1)
    rows = []
    for i, name in enumerate(classes):
        p = _ratio(tp[i], predicted[i])
        r = _ratio(tp[i], support[i])
        f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
        rows.append(ClassMetrics(name, p, r, f1, int(support[i])))
    macro = {
        "precision": float(np.mean([m.precision for m in rows])),
        "recall": float(np.mean([m.recall for m in rows])),
        "f1": float(np.mean([m.f1 for m in rows])),
    }
    accuracy = _ratio(np.trace(cm), cm.sum())
    return rows, macro, accuracy


def build_report(rankings, gold: dict, classes, topk=(1, 3, 5)) -> dict:
    """Report JSON: accuracy, acc@k, macro and micro P/R/F1 and per-class rows."""
    preds = {r.id: r.top for r in rankings}
    per_class, macro, accuracy = per_class_metrics(preds, {r.id: gold[r.id] for r in rankings}, classes)
    return {
        "n": len(rankings),
        "accuracy": accuracy,
        "acc_at": {str(k): accuracy_at_k(rankings, gold, k) for k in topk},
        "macro": macro,
        # single-label: micro precision = micro recall = accuracy
        "micro": {"precision": accuracy, "recall": accuracy, "f1": accuracy},
        "per_class": [{"class": m.name, "precision": m.precision, "recall": m.recall,
                       "f1": m.f1, "support": m.support} for m in per_class],
    }


def load_audit(path) -> dict:
    """Human accuracy per class from ``class,human_accuracy,audited_count``."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != AUDIT_HEADER:
            raise ContractError(f"{path}: expected header {','.join(AUDIT_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                name, acc = row[0], float(row[1])
                int(row[2])
            except (IndexError, ValueError):
                raise ContractError(f"{path}: line {lineno}: malformed audit row") from None
            if not 0.0 <= acc <= 1.0:
                raise ContractError(f"{path}: line {lineno}: human accuracy {acc} outside [0, 1]")
            if name in out:
                raise ContractError(f"{path}: line {lineno}: duplicate class {name!r}")
            out[name] = acc
    return out


def comparison_rows(model_acc: dict, audit: dict) -> list:
    """One row per class sorted by model accuracy (descending), then name."""
    if set(model_acc) != set(audit):
        diff = sorted(set(model_acc) ^ set(audit))
        raise ContractError("class sets differ between model and audit: " + ", ".join(diff))
    rows = [ComparisonRow(c, float(audit[c]), float(model_acc[c]), float(model_acc[c]) - float(audit[c]))
            for c in model_acc]
    rows.sort(key=lambda r: (-r.model_acc, r.name))
    return rows


def write_comparison_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_HEADER)
        for r in rows:
            writer.writerow([r.name, repr(r.human_acc), repr(r.model_acc), repr(r.delta)])


def read_comparison_csv(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        if next(reader, None) != COMPARISON_HEADER:
            raise ContractError(f"{path}: expected header {','.join(COMPARISON_HEADER)}")
        return [ComparisonRow(r[0], float(r[1]), float(r[2]), float(r[3])) for r in reader if r]


def summary_line(rows) -> str:
    worse = sum(r.delta < 0 for r in rows)
    return f"{len(rows)} classes; human accuracy above model in {worse}"


def comparison_report(model_acc: dict, audit: dict, csv_path, svg_path) -> tuple:
    """Write the comparison CSV and dumbbell SVG; return ``(rows, summary)``."""
    from .plotting import dumbbell_chart

    rows = comparison_rows(model_acc, audit)
    write_comparison_csv(rows, csv_path)
    dumbbell_chart(rows, svg_path, fmt="svg")
    return rows, summary_line(rows)
