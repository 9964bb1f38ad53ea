"""Report figures. Figures are built on bare ``Figure`` objects (no pyplot state)."""

from __future__ import annotations

from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

HUMAN_COLOR = "#d62728"
MODEL_COLOR = "#1f77b4"
SEGMENT_COLOR = "#b0b0b0"

REPORT_RC = {
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "svg.fonttype": "none",       # keep labels as <text> so the SVG stays searchable
    "svg.hashsalt": "udatext",    # stable element ids across runs
}

PX = 1.0 / 72.0      # SVG user units are points


def _save(fig, path, fmt=None):
    fmt = fmt or Path(path).suffix.lstrip(".") or "svg"
    metadata = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=metadata)


def dumbbell_chart(rows, path, title="Human vs model accuracy per class", fmt=None):
    """One horizontal segment per class: red dot = human, blue dot = model.

    The canvas is 800 x (20 K + 40) units, rows top to bottom in ``rows`` order.
    Each row's artists carry the gid ``row-<i>``.
    """
    k = len(rows)
    width, height = 800, 20 * k + 40
    with matplotlib.rc_context(REPORT_RC):
        fig = Figure(figsize=(width * PX, height * PX))
        left = 0.28
        ax = fig.add_axes([left, 20 / height, 0.97 - left, (height - 34) / height])
        # row i sits at y = i on an inverted axis, so document order = row order
        for i, r in enumerate(rows):
            lo, hi = sorted((r.human_acc, r.model_acc))
            ax.plot([lo, hi], [i, i], color=SEGMENT_COLOR, lw=2, zorder=1, gid=f"row-{i}")
            ax.plot([r.human_acc], [i], "o", color=HUMAN_COLOR, ms=5, zorder=2, gid=f"row-{i}-human")
            ax.plot([r.model_acc], [i], "o", color=MODEL_COLOR, ms=5, zorder=3, gid=f"row-{i}-model")
        ax.set_yticks(range(k))
        ax.set_yticklabels([r.name for r in rows], ha="left")
        # left-align labels at an 8-unit margin: tick pad spans the gap to the axis
        ax.tick_params(axis="y", length=0, pad=left * width - 8)
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(k - 0.3, -0.7)
        ax.set_title(title, fontsize=9, loc="left")
        ax.plot([], [], "o", color=HUMAN_COLOR, label="human")
        ax.plot([], [], "o", color=MODEL_COLOR, label="model")
        if k:
            ax.legend(loc="lower right", bbox_to_anchor=(1.0, 1.0), ncol=2, frameon=False, fontsize=8,
                      borderaxespad=0.0)
        _save(fig, path, fmt)
    return path


def per_class_chart(per_class, path, metric="f1", fmt=None):
    """Horizontal bars of one per-class metric, in the report's class order."""
    names = [row["class"] for row in per_class]
    values = [row[metric] for row in per_class]
    with matplotlib.rc_context(REPORT_RC):
        fig = Figure(figsize=(6.0, 0.25 * len(names) + 1.0))
        ax = fig.add_subplot(1, 1, 1)
        ax.barh(range(len(names)), values, color=MODEL_COLOR)
        ax.set_yticks(range(len(names)))
        ax.set_yticklabels(names)
        ax.invert_yaxis()
        ax.set_xlim(0.0, 1.0)
        ax.set_xlabel(metric)
        fig.tight_layout()
        _save(fig, path, fmt)
    return path
