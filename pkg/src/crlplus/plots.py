"""Matplotlib figures rendered next to the delimited outputs.

Every function takes already-computed rows or arrays and writes one PNG;
nothing here recomputes metrics or touches training state. The Agg backend
is forced so the CLI works on headless machines, and savefig metadata is
pinned so rerunning a run rewrites identical bytes.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = dict(dpi=120, metadata={"Software": "crlplus"})


def save_loop_curves(rows: Sequence[Mapping], path) -> Path:
    """Labeled-set growth and validation accuracy across loop iterations.

    ``rows`` are iteration-report dictionaries in iteration order, as
    written to the loop's report JSONL.
    """
    path = Path(path)
    its = [int(r["iteration"]) for r in rows]
    labeled = [int(r["labeled_count"]) for r in rows]
    promoted = [int(r["promoted_count"]) for r in rows]
    val_acc = [float(r["val_accuracy"]) for r in rows]

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 3.4))
    ax1.plot(its, labeled, marker="o", color="#1f6f8b", label="labeled")
    ax1.bar(its, promoted, color="#bfd7ea", label="promoted", width=0.6)
    ax1.set_xlabel("iteration")
    ax1.set_ylabel("documents")
    ax1.legend(frameon=False)
    ax1.set_title("label growth")
    ax2.plot(its, val_acc, marker="o", color="#87323d")
    ax2.set_xlabel("iteration")
    ax2.set_ylabel("validation accuracy")
    ax2.set_ylim(0.0, 1.0)
    ax2.set_title("validation accuracy")
    for ax in (ax1, ax2):
        ax.spines["top"].set_visible(False)
        ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def save_compare_chart(rows: Sequence[Mapping], path) -> Path:
    """Grouped bars, one group per model row of the comparison table.

    ``rows`` carry ``model`` plus accuracy/precision/recall/f_measure
    fractions; row order is preserved.
    """
    path = Path(path)
    metrics = ("accuracy", "precision", "recall", "f_measure")
    colors = ("#1f6f8b", "#5e96ae", "#bfd7ea", "#87323d")
    x = np.arange(len(rows), dtype=np.float64)
    width = 0.2

    fig, ax = plt.subplots(figsize=(7.2, 3.6))
    for k, (metric, color) in enumerate(zip(metrics, colors)):
        vals = [100.0 * float(r[metric]) for r in rows]
        ax.bar(x + (k - 1.5) * width, vals, width=width, color=color,
               label=metric.replace("_", "-"))
    ax.set_xticks(x)
    ax.set_xticklabels([str(r["model"]) for r in rows])
    ax.set_ylabel("percent")
    ax.set_ylim(0.0, 100.0)
    ax.legend(frameon=False, ncol=2, fontsize=8)
    ax.spines["top"].set_visible(False)
    ax.spines["right"].set_visible(False)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def save_confusion_heatmap(matrix: np.ndarray, class_names: Sequence[str], path) -> Path:
    """Row-normalized confusion matrix with counts annotated per cell."""
    path = Path(path)
    matrix = np.asarray(matrix, dtype=np.int64)
    totals = matrix.sum(axis=1, keepdims=True)
    shade = np.divide(matrix, np.maximum(totals, 1), dtype=np.float64)

    n = len(class_names)
    fig, ax = plt.subplots(figsize=(0.62 * n + 2.2, 0.62 * n + 1.6))
    ax.imshow(shade, cmap="Blues", vmin=0.0, vmax=1.0)
    ax.set_xticks(range(n))
    ax.set_yticks(range(n))
    ax.set_xticklabels(class_names, rotation=45, ha="right", fontsize=8)
    ax.set_yticklabels(class_names, fontsize=8)
    ax.set_xlabel("predicted")
    ax.set_ylabel("true")
    for i in range(n):
        for j in range(n):
            if matrix[i, j]:
                ax.text(j, i, str(int(matrix[i, j])), ha="center", va="center",
                        fontsize=7, color="white" if shade[i, j] > 0.5 else "black")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path
