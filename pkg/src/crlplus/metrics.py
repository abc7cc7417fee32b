"""Confusion-matrix metrics: one-vs-all per class plus a weighted overall row.

Per class k the confusion matrix reduces to TP/FP/FN/TN and the four
classic ratios: accuracy (TP+TN)/(TP+TN+FP+FN), precision TP/(TP+FP),
recall TP/(TP+FN), and the F-measure 2PR/(P+R). The overall row reports
micro accuracy (trace over total) and support-weighted precision, recall,
and F. Weighted recall is computed in its reduced form trace/total, which
makes the identity "weighted recall == micro accuracy" exact rather than
approximate. Ratios with a zero denominator are reported as 0.0 and the
affected class is flagged, so downstream comparisons stay total.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .errors import ParameterError, ShapeError

HEADER = ("Class Label", "Accuracy", "Precision", "Recall", "F-measure")
OVERALL_LABEL = "Overall"


def confusion(truth: Sequence[int], pred: Sequence[int], n_classes: int) -> np.ndarray:
    """C x C counts; rows are the true class, columns the predicted class."""
    t = np.asarray(truth, dtype=np.int64).ravel()
    p = np.asarray(pred, dtype=np.int64).ravel()
    if t.shape != p.shape:
        raise ShapeError(f"truth has {t.shape[0]} entries but pred has {p.shape[0]}")
    if n_classes < 1:
        raise ParameterError(f"n_classes must be >= 1, got {n_classes}")
    if t.size:
        lo = min(int(t.min()), int(p.min()))
        hi = max(int(t.max()), int(p.max()))
        if lo < 0 or hi >= n_classes:
            raise ParameterError(
                f"class index out of range [0, {n_classes}): saw {lo if lo < 0 else hi}"
            )
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (t, p), 1)
    return cm


@dataclass(frozen=True)
class ClassMetrics:
    accuracy: float
    precision: float
    recall: float
    f_measure: float
    support: int
    zero_division: bool = False


@dataclass
class MetricReport:
    """Per-class one-vs-all metrics plus the weighted overall row."""

    class_names: Tuple[str, ...]
    per_class: Dict[str, ClassMetrics]
    overall: ClassMetrics
    total: int


def per_class(cm: np.ndarray, k: int) -> ClassMetrics:
    """One-vs-all reduction of class k followed by the four ratio metrics."""
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ShapeError(f"confusion matrix must be square, got shape {cm.shape}")
    if not (0 <= k < cm.shape[0]):
        raise ParameterError(f"class index {k} out of range for {cm.shape[0]} classes")
    total = int(cm.sum())
    tp = int(cm[k, k])
    fp = int(cm[:, k].sum()) - tp
    fn = int(cm[k, :].sum()) - tp
    tn = total - tp - fp - fn

    flagged = False
    if tp + fp == 0:
        precision, flagged = 0.0, True
    else:
        precision = tp / (tp + fp)
    if tp + fn == 0:
        recall, flagged = 0.0, True
    else:
        recall = tp / (tp + fn)
    f_measure = 0.0 if precision + recall == 0.0 else 2 * precision * recall / (precision + recall)
    accuracy = 0.0 if total == 0 else (tp + tn) / total
    return ClassMetrics(
        accuracy=accuracy,
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        support=tp + fn,
        zero_division=flagged,
    )


def overall(cm: np.ndarray) -> ClassMetrics:
    """Micro accuracy plus support-weighted precision/recall/F.

    Weighted recall reduces algebraically to trace/total (each class's
    recall is TP_k/support_k, weighted again by support_k/total), so it is
    computed directly in that form and equals micro accuracy bit for bit.
    """
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ShapeError(f"confusion matrix must be square, got shape {cm.shape}")
    total = int(cm.sum())
    if total == 0:
        return ClassMetrics(0.0, 0.0, 0.0, 0.0, support=0, zero_division=True)
    micro = float(np.trace(cm)) / total

    weighted_precision = 0.0
    weighted_f = 0.0
    flagged = False
    for k in range(cm.shape[0]):
        stats = per_class(cm, k)
        flagged = flagged or stats.zero_division
        weight = stats.support / total
        weighted_precision += weight * stats.precision
        weighted_f += weight * stats.f_measure
    return ClassMetrics(
        accuracy=micro,
        precision=weighted_precision,
        recall=micro,
        f_measure=weighted_f,
        support=total,
        zero_division=flagged,
    )


def report(cm: np.ndarray, class_names: Sequence[str]) -> MetricReport:
    cm = np.asarray(cm)
    if cm.shape[0] != len(class_names):
        raise ShapeError(
            f"confusion matrix has {cm.shape[0]} classes but {len(class_names)} names given"
        )
    per = {name: per_class(cm, k) for k, name in enumerate(class_names)}
    return MetricReport(
        class_names=tuple(class_names),
        per_class=per,
        overall=overall(cm),
        total=int(cm.sum()),
    )


def render_text(rep: MetricReport) -> str:
    """Plain-text table: Overall first, then one row per class, percents."""
    rows: List[Tuple[str, ClassMetrics]] = [(OVERALL_LABEL, rep.overall)]
    rows.extend((name, rep.per_class[name]) for name in rep.class_names)
    name_width = max(len(HEADER[0]), max(len(name) for name, _ in rows))
    lines = [
        f"{HEADER[0]:<{name_width}}  {HEADER[1]:>9}  {HEADER[2]:>9}  {HEADER[3]:>9}  {HEADER[4]:>9}"
    ]
    for name, m in rows:
        cells = [m.accuracy, m.precision, m.recall, m.f_measure]
        rendered = "  ".join(f"{100 * v:>9.2f}" for v in cells)
        flag = " *" if m.zero_division else ""
        lines.append(f"{name:<{name_width}}  {rendered}{flag}")
    if any(m.zero_division for _, m in rows):
        lines.append("* at least one ratio had a zero denominator and is reported as 0")
    return "\n".join(lines)


def render_json(rep: MetricReport) -> str:
    """JSON equivalent of the table; values are fractions, not percents."""

    def row(m: ClassMetrics) -> dict:
        return {
            "accuracy": m.accuracy,
            "precision": m.precision,
            "recall": m.recall,
            "f_measure": m.f_measure,
            "support": m.support,
            "zero_division": m.zero_division,
        }

    payload = {
        "overall": row(rep.overall),
        "classes": {name: row(rep.per_class[name]) for name in rep.class_names},
        "total": rep.total,
    }
    return json.dumps(payload, indent=2, sort_keys=True)
