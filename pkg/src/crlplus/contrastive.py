"""Supervised contrastive batches and loss.

For each anchor row i of a batch, rows with the same label are its
positives p(i) and rows with a different label its negatives B(i). The
per-anchor loss averages, over positives, the log-ratio of the positive's
scaled cosine similarity against a denominator of exponentiated
similarities. Two denominator conventions exist and both are implemented:

* ``paper_literal`` sums the denominator over negatives only. A fraction
  can then exceed 1, so per-anchor terms (and the loss) may be negative.
* ``supcon_standard`` sums over every non-anchor row, the widely used
  formulation; each term is a true cross-entropy and is non-negative.

Anchors without positives (and, in literal mode, without negatives)
contribute nothing; the loss is the mean over contributing anchors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateBatchError, ParameterError, ShapeError
from .numerics import Tensor, tsum

MODE_PAPER_LITERAL = "paper_literal"
MODE_SUPCON_STANDARD = "supcon_standard"
MODES = (MODE_PAPER_LITERAL, MODE_SUPCON_STANDARD)


def cosine(a, b) -> float:
    """Cosine similarity of two vectors: a.b / (|a| |b|)."""
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    if av.shape != bv.shape:
        raise ShapeError(f"cosine needs equal-length vectors, got {av.shape} and {bv.shape}")
    na, nb = float(np.linalg.norm(av)), float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise ParameterError("cosine undefined for a zero-norm vector")
    return float(av @ bv) / (na * nb)


def pairwise_cosine(embeddings: np.ndarray) -> np.ndarray:
    """All-pairs cosine matrix for plain arrays; evaluation helper."""
    x = np.asarray(embeddings, dtype=np.float64)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    if (norms == 0.0).any():
        raise ParameterError("cosine undefined for a zero-norm vector")
    xn = x / norms
    return xn @ xn.T


@dataclass(frozen=True)
class LossConfig:
    temperature: float = 0.1
    denominator_mode: str = MODE_SUPCON_STANDARD

    def __post_init__(self):
        if not (self.temperature > 0.0):
            raise ParameterError(f"temperature must be > 0, got {self.temperature}")
        if self.denominator_mode not in MODES:
            raise ParameterError(
                f"denominator_mode must be one of {MODES}, got {self.denominator_mode!r}"
            )


class ContrastiveBatch:
    """Embeddings with per-row labels and the induced positive/negative masks.

    ``pos_mask[i, j]`` is True when j is a positive of anchor i (same label,
    j != i); ``neg_mask[i, j]`` when j is a negative (different label). The
    two masks plus the diagonal partition every row pair.
    """

    __slots__ = ("embeddings", "labels", "pos_mask", "neg_mask")

    def __init__(self, embeddings: Tensor, labels: np.ndarray, pos_mask: np.ndarray,
                 neg_mask: np.ndarray):
        self.embeddings = embeddings
        self.labels = labels
        self.pos_mask = pos_mask
        self.neg_mask = neg_mask

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    def contributing(self, mode: str = MODE_SUPCON_STANDARD) -> np.ndarray:
        """Anchors whose loss term is defined under the given mode."""
        has_pos = self.pos_mask.any(axis=1)
        if mode == MODE_PAPER_LITERAL:
            return has_pos & self.neg_mask.any(axis=1)
        return has_pos


def build_batch(view_embeddings: Tensor, view_labels) -> ContrastiveBatch:
    """Derive p(i)/B(i) masks from labels; views inherit their source label."""
    labels = np.asarray(view_labels, dtype=np.int64).ravel()
    if view_embeddings.ndim != 2:
        raise ShapeError(f"embeddings must be [N, d], got shape {view_embeddings.shape}")
    n = view_embeddings.shape[0]
    if n < 2:
        raise ParameterError(f"a contrastive batch needs at least 2 rows, got {n}")
    if labels.shape[0] != n:
        raise ShapeError(f"{n} embedding rows but {labels.shape[0]} labels")
    if (labels < 0).any():
        raise ParameterError("contrastive batches require known labels (no negatives ids)")
    same = labels[:, None] == labels[None, :]
    eye = np.eye(n, dtype=bool)
    return ContrastiveBatch(
        embeddings=view_embeddings,
        labels=labels,
        pos_mask=same & ~eye,
        neg_mask=~same,
    )


def supcon_loss(batch: ContrastiveBatch, cfg: LossConfig) -> Tensor:
    """Scalar loss Tensor; differentiable through ``batch.embeddings``.

    Raises DegenerateBatchError when no anchor contributes (callers treat
    the step as a no-op with loss 0 and warn).
    """
    contributing = batch.contributing(cfg.denominator_mode)
    n_contrib = int(contributing.sum())
    if n_contrib == 0:
        raise DegenerateBatchError(
            "no contributing anchors: every row lacks a positive"
            + (" or a negative" if cfg.denominator_mode == MODE_PAPER_LITERAL else "")
        )

    x = batch.embeddings
    n = len(batch)
    norms = tsum(x * x, axis=1, keepdims=True).sqrt()
    if (norms.data == 0.0).any():
        raise ParameterError("cosine undefined for a zero-norm embedding row")
    xn = x / norms
    logits = (xn @ xn.transpose((1, 0))) / cfg.temperature

    if cfg.denominator_mode == MODE_PAPER_LITERAL:
        denom_mask = batch.neg_mask
    else:
        denom_mask = ~np.eye(n, dtype=bool)
    denom_f = denom_mask.astype(np.float32)

    # Detached row-max over the denominator set keeps exp in range for any
    # temperature; a constant shift leaves the log-sum-exp gradient intact.
    shifted_scores = np.where(denom_mask, logits.data, -np.inf)
    row_max = shifted_scores.max(axis=1, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0).astype(logits.data.dtype)

    exp_masked = (logits - row_max).exp() * denom_f
    # Dead rows get a dummy +1 so their log stays finite; their weight is 0.
    dead = (~contributing).astype(np.float32)[:, None]
    denom_sum = tsum(exp_masked, axis=1, keepdims=True) + dead
    log_denom = denom_sum.log() + row_max

    pos_f = batch.pos_mask.astype(np.float32)
    pos_counts = pos_f.sum(axis=1)
    # Per anchor: mean over positives of (log denom - logit), masked to
    # contributing rows; dead rows divide by 1 instead of 0.
    per_pair = (log_denom - logits) * pos_f
    safe_counts = np.maximum(pos_counts, 1.0).astype(np.float32)
    per_anchor = tsum(per_pair, axis=1) / safe_counts
    weights = contributing.astype(np.float32)
    return tsum(per_anchor * weights) / np.float32(n_contrib)
