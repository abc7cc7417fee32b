"""Plain SGD with optional global-norm clipping.

The update is functional: a step returns a fresh ParamSet (new Tensors) so
model snapshots held elsewhere are never mutated underneath their owners.
"""

from __future__ import annotations

import math
from typing import Dict, Optional

import numpy as np

from ..errors import ParameterError, ShapeError
from .params import ParamSet
from .tensor import Tensor

DEFAULT_LR = 0.05


def global_grad_norm(params: ParamSet, grads: Dict[str, np.ndarray]) -> float:
    """L2 norm over the gradients of non-frozen entries, in insertion order."""
    total = 0.0
    for name, _ in params.items():
        if not params.is_frozen(name):
            g = grads[name]
            total += float(np.dot(g.ravel(), g.ravel()))
    return math.sqrt(total)


def sgd_step(
    params: ParamSet,
    grads: Dict[str, np.ndarray],
    lr: float = DEFAULT_LR,
    clip: Optional[float] = None,
) -> ParamSet:
    """One step of p <- p - lr * g for non-frozen entries.

    With ``clip`` set, gradients are first rescaled by clip/norm whenever the
    global norm over non-frozen entries exceeds clip. Frozen entries are
    copied through unchanged.
    """
    if lr <= 0:
        raise ParameterError(f"learning rate must be positive, got {lr}")
    if clip is not None and clip <= 0:
        raise ParameterError(f"clip must be positive, got {clip}")
    scale = 1.0
    if clip is not None:
        norm = global_grad_norm(params, grads)
        if norm > clip:
            scale = clip / norm
    out = ParamSet()
    for name, t in params.items():
        if params.is_frozen(name):
            out.add(name, Tensor(t.data.copy()), frozen=True)
            continue
        g = grads[name]
        if g.shape != t.data.shape:
            raise ShapeError(
                f"gradient shape {g.shape} does not match parameter {name} {t.data.shape}"
            )
        step = t.data - t.data.dtype.type(lr * scale) * g.astype(t.data.dtype)
        out.add(name, Tensor(step), frozen=False)
    return out
