"""Float tensors with reverse-mode automatic differentiation.

The training pipeline runs entirely in float32. float64 is accepted as well
so verification code (finite-difference oracles) can run the same graphs at
higher precision; production paths never construct float64 tensors.

Operations never mutate their inputs, every stochastic choice enters through
an explicit ``SeededRng``, and reductions use numpy's fixed single-pass
ordering, so a fixed seed replays a run exactly on the same platform.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erf

from ..errors import ContractError, ParameterError, ShapeError
from .rng import SeededRng

DEFAULT_DTYPE = np.float32
_FLOAT_DTYPES = (np.dtype(np.float32), np.dtype(np.float64))


class Tensor:
    """Dense row-major float array plus reverse-mode bookkeeping.

    ``data`` is a C-contiguous numpy array; ``grad`` is filled in by
    ``backward`` for every node that participates in the graph. Interior
    nodes carry a closure that routes their gradient to their parents.
    """

    __slots__ = ("data", "grad", "_parents", "_backward")

    def __init__(self, data, dtype=None, _parents=(), _backward=None):
        arr = np.asarray(data, dtype=dtype)
        if arr.dtype not in _FLOAT_DTYPES:
            arr = arr.astype(DEFAULT_DTYPE)
        self.data = np.ascontiguousarray(arr)
        self.grad = None
        self._parents = _parents
        self._backward = _backward

    @property
    def shape(self) -> tuple:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(()))

    def backward(self) -> None:
        """Accumulate gradients of this scalar into every ancestor's .grad."""
        if self.data.size != 1:
            raise ContractError(
                f"backward() requires a scalar output, got shape {self.shape}"
            )
        order = _topo_order(self)
        self.grad = np.ones_like(self.data)
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # operator sugar -------------------------------------------------------

    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, other)

    def __rtruediv__(self, other):
        return div(other, self)

    def __neg__(self):
        return mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def exp(self):
        return exp(self)

    def log(self):
        return log(self)

    def sqrt(self):
        return sqrt(self)

    def sum(self, axis=None, keepdims=False):
        return tsum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims=False):
        return tmean(self, axis=axis, keepdims=keepdims)

    def reshape(self, shape):
        return reshape(self, shape)

    def transpose(self, axes):
        return transpose(self, axes)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype})"


def _topo_order(root: Tensor) -> list:
    order, seen = [], set()
    stack = [(root, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for p in node._parents:
            if id(p) not in seen:
                stack.append((p, False))
    return order


def _accum(t: Tensor, g: np.ndarray) -> None:
    if t.grad is None:
        t.grad = np.array(g, dtype=t.data.dtype, copy=True)
    else:
        t.grad += g


def _unbroadcast(g: np.ndarray, shape: tuple) -> np.ndarray:
    """Sum a gradient over the axes numpy broadcast to produce it."""
    if g.shape == shape:
        return g
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, s in enumerate(shape) if s == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g.reshape(shape)


def _operands(a, b):
    """Split a binary op's arguments into raw arrays plus Tensor flags."""
    at, bt = isinstance(a, Tensor), isinstance(b, Tensor)
    if not (at or bt):
        raise ParameterError("at least one operand must be a Tensor")
    if at and bt and a.data.dtype != b.data.dtype:
        raise ParameterError(
            f"operand dtypes differ: {a.data.dtype} vs {b.data.dtype}"
        )
    dtype = a.data.dtype if at else b.data.dtype
    av = a.data if at else np.asarray(a, dtype=dtype)
    bv = b.data if bt else np.asarray(b, dtype=dtype)
    return av, bv, at, bt, dtype


# elementwise ---------------------------------------------------------------


def add(a, b) -> Tensor:
    av, bv, at, bt, _ = _operands(a, b)
    parents = tuple(t for t, flag in ((a, at), (b, bt)) if flag)

    def _bw(g):
        if at:
            _accum(a, _unbroadcast(g, av.shape))
        if bt:
            _accum(b, _unbroadcast(g, bv.shape))

    return Tensor(av + bv, _parents=parents, _backward=_bw)


def sub(a, b) -> Tensor:
    av, bv, at, bt, _ = _operands(a, b)
    parents = tuple(t for t, flag in ((a, at), (b, bt)) if flag)

    def _bw(g):
        if at:
            _accum(a, _unbroadcast(g, av.shape))
        if bt:
            _accum(b, _unbroadcast(-g, bv.shape))

    return Tensor(av - bv, _parents=parents, _backward=_bw)


def mul(a, b) -> Tensor:
    av, bv, at, bt, _ = _operands(a, b)
    parents = tuple(t for t, flag in ((a, at), (b, bt)) if flag)

    def _bw(g):
        if at:
            _accum(a, _unbroadcast(g * bv, av.shape))
        if bt:
            _accum(b, _unbroadcast(g * av, bv.shape))

    return Tensor(av * bv, _parents=parents, _backward=_bw)


def div(a, b) -> Tensor:
    av, bv, at, bt, _ = _operands(a, b)
    parents = tuple(t for t, flag in ((a, at), (b, bt)) if flag)
    out = av / bv

    def _bw(g):
        if at:
            _accum(a, _unbroadcast(g / bv, av.shape))
        if bt:
            _accum(b, _unbroadcast(-g * av / (bv * bv), bv.shape))

    return Tensor(out, _parents=parents, _backward=_bw)


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)

    def _bw(g):
        _accum(x, g * out)

    return Tensor(out, _parents=(x,), _backward=_bw)


def log(x: Tensor) -> Tensor:
    def _bw(g):
        _accum(x, g / x.data)

    return Tensor(np.log(x.data), _parents=(x,), _backward=_bw)


def sqrt(x: Tensor) -> Tensor:
    out = np.sqrt(x.data)

    def _bw(g):
        _accum(x, g * (0.5 / out))

    return Tensor(out, _parents=(x,), _backward=_bw)


def gelu(x: Tensor) -> Tensor:
    """Gaussian error linear unit, exact erf form."""
    inv_sqrt2 = x.data.dtype.type(1.0 / math.sqrt(2.0))
    inv_sqrt2pi = x.data.dtype.type(1.0 / math.sqrt(2.0 * math.pi))
    cdf = 0.5 * (1.0 + erf(x.data * inv_sqrt2))
    out = x.data * cdf

    def _bw(g):
        pdf = np.exp(-0.5 * x.data * x.data) * inv_sqrt2pi
        _accum(x, g * (cdf + x.data * pdf))

    return Tensor(out, _parents=(x,), _backward=_bw)


# shape manipulation --------------------------------------------------------


def reshape(x: Tensor, shape) -> Tensor:
    shape = tuple(int(s) for s in shape)

    def _bw(g):
        _accum(x, g.reshape(x.data.shape))

    return Tensor(x.data.reshape(shape), _parents=(x,), _backward=_bw)


def transpose(x: Tensor, axes) -> Tensor:
    axes = tuple(int(a) for a in axes)
    inv = tuple(np.argsort(axes))

    def _bw(g):
        _accum(x, np.ascontiguousarray(g.transpose(inv)))

    return Tensor(np.ascontiguousarray(x.data.transpose(axes)), _parents=(x,), _backward=_bw)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = list(tensors)
    if not tensors:
        raise ShapeError("concat needs at least one tensor")
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def _bw(g):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            sl = [slice(None)] * g.ndim
            sl[axis] = slice(lo, hi)
            _accum(t, g[tuple(sl)])

    return Tensor(
        np.concatenate([t.data for t in tensors], axis=axis),
        _parents=tuple(tensors),
        _backward=_bw,
    )


def gather(table: Tensor, ids) -> Tensor:
    """Rows of a 2-D table selected by an integer index array.

    Output shape is ``ids.shape + (table.shape[1],)``; the backward pass
    scatter-adds with ``np.add.at`` (sequential, deterministic).
    """
    if table.ndim != 2:
        raise ShapeError(f"gather expects a 2-D table, got shape {table.shape}")
    idx = np.asarray(ids)
    if not np.issubdtype(idx.dtype, np.integer):
        raise ParameterError("gather indices must be integers")
    if idx.size and (idx.min() < 0 or idx.max() >= table.shape[0]):
        raise ShapeError(
            f"gather index out of range for table with {table.shape[0]} rows"
        )
    out = table.data[idx]

    def _bw(g):
        gt = np.zeros_like(table.data)
        np.add.at(gt, idx.ravel(), g.reshape(-1, table.data.shape[1]))
        _accum(table, gt)

    return Tensor(out, _parents=(table,), _backward=_bw)


# reductions ----------------------------------------------------------------


def tsum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = x.data.sum(axis=axis, keepdims=keepdims)

    def _bw(g):
        if axis is None:
            _accum(x, np.broadcast_to(g, x.data.shape))
            return
        if not keepdims:
            g = np.expand_dims(g, axis)
        _accum(x, np.broadcast_to(g, x.data.shape))

    return Tensor(out, _parents=(x,), _backward=_bw)


def tmean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    n = x.data.size if axis is None else x.data.shape[axis]
    if n == 0:
        raise ShapeError("mean over an empty axis")
    return mul(tsum(x, axis=axis, keepdims=keepdims), 1.0 / n)


# linear algebra ------------------------------------------------------------


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product with a fixed accumulation order.

    Supports 2-D x 2-D, batched (equal leading dims) x batched, and
    batched x 2-D. Inner dimensions must agree.
    """
    if not (isinstance(a, Tensor) and isinstance(b, Tensor)):
        raise ParameterError("matmul operands must be Tensors")
    av, bv = a.data, b.data
    if av.ndim < 2 or bv.ndim < 2:
        raise ShapeError(f"matmul needs >=2-D operands, got {av.shape} and {bv.shape}")
    if av.shape[-1] != bv.shape[-2]:
        raise ShapeError(f"matmul inner dimensions disagree: {av.shape} x {bv.shape}")
    batched_ok = (
        (av.ndim == 2 and bv.ndim == 2)
        or (av.ndim == bv.ndim and av.shape[:-2] == bv.shape[:-2])
        or (av.ndim > 2 and bv.ndim == 2)
    )
    if not batched_ok:
        raise ShapeError(f"matmul batch dimensions disagree: {av.shape} x {bv.shape}")
    out = np.matmul(av, bv)

    def _bw(g):
        ga = np.matmul(g, bv.swapaxes(-1, -2))
        _accum(a, ga)
        if bv.ndim == 2 and av.ndim > 2:
            k, n = bv.shape
            gb = np.matmul(av.reshape(-1, k).T, g.reshape(-1, n))
        else:
            gb = np.matmul(av.swapaxes(-1, -2), g)
        _accum(b, gb)

    return Tensor(out, _parents=(a, b), _backward=_bw)


# neural-net primitives ------------------------------------------------------


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    """Normalized exponentials along ``axis``, computed with max-subtraction."""
    if x.data.shape[axis] == 0:
        raise ShapeError(f"softmax along an empty axis of shape {x.shape}")
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def _bw(g):
        inner = (g * out).sum(axis=axis, keepdims=True)
        _accum(x, out * (g - inner))

    return Tensor(out, _parents=(x,), _backward=_bw)


def layernorm(x: Tensor, scale: Tensor, shift: Tensor, eps: float = 1e-5) -> Tensor:
    """Normalize the last axis to zero mean, unit variance; then affine."""
    d = x.data.shape[-1]
    if scale.data.shape != (d,) or shift.data.shape != (d,):
        raise ShapeError(
            f"layernorm scale/shift must be shape ({d},), got {scale.shape} and {shift.shape}"
        )
    mu = x.data.mean(axis=-1, keepdims=True)
    xc = x.data - mu
    var = (xc * xc).mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + x.data.dtype.type(eps))
    xhat = xc * inv
    out = xhat * scale.data + shift.data

    def _bw(g):
        axes = tuple(range(x.data.ndim - 1))
        _accum(scale, (g * xhat).sum(axis=axes))
        _accum(shift, g.sum(axis=axes))
        gh = g * scale.data
        m1 = gh.mean(axis=-1, keepdims=True)
        m2 = (gh * xhat).mean(axis=-1, keepdims=True)
        _accum(x, inv * (gh - m1 - xhat * m2))

    return Tensor(out, _parents=(x, scale, shift), _backward=_bw)


def dropout(x: Tensor, p: float, rng: SeededRng):
    """Inverted dropout: kept entries scaled by 1/(1-p).

    Returns ``(y, mask)``; the mask is a constant with entries in
    {0, 1/(1-p)}, so E[y] = x. The mask pattern is a pure function of the
    rng stream (independent of dtype). ``p = 0`` returns x unchanged.
    """
    if not (0.0 <= p < 1.0):
        raise ParameterError(f"dropout probability must be in [0, 1), got {p}")
    if p == 0.0:
        return x, Tensor(np.ones_like(x.data))
    gen = rng.generator()
    keep = gen.random(x.data.shape) >= p
    mask = keep.astype(x.data.dtype) / x.data.dtype.type(1.0 - p)
    return mul(x, mask), Tensor(mask)


def cross_entropy(logits: Tensor, labels) -> Tensor:
    """Mean softmax cross-entropy of integer ``labels`` given ``logits`` [N, C].

    Stabilized with a detached row max, which leaves value and gradient exact.
    """
    y = np.asarray(labels)
    if logits.ndim != 2 or y.shape != (logits.shape[0],):
        raise ShapeError(
            f"cross_entropy expects logits [N, C] and labels [N], got {logits.shape} and {y.shape}"
        )
    n, c = logits.shape
    if y.size and (y.min() < 0 or y.max() >= c):
        raise ShapeError(f"label index out of range for {c} classes")
    m = logits.data.max(axis=1, keepdims=True)
    z = exp(sub(logits, m))
    lse = add(log(tsum(z, axis=1)), m[:, 0])
    onehot = np.zeros((n, c), dtype=logits.data.dtype)
    onehot[np.arange(n), y] = 1.0
    picked = tsum(mul(logits, onehot), axis=1)
    return tmean(sub(lse, picked))
