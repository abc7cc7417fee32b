"""Deterministic tensor math with reverse-mode gradients."""

from .optim import DEFAULT_LR, global_grad_norm, sgd_step
from .params import ParamSet, value_and_grad
from .rng import SeededRng
from .tensor import (
    Tensor,
    add,
    concat,
    cross_entropy,
    div,
    dropout,
    exp,
    gather,
    gelu,
    layernorm,
    log,
    matmul,
    mul,
    reshape,
    softmax,
    sqrt,
    sub,
    tmean,
    transpose,
    tsum,
)

__all__ = [
    "DEFAULT_LR",
    "ParamSet",
    "SeededRng",
    "Tensor",
    "add",
    "concat",
    "cross_entropy",
    "div",
    "dropout",
    "exp",
    "gather",
    "gelu",
    "global_grad_norm",
    "layernorm",
    "log",
    "matmul",
    "mul",
    "reshape",
    "sgd_step",
    "softmax",
    "sqrt",
    "sub",
    "tmean",
    "transpose",
    "tsum",
    "value_and_grad",
]
