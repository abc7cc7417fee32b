"""Named, ordered parameter collections and the gradient entry point."""

from __future__ import annotations

from typing import Callable, Dict, Iterator, Tuple

import numpy as np

from ..errors import ContractError, ParameterError
from .tensor import Tensor


class ParamSet:
    """Ordered map of name -> Tensor with a frozen flag per entry.

    Iteration order is insertion order and is stable, which fixes the byte
    layout of checkpoints and the reduction order of the global gradient
    norm. Frozen entries are never modified by an optimizer step.
    """

    def __init__(self):
        self._entries: Dict[str, Tensor] = {}
        self._frozen: Dict[str, bool] = {}

    def add(self, name: str, tensor: Tensor, frozen: bool = False) -> None:
        if name in self._entries:
            raise ParameterError(f"duplicate parameter name: {name}")
        if not isinstance(tensor, Tensor):
            raise ParameterError(f"parameter {name} must be a Tensor")
        self._entries[name] = tensor
        self._frozen[name] = bool(frozen)

    def __getitem__(self, name: str) -> Tensor:
        return self._entries[name]

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def names(self) -> Tuple[str, ...]:
        return tuple(self._entries)

    def items(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self._entries.items())

    def is_frozen(self, name: str) -> bool:
        return self._frozen[name]

    def freeze(self, name: str) -> None:
        if name not in self._frozen:
            raise ParameterError(f"unknown parameter: {name}")
        self._frozen[name] = True

    def freeze_all(self) -> None:
        for name in self._frozen:
            self._frozen[name] = True

    def freeze_prefix(self, prefix: str) -> None:
        for name in self._frozen:
            if name.startswith(prefix):
                self._frozen[name] = True

    def any_frozen(self) -> bool:
        return any(self._frozen.values())

    def clone(self, unfreeze: bool = False) -> "ParamSet":
        """Deep copy; with ``unfreeze=True`` this is the documented way to
        reconstruct a trainable set from a frozen one."""
        out = ParamSet()
        for name, t in self._entries.items():
            out.add(name, Tensor(t.data.copy()), frozen=False if unfreeze else self._frozen[name])
        return out

    def subset(self, prefix: str) -> "ParamSet":
        """New set sharing the same Tensors, restricted to one name prefix."""
        out = ParamSet()
        for name, t in self._entries.items():
            if name.startswith(prefix):
                out.add(name, t, frozen=self._frozen[name])
        return out

    @staticmethod
    def merged(*sets: "ParamSet") -> "ParamSet":
        """Union sharing the same Tensors; names must not collide."""
        out = ParamSet()
        for ps in sets:
            for name, t in ps.items():
                out.add(name, t, frozen=ps.is_frozen(name))
        return out

    def __repr__(self) -> str:
        return f"ParamSet({len(self)} entries)"


def value_and_grad(
    f: Callable[[ParamSet], Tensor], params: ParamSet
) -> Tuple[float, Dict[str, np.ndarray]]:
    """Evaluate a scalar-valued function of ``params`` and its gradient.

    ``f`` must be composed of the differentiable primitives in this package
    and must hold any stochastic masks fixed for the evaluation (dropout
    masks are sampled up front and treated as constants). Gradients are
    returned for every entry, frozen ones included; freezing only affects
    optimizer steps.
    """
    for _, t in params.items():
        t.grad = None
    out = f(params)
    if not isinstance(out, Tensor) or out.data.size != 1:
        raise ContractError("value_and_grad requires f to return a scalar Tensor")
    out.backward()
    value = float(out.data.reshape(()))
    grads = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in params.items()
    }
    return value, grads
