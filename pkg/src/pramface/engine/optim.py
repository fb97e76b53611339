"""Named parameters and plain SGD with decoupled-from-nothing weight decay.

The update is w <- w - lr * (grad + weight_decay * w). Frozen parameters are
skipped entirely, which keeps their values bit-identical across any number
of steps. Gradients are left untouched by the step; clearing them is an
explicit, separate call so multiple losses can accumulate first.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from .tensor import GraphError, Tensor


class Parameter:
    """A trainable tensor with a registry name and an optional freeze flag."""

    __slots__ = ("name", "tensor", "frozen")

    def __init__(self, name: str, data, frozen: bool = False):
        self.name = name
        if isinstance(data, Tensor):
            data.requires_grad = True
            self.tensor = data
        else:
            self.tensor = Tensor(np.asarray(data), requires_grad=True)
        self.frozen = bool(frozen)

    @property
    def data(self) -> np.ndarray:
        return self.tensor.data

    @property
    def grad(self) -> np.ndarray | None:
        return self.tensor.grad

    def __repr__(self) -> str:
        frozen = ", frozen" if self.frozen else ""
        return f"Parameter({self.name!r}, shape={self.tensor.shape}{frozen})"


def sgd_step(params: Iterable[Parameter], lr: float, weight_decay: float = 0.0) -> None:
    if lr <= 0:
        raise ValueError(f"learning rate must be positive, got {lr}")
    if weight_decay < 0:
        raise ValueError(f"weight decay must be >= 0, got {weight_decay}")
    for p in params:
        if p.frozen:
            continue
        if p.tensor.grad is None:
            raise GraphError(f"parameter {p.name!r} has no gradient; run backward first")
        update = p.tensor.grad + weight_decay * p.tensor.data
        p.tensor.data -= np.asarray(lr, dtype=p.tensor.data.dtype) * update


def zero_grads(params: Iterable[Parameter]) -> None:
    for p in params:
        p.tensor.zero_grad()
