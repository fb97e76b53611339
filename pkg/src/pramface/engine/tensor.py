"""Reverse-mode automatic differentiation on numpy arrays.

A Tensor wraps an ndarray plus an optional gradient buffer. Operations on
tensors (see ops.py) record a backward closure and their input tensors;
calling backward() on a scalar result walks the recorded graph in reverse
topological order exactly once and accumulates gradients additively into
every reachable tensor with requires_grad=True. Gradients persist until
explicitly cleared, so several losses can backpropagate through shared
parameters before one optimizer step.

Training runs in float32; gradient checking switches the whole engine to
float64 through use_dtype()/set_default_dtype().
"""

from __future__ import annotations

from contextlib import contextmanager

import numpy as np


class ShapeError(ValueError):
    """Operand shapes violate an operation's contract."""


class GraphError(RuntimeError):
    """Backward invoked on something that cannot support it."""


_default_dtype = np.float32

_ALLOWED_DTYPES = (np.float32, np.float64)


def default_dtype() -> type:
    return _default_dtype


def set_default_dtype(dtype) -> None:
    dt = np.dtype(dtype).type
    if dt not in _ALLOWED_DTYPES:
        raise ValueError(f"unsupported element type {dtype!r}; use float32 or float64")
    global _default_dtype
    _default_dtype = dt


@contextmanager
def use_dtype(dtype):
    """Temporarily switch the element type new tensors are created with."""
    previous = _default_dtype
    set_default_dtype(dtype)
    try:
        yield
    finally:
        set_default_dtype(previous)


class Tensor:
    """N-dimensional array with optional gradient tracking.

    `grad` is lazily allocated by the backward pass and accumulates across
    backward calls; it always matches `data` in shape and dtype.
    """

    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(self, data, requires_grad: bool = False, *, parents=(), backward=None):
        if isinstance(data, Tensor):
            raise TypeError("cannot wrap a Tensor in a Tensor")
        arr = np.asarray(data)
        if arr.dtype.type not in _ALLOWED_DTYPES:
            arr = arr.astype(_default_dtype)
        self.data = arr
        self.grad: np.ndarray | None = None
        self.requires_grad = bool(requires_grad)
        self._parents = tuple(parents)
        self._backward = backward

    # -- basic introspection -------------------------------------------------

    @property
    def shape(self) -> tuple[int, ...]:
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
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def numpy(self) -> np.ndarray:
        return self.data

    def is_leaf(self) -> bool:
        return not self._parents and self._backward is None

    def __repr__(self) -> str:
        flags = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.data.dtype.name}{flags})"

    # -- gradient plumbing ---------------------------------------------------

    def accumulate_grad(self, g: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += g

    def zero_grad(self) -> None:
        self.grad = None

    def backward(self) -> None:
        """Backpropagate from this scalar through the recorded graph.

        Visits each node once, in reverse topological order. Gradients are
        added into any existing .grad buffers, so repeated backward passes
        (over fresh forward graphs) accumulate until cleared.
        """
        if self.data.size != 1:
            raise GraphError(f"backward requires a scalar loss, got shape {self.shape}")
        if self.is_leaf():
            raise GraphError("backward on a leaf tensor: no recorded graph to traverse")

        order: list[Tensor] = []
        seen: set[int] = set()
        stack: list[tuple[Tensor, bool]] = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if id(parent) not in seen:
                    stack.append((parent, False))

        self.accumulate_grad(np.ones_like(self.data))
        for node in reversed(order):
            if node._backward is not None and node.grad is not None:
                node._backward(node.grad)

    # -- operator sugar (implemented in ops.py, bound at import time) --------

    def __add__(self, other):
        return _ops().add(self, other)

    def __radd__(self, other):
        return _ops().add(self, other)

    def __sub__(self, other):
        return _ops().sub(self, other)

    def __rsub__(self, other):
        return _ops().sub(other, self)

    def __mul__(self, other):
        return _ops().mul(self, other)

    def __rmul__(self, other):
        return _ops().mul(self, other)

    def __truediv__(self, other):
        return _ops().div(self, other)

    def __rtruediv__(self, other):
        return _ops().div(other, self)

    def __neg__(self):
        return _ops().mul(self, -1.0)

    def sum(self, axis=None, keepdims: bool = False):
        return _ops().tsum(self, axis=axis, keepdims=keepdims)

    def mean(self):
        return _ops().tmean(self)

    def reshape(self, *shape):
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return _ops().reshape(self, shape)


_ops_module = None


def _ops():
    global _ops_module
    if _ops_module is None:
        from . import ops as _ops_module_imported

        _ops_module = _ops_module_imported
    return _ops_module


def as_tensor(x, dtype=None) -> Tensor:
    """Wrap x as a constant (non-differentiable) tensor of the active dtype."""
    if isinstance(x, Tensor):
        return x
    arr = np.asarray(x, dtype=dtype or _default_dtype)
    return Tensor(arr)
