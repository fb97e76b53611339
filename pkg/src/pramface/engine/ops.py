"""Differentiable operations for the Tensor engine.

Every op validates shapes, computes the forward result with numpy, and
attaches a closure that routes the output gradient back to the inputs.
Elementwise arithmetic follows numpy broadcasting; the backward pass sums
gradients over broadcast axes so each input receives a gradient of its own
shape. Everything here is deterministic: identical inputs give bit-identical
outputs regardless of thread count, and argmax-style ops (max_pool2d, mfm)
break ties toward the lowest index.
"""

from __future__ import annotations

import numpy as np

from .tensor import GraphError, ShapeError, Tensor, as_tensor


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum grad over the axes numpy broadcasting expanded, back to shape."""
    if grad.shape == shape:
        return grad
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _binary(a, b, forward, grad_a, grad_b) -> Tensor:
    a = as_tensor(a)
    b = as_tensor(b)
    out_data = forward(a.data, b.data)
    requires = a.requires_grad or b.requires_grad
    if not requires:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(_unbroadcast(grad_a(g, a.data, b.data), a.data.shape))
        if b.requires_grad:
            b.accumulate_grad(_unbroadcast(grad_b(g, a.data, b.data), b.data.shape))

    return Tensor(out_data, requires_grad=True, parents=(a, b), backward=backward)


def add(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x + y, lambda g, x, y: g, lambda g, x, y: g)


def sub(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x - y, lambda g, x, y: g, lambda g, x, y: -g)


def mul(a, b) -> Tensor:
    return _binary(a, b, lambda x, y: x * y, lambda g, x, y: g * y, lambda g, x, y: g * x)


def div(a, b) -> Tensor:
    return _binary(
        a,
        b,
        lambda x, y: x / y,
        lambda g, x, y: g / y,
        lambda g, x, y: -g * x / (y * y),
    )


def relu(x: Tensor) -> Tensor:
    """max(0, x); the hinge used by the ratio-margin triplet loss."""
    out_data = np.maximum(x.data, 0)
    if not x.requires_grad:
        return Tensor(out_data)
    active = x.data > 0

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * active)

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def sqrt(x: Tensor) -> Tensor:
    out_data = np.sqrt(x.data)
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g * 0.5 / out_data)

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def tsum(x: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    out_data = x.data.sum(axis=axis, keepdims=keepdims)
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if axis is not None and not keepdims:
            g = np.expand_dims(g, axis)
        x.accumulate_grad(np.broadcast_to(g, x.data.shape).copy())

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def tmean(x: Tensor) -> Tensor:
    n = x.data.size
    out_data = x.data.mean()
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(np.broadcast_to(g / n, x.data.shape).copy())

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def reshape(x: Tensor, shape) -> Tensor:
    out_data = x.data.reshape(shape)
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        x.accumulate_grad(g.reshape(x.data.shape))

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def concat(tensors, axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    requires = any(t.requires_grad for t in tensors)
    if not requires:
        return Tensor(out_data)
    sizes = [t.data.shape[axis] for t in tensors]
    offsets = np.cumsum([0] + sizes)

    def backward(g: np.ndarray) -> None:
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t.accumulate_grad(g[tuple(index)])

    return Tensor(out_data, requires_grad=True, parents=tuple(tensors), backward=backward)


def slice_rows(x: Tensor, start: int, stop: int) -> Tensor:
    """Rows [start, stop) along the leading axis, gradient scattered back."""
    if not 0 <= start <= stop <= x.shape[0]:
        raise ShapeError(f"row slice [{start}:{stop}) out of range for shape {x.shape}")
    out_data = x.data[start:stop]
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[start:stop] += g

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def pick(x: Tensor, index: int) -> Tensor:
    """Scalar element of a 1-D tensor, differentiable w.r.t. that element."""
    if x.ndim != 1:
        raise ShapeError(f"pick expects a 1-D tensor, got shape {x.shape}")
    out_data = np.asarray(x.data[index])
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[index] += g.reshape(())

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul expects 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner dimensions disagree: {a.shape} @ {b.shape}")
    out_data = a.data @ b.data
    requires = a.requires_grad or b.requires_grad
    if not requires:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if a.requires_grad:
            a.accumulate_grad(g @ b.data.T)
        if b.requires_grad:
            b.accumulate_grad(a.data.T @ g)

    return Tensor(out_data, requires_grad=True, parents=(a, b), backward=backward)


def fully_connected(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """x @ weight + bias, bias broadcast over rows."""
    if x.ndim != 2 or weight.ndim != 2:
        raise ShapeError(f"fully_connected expects 2-D input/weight, got {x.shape}, {weight.shape}")
    if x.shape[1] != weight.shape[0]:
        raise ShapeError(f"input width {x.shape[1]} != weight rows {weight.shape[0]}")
    if bias.shape != (weight.shape[1],):
        raise ShapeError(f"bias shape {bias.shape} != ({weight.shape[1]},)")
    out_data = x.data @ weight.data + bias.data
    requires = x.requires_grad or weight.requires_grad or bias.requires_grad
    if not requires:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if x.requires_grad:
            x.accumulate_grad(g @ weight.data.T)
        if weight.requires_grad:
            weight.accumulate_grad(x.data.T @ g)
        if bias.requires_grad:
            bias.accumulate_grad(g.sum(axis=0))

    return Tensor(out_data, requires_grad=True, parents=(x, weight, bias), backward=backward)


# -- convolution --------------------------------------------------------------


def _conv_out_dim(size: int, kernel: int, stride: int, padding: int) -> int:
    return (size + 2 * padding - kernel) // stride + 1


def _im2col(xp: np.ndarray, kh: int, kw: int, stride: int, oh: int, ow: int) -> np.ndarray:
    n, c = xp.shape[:2]
    cols = np.empty((n, c, kh, kw, oh, ow), dtype=xp.dtype)
    for i in range(kh):
        for j in range(kw):
            cols[:, :, i, j] = xp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
    return cols


def conv2d(x: Tensor, weight: Tensor, stride: int = 1, padding: int = 0) -> Tensor:
    """Batched 2-D cross-correlation: (N,C,H,W) * (K,C,kh,kw) -> (N,K,H',W')."""
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects 4-D input/weight, got {x.shape}, {weight.shape}")
    n, c, h, w = x.shape
    k, cw, kh, kw = weight.shape
    if c != cw:
        raise ShapeError(f"input has {c} channels but weight expects {cw}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")
    if kh > h + 2 * padding or kw > w + 2 * padding:
        raise ShapeError(f"kernel {kh}x{kw} larger than padded input {h + 2 * padding}x{w + 2 * padding}")

    oh = _conv_out_dim(h, kh, stride, padding)
    ow = _conv_out_dim(w, kw, stride, padding)
    xp = np.pad(x.data, ((0, 0), (0, 0), (padding, padding), (padding, padding))) if padding else x.data
    cols = _im2col(xp, kh, kw, stride, oh, ow).reshape(n, c * kh * kw, oh * ow)
    wmat = weight.data.reshape(k, c * kh * kw)
    out_data = np.matmul(wmat, cols).reshape(n, k, oh, ow)

    requires = x.requires_grad or weight.requires_grad
    if not requires:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        gmat = g.reshape(n, k, oh * ow)
        if weight.requires_grad:
            dw = np.matmul(gmat, cols.transpose(0, 2, 1)).sum(axis=0)
            weight.accumulate_grad(dw.reshape(weight.data.shape))
        if x.requires_grad:
            dcols = np.matmul(wmat.T, gmat).reshape(n, c, kh, kw, oh, ow)
            dxp = np.zeros_like(xp)
            for i in range(kh):
                for j in range(kw):
                    dxp[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += dcols[:, :, i, j]
            dx = dxp[:, :, padding : padding + h, padding : padding + w] if padding else dxp
            x.accumulate_grad(dx)

    return Tensor(out_data, requires_grad=True, parents=(x, weight), backward=backward)


def max_pool2d(x: Tensor, window: int, stride: int) -> Tensor:
    """Per-window spatial maximum; ties route the gradient to the first
    (row-major lowest) position inside the window."""
    if x.ndim != 4:
        raise ShapeError(f"max_pool2d expects (N,C,H,W), got {x.shape}")
    n, c, h, w = x.shape
    if window > h or window > w:
        raise ShapeError(f"window {window} larger than input {h}x{w}")
    if stride < 1:
        raise ShapeError(f"stride must be >= 1, got {stride}")

    oh = _conv_out_dim(h, window, stride, 0)
    ow = _conv_out_dim(w, window, stride, 0)
    best = None
    best_pos = None
    for pos in range(window * window):
        i, j = divmod(pos, window)
        tile = x.data[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride]
        if best is None:
            best = tile.copy()
            best_pos = np.zeros((n, c, oh, ow), dtype=np.int16)
        else:
            better = tile > best
            best = np.where(better, tile, best)
            best_pos = np.where(better, np.int16(pos), best_pos)

    if not x.requires_grad:
        return Tensor(best)

    def backward(g: np.ndarray) -> None:
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        for pos in range(window * window):
            i, j = divmod(pos, window)
            x.grad[:, :, i : i + stride * oh : stride, j : j + stride * ow : stride] += g * (best_pos == pos)

    return Tensor(best, requires_grad=True, parents=(x,), backward=backward)


def mfm(x: Tensor, axis: int | None = None) -> Tensor:
    """Max-feature-map: split the given axis in half, take the elementwise max.

    Applies to the channel axis of (N,C,H,W) activations and the feature axis
    of (N,D) / (D,) vectors alike; ties route the gradient to the first half.
    """
    if axis is None:
        axis = 1 if x.ndim >= 2 else 0
    width = x.shape[axis]
    if width % 2:
        raise ShapeError(f"mfm needs an even size on axis {axis}, got {width}")
    half = width // 2
    lo_index = tuple(slice(None) if d != axis else slice(0, half) for d in range(x.ndim))
    hi_index = tuple(slice(None) if d != axis else slice(half, width) for d in range(x.ndim))
    lo = x.data[lo_index]
    hi = x.data[hi_index]
    first_wins = lo >= hi
    out_data = np.where(first_wins, lo, hi)
    if not x.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        if x.grad is None:
            x.grad = np.zeros_like(x.data)
        x.grad[lo_index] += g * first_wins
        x.grad[hi_index] += g * ~first_wins

    return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)


def cross_entropy(logits: Tensor, labels: np.ndarray) -> Tensor:
    """Mean softmax cross-entropy over rows, numerically stabilized."""
    if logits.ndim != 2:
        raise ShapeError(f"cross_entropy expects (N,K) logits, got {logits.shape}")
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} != ({n},)")
    if labels.min() < 0 or labels.max() >= k:
        raise ShapeError(f"labels outside [0, {k})")

    shifted = logits.data - logits.data.max(axis=1, keepdims=True)
    exps = np.exp(shifted)
    probs = exps / exps.sum(axis=1, keepdims=True)
    picked = shifted[np.arange(n), labels] - np.log(exps.sum(axis=1))
    out_data = np.asarray(-picked.mean(), dtype=logits.dtype)
    if not logits.requires_grad:
        return Tensor(out_data)

    def backward(g: np.ndarray) -> None:
        d = probs.copy()
        d[np.arange(n), labels] -= 1.0
        logits.accumulate_grad(d * (g / n))

    return Tensor(out_data, requires_grad=True, parents=(logits,), backward=backward)


def row_norms(x: Tensor, eps: float = 0.0) -> Tensor:
    """Euclidean norm of each row of (N,D), shape (N,1)."""
    sq = tsum(mul(x, x), axis=1, keepdims=True)
    if eps:
        sq = add(sq, eps)
    return sqrt(sq)


def row_cosine(u: Tensor, v: Tensor) -> Tensor:
    """Cosine similarity between matching rows of two (N,D) tensors -> (N,)."""
    if u.shape != v.shape or u.ndim != 2:
        raise ShapeError(f"row_cosine expects matching (N,D) tensors, got {u.shape}, {v.shape}")
    nu = row_norms(u)
    nv = row_norms(v)
    if (nu.data == 0).any() or (nv.data == 0).any():
        raise ValueError("zero-norm row in cosine similarity")
    dots = tsum(mul(u, v), axis=1, keepdims=True)
    return reshape(div(dots, mul(nu, nv)), (u.shape[0],))
