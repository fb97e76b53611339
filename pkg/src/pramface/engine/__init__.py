"""Minimal reverse-mode autodiff engine: tensors, ops, SGD, gradient checks."""

from .gradcheck import GradCheckReport, ParamCheck, gradcheck
from .optim import Parameter, sgd_step, zero_grads
from .ops import (
    add,
    concat,
    conv2d,
    cross_entropy,
    div,
    fully_connected,
    matmul,
    max_pool2d,
    mfm,
    mul,
    pick,
    relu,
    reshape,
    row_cosine,
    row_norms,
    slice_rows,
    sqrt,
    sub,
    tmean,
    tsum,
)
from .tensor import (
    GraphError,
    ShapeError,
    Tensor,
    as_tensor,
    default_dtype,
    set_default_dtype,
    use_dtype,
)

__all__ = [
    "GradCheckReport",
    "GraphError",
    "ParamCheck",
    "Parameter",
    "ShapeError",
    "Tensor",
    "add",
    "as_tensor",
    "concat",
    "conv2d",
    "cross_entropy",
    "default_dtype",
    "div",
    "fully_connected",
    "gradcheck",
    "matmul",
    "max_pool2d",
    "mfm",
    "mul",
    "pick",
    "relu",
    "reshape",
    "row_cosine",
    "row_norms",
    "set_default_dtype",
    "sgd_step",
    "slice_rows",
    "sqrt",
    "sub",
    "tmean",
    "tsum",
    "use_dtype",
    "zero_grads",
]
