"""Finite-difference verification of analytic gradients.

The checker reruns a scalar loss function while nudging one parameter
element at a time and compares the central-difference slope against the
gradient produced by backward(). It runs in float64 only; float32 has too
little headroom to separate real gradient bugs from rounding noise.

order=2 is the classic two-point central difference; order=4 is the
five-point central stencil, used for deep fragments where second-order
truncation error would otherwise dominate tiny gradient entries.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .optim import Parameter, zero_grads
from .tensor import Tensor


@dataclass
class ParamCheck:
    name: str
    max_rel_err: float
    worst_analytic: float
    worst_numeric: float

    def passed(self, tolerance: float) -> bool:
        return self.max_rel_err < tolerance


@dataclass
class GradCheckReport:
    epsilon: float
    tolerance: float
    checks: list[ParamCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed(self.tolerance) for c in self.checks)

    @property
    def max_rel_err(self) -> float:
        return max((c.max_rel_err for c in self.checks), default=0.0)

    def format_table(self) -> str:
        width = max([len(c.name) for c in self.checks] + [9])
        lines = [f"{'parameter':<{width}}  {'max rel err':>12}  status"]
        for c in self.checks:
            status = "ok" if c.passed(self.tolerance) else "FAIL"
            lines.append(f"{c.name:<{width}}  {c.max_rel_err:>12.3e}  {status}")
        lines.append(f"tolerance {self.tolerance:g}, epsilon {self.epsilon:g}: "
                     f"{'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def _relative_errors(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return np.abs(analytic - numeric) / denom


def gradcheck(
    loss_fn: Callable[[], Tensor],
    params: Sequence[Parameter],
    epsilon: float = 1e-5,
    tolerance: float = 1e-4,
    order: int = 2,
) -> GradCheckReport:
    """Compare backward() gradients of loss_fn against central differences.

    loss_fn must rebuild its forward graph on every call and must be
    deterministic; parameters and any internal tensors must be float64.
    """
    if not 1e-7 <= epsilon <= 1e-3:
        raise ValueError(f"epsilon {epsilon} outside [1e-7, 1e-3]")
    if order not in (2, 4):
        raise ValueError(f"order must be 2 or 4, got {order}")
    for p in params:
        if p.tensor.data.dtype != np.float64:
            raise ValueError(f"gradcheck requires float64 parameters; {p.name!r} is "
                             f"{p.tensor.data.dtype.name}")

    ref = loss_fn().item()
    if loss_fn().item() != ref:
        raise RuntimeError("loss function is not deterministic; gradient check is meaningless")

    zero_grads(params)
    loss = loss_fn()
    loss.backward()
    analytic = {p.name: np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params}

    def evaluate() -> float:
        return loss_fn().item()

    report = GradCheckReport(epsilon=epsilon, tolerance=tolerance)
    for p in params:
        flat = p.tensor.data.reshape(-1)
        numeric = np.zeros_like(flat)
        for i in range(flat.size):
            saved = flat[i]
            if order == 2:
                flat[i] = saved + epsilon
                f_plus = evaluate()
                flat[i] = saved - epsilon
                f_minus = evaluate()
                numeric[i] = (f_plus - f_minus) / (2 * epsilon)
            else:
                flat[i] = saved + epsilon
                f_p1 = evaluate()
                flat[i] = saved - epsilon
                f_m1 = evaluate()
                flat[i] = saved + 2 * epsilon
                f_p2 = evaluate()
                flat[i] = saved - 2 * epsilon
                f_m2 = evaluate()
                numeric[i] = (8 * (f_p1 - f_m1) - (f_p2 - f_m2)) / (12 * epsilon)
            flat[i] = saved
        errs = _relative_errors(analytic[p.name].reshape(-1), numeric)
        worst = int(np.argmax(errs)) if errs.size else 0
        report.checks.append(
            ParamCheck(
                name=p.name,
                max_rel_err=float(errs.max()) if errs.size else 0.0,
                worst_analytic=float(analytic[p.name].reshape(-1)[worst]) if errs.size else 0.0,
                worst_numeric=float(numeric[worst]) if errs.size else 0.0,
            )
        )
    return report
