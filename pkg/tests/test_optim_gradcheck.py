import numpy as np
import numpy.testing as npt
import pytest

from pramface.engine import (
    GraphError,
    Parameter,
    Tensor,
    gradcheck,
    mul,
    sgd_step,
    use_dtype,
    zero_grads,
)


class TestSgd:
    def test_zero_grad_zero_decay_is_identity(self):
        p = Parameter("w", np.array([1.0]))
        p.tensor.grad = np.array([0.0])
        sgd_step([p], lr=0.1)
        npt.assert_array_equal(p.data, [1.0])

    def test_basic_step(self):
        p = Parameter("w", np.array([0.0]))
        p.tensor.grad = np.array([1.0])
        sgd_step([p], lr=0.1)
        npt.assert_allclose(p.data, [-0.1])

    def test_default_hyperparameters_hand_value(self):
        # w=2, grad=1, lr=1e-3, wd=5e-4: w - 1e-3*(1 + 5e-4*2) = 1.998999
        p = Parameter("w", np.array([2.0], dtype=np.float64))
        p.tensor.grad = np.array([1.0])
        sgd_step([p], lr=1e-3, weight_decay=5e-4)
        npt.assert_allclose(p.data, [1.998999], atol=1e-12)

    def test_frozen_parameter_bits_never_change(self):
        data = np.random.default_rng(0).normal(size=(4, 4)).astype(np.float32)
        p = Parameter("w", data.copy(), frozen=True)
        p.tensor.grad = np.ones_like(data)
        for _ in range(50):
            sgd_step([p], lr=0.5, weight_decay=0.1)
        assert p.data.tobytes() == data.tobytes()

    def test_missing_grad_raises(self):
        p = Parameter("w", np.array([1.0]))
        with pytest.raises(GraphError, match="w"):
            sgd_step([p], lr=0.1)

    def test_step_leaves_grads_unchanged(self):
        p = Parameter("w", np.array([2.0]))
        p.tensor.grad = np.array([3.0])
        sgd_step([p], lr=0.1, weight_decay=0.5)
        npt.assert_array_equal(p.grad, [3.0])

    def test_invalid_hyperparameters(self):
        p = Parameter("w", np.array([1.0]))
        p.tensor.grad = np.array([0.0])
        with pytest.raises(ValueError):
            sgd_step([p], lr=0.0)
        with pytest.raises(ValueError):
            sgd_step([p], lr=0.1, weight_decay=-1.0)

    def test_zero_grads(self):
        p = Parameter("w", np.array([1.0]))
        p.tensor.grad = np.array([5.0])
        zero_grads([p])
        assert p.grad is None


class TestGradcheckHarness:
    def test_linear_layer_passes_tight_tolerance(self):
        with use_dtype(np.float64):
            rng = np.random.default_rng(1)
            w = Parameter("w", rng.normal(size=(3, 2)))

            def loss():
                return (w.tensor * 2.5).sum()

            report = gradcheck(loss, [w], epsilon=1e-6, tolerance=1e-6)
            assert report.passed, report.format_table()

    def test_corrupted_gradient_fails(self):
        with use_dtype(np.float64):
            w = Parameter("w", np.random.default_rng(2).normal(size=(4,)))

            def bad_double(x: Tensor) -> Tensor:
                out_data = x.data * 1.0

                def backward(g):
                    x.accumulate_grad(2.0 * g)  # deliberately wrong (x2)

                return Tensor(out_data, requires_grad=True, parents=(x,), backward=backward)

            def loss():
                return bad_double(mul(w.tensor, w.tensor)).sum()

            report = gradcheck(loss, [w], tolerance=1e-4)
            assert not report.passed
            assert report.max_rel_err > 0.4

    def test_float32_parameters_rejected(self):
        w = Parameter("w", np.ones(3, dtype=np.float32))
        with pytest.raises(ValueError, match="float64"):
            gradcheck(lambda: w.tensor.sum(), [w])

    def test_nondeterministic_fragment_rejected(self):
        with use_dtype(np.float64):
            w = Parameter("w", np.ones(2))
            state = {"calls": 0}

            def loss():
                state["calls"] += 1
                return (w.tensor * float(state["calls"])).sum()

            with pytest.raises(RuntimeError, match="deterministic"):
                gradcheck(loss, [w])

    def test_epsilon_range_enforced(self):
        with use_dtype(np.float64):
            w = Parameter("w", np.ones(2))
            with pytest.raises(ValueError):
                gradcheck(lambda: (w.tensor * 2.0).sum(), [w], epsilon=1e-2)

    def test_report_table_format(self):
        with use_dtype(np.float64):
            w = Parameter("trunk.conv0.weight", np.random.default_rng(3).normal(size=(2, 2)))
            report = gradcheck(lambda: (w.tensor * w.tensor).sum(), [w], tolerance=1e-6)
            table = report.format_table()
            assert "trunk.conv0.weight" in table
            assert "PASS" in table
