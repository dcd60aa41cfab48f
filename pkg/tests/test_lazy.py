import numpy as np
import pytest

from lazytensor import (
    OracleCounter,
    StepStatus,
    build_fd_tensor,
    builtin_problem,
    decrease_threshold,
    lazy_tensor_steps,
)
from lazytensor.problems import quadratic


def test_threshold_example():
    oracle = 1e-4 / (2**6 * 3 * 22 * 2)
    assert oracle == pytest.approx(1.18371e-8, rel=1e-5)
    assert decrease_threshold(22.0, 1e-2, 1, 0) == pytest.approx(oracle, rel=1e-14)


def test_threshold_linear_in_steps():
    assert decrease_threshold(5.0, 1e-3, 2, 1) == pytest.approx(2 * decrease_threshold(5.0, 1e-3, 2, 0), rel=1e-15)


def test_threshold_vanishes_for_large_sigma():
    assert decrease_threshold(1e300, 1e-2, 1, 0) < 1e-300


def _run(P, x, p, sigma, m, eps, h=1e-6, budget=10_000):
    C = OracleCounter()
    T = build_fd_tensor(P, None, x, h, p)
    z, status, state = lazy_tensor_steps(P, C, x, T, sigma, m, eps, budget)
    return z, status, state, C.calls


def test_solution_after_one_step():
    P = quadratic(3)
    z, status, state, calls = _run(P, np.array([1.0, -2.0, 0.5]), 2, 1e-3, 1, 1e-2)
    assert status == StepStatus.SOLUTION
    assert state.steps == 1 and calls == 2
    assert np.linalg.norm(z) <= 1e-2


def test_success_on_quadratic():
    P = quadratic(2)
    sigma, m, eps = 4.0, 3, 1e-8
    z, status, state, calls = _run(P, np.array([10.0, 0.0]), 1, sigma, m, eps)
    assert status == StepStatus.SUCCESS
    assert calls == 2 * m
    for rec in state.trace:
        assert rec.decrease >= decrease_threshold(sigma, eps, 1, rec.t)
    assert state.f_tilde == min(rec.f for rec in state.trace)
    np.testing.assert_array_equal(z, state.x_tilde)


def test_halt_when_sigma_is_far_too_small():
    P = quadratic(2, np.diag([100.0, 1.0]))
    x = np.array([1.0, 1.0])
    z, status, state, calls = _run(P, x, 1, 1e-2, 5, 1e-6)
    assert status == StepStatus.HALT
    assert state.t == 0 and state.steps == 1 and calls == 2
    np.testing.assert_array_equal(z, x)
    assert state.trace[0].decrease < state.trace[0].threshold


def test_subsolve_failure_is_a_flagged_halt():
    P = builtin_problem("rosenbrock_chain", 4)
    x = P.start()
    z, status, state, calls = _run(P, x, 3, 1.0, 4, 1e-6, budget=1)
    assert status == StepStatus.HALT
    assert state.trace[-1].subsolve_failed
    assert calls == 2 * state.steps


@pytest.mark.parametrize("p", [1, 2, 3])
def test_accounting_and_best_so_far(rng, p):
    P = builtin_problem("cos_sum", 4)
    for _ in range(10):
        x = rng.uniform(-3, 3, 4)
        _, status, state, calls = _run(P, x, p, 30.0 * (p + 1), 5, 1e-3, h=1e-4)
        assert calls == 2 * state.steps
        assert state.f_tilde == min([state.f_x0] + [rec.f for rec in state.trace])
        if status == StepStatus.SUCCESS:
            assert all(rec.decrease >= rec.threshold for rec in state.trace)
        elif status == StepStatus.HALT:
            last = state.trace[-1]
            assert last.decrease < last.threshold or last.subsolve_failed
        else:
            assert state.trace[-1].grad_norm <= 1e-3


def test_rejects_bad_arguments():
    P = quadratic(2)
    T = build_fd_tensor(P, None, np.ones(2), 1e-3, 1)
    with pytest.raises(ValueError):
        lazy_tensor_steps(P, None, np.ones(2), T, 1.0, 0, 1e-3)
    with pytest.raises(ValueError):
        lazy_tensor_steps(P, None, np.ones(2), T, -1.0, 1, 1e-3)
