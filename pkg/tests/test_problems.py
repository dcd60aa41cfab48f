import numpy as np
import pytest

from lazytensor import (
    BUILTINS,
    OracleCounter,
    UnsupportedOrderError,
    builtin_problem,
    evaluate,
    operator_norm,
)
from lazytensor.problems import quadratic


def test_quadratic_values_and_count(rng):
    A = rng.standard_normal((3, 3))
    A = A @ A.T
    P = quadratic(3, A)
    C = OracleCounter()
    x = rng.standard_normal(3)
    out = evaluate(P, C, x, {0, 1})
    assert out[0] == pytest.approx(0.5 * x @ A @ x, rel=1e-14)
    np.testing.assert_allclose(out[1].entries, A @ x, rtol=1e-14)
    assert C.calls == 1


def test_separate_requests_count_separately():
    P = builtin_problem("cos_sum", 3)
    C = OracleCounter()
    evaluate(P, C, np.zeros(3), {0})
    evaluate(P, C, np.zeros(3), {1})
    assert C.calls == 2


def test_many_orders_count_once():
    P = builtin_problem("cos_sum", 3)
    C = OracleCounter()
    evaluate(P, C, np.zeros(3), {0, 1, 2})
    assert C.calls == 1


def test_counter_exact_after_scripted_sequence(rng):
    P = builtin_problem("logistic_smooth", 4)
    C = OracleCounter()
    script = [set(map(int, rng.choice(4, size=rng.integers(1, 5), replace=False))) for _ in range(37)]
    for orders in script:
        evaluate(P, C, rng.standard_normal(4), orders)
    assert C.calls == len(script)


def test_unsupported_order_and_bad_points():
    P = builtin_problem("cos_sum", 2)
    with pytest.raises(UnsupportedOrderError):
        evaluate(P, None, np.zeros(2), {4})
    with pytest.raises(ValueError):
        evaluate(P, None, np.array([np.inf, 0.0]), {0})
    with pytest.raises(ValueError):
        evaluate(P, None, np.zeros(2), set())


def test_cos_sum_at_origin():
    out = evaluate(builtin_problem("cos_sum", 3), None, np.zeros(3), {0, 1, 2})
    assert out[0] == 3.0
    np.testing.assert_array_equal(out[1].entries, np.zeros(3))
    np.testing.assert_array_equal(out[2].entries, -np.eye(3))


def test_quadratic_identity_example():
    out = evaluate(builtin_problem("quadratic", 2), None, np.ones(2), {0, 1})
    assert out[0] == 1.0
    np.testing.assert_array_equal(out[1].entries, [1.0, 1.0])


def test_rosenbrock_minimizer():
    out = evaluate(builtin_problem("rosenbrock_chain", 2), None, np.ones(2), {0, 1})
    assert out[0] == 0.0
    np.testing.assert_array_equal(out[1].entries, [0.0, 0.0])


def test_unknown_problem_lists_names():
    with pytest.raises(ValueError, match="cos_sum"):
        builtin_problem("himmelblau", 2)


@pytest.mark.parametrize("name", sorted(BUILTINS))
@pytest.mark.parametrize("q", [1, 2, 3])
def test_derivatives_match_central_differences(name, q):
    rng = np.random.default_rng(7)
    n = 4
    P = builtin_problem(name, n)
    step = 1e-6
    for _ in range(3):
        x = rng.uniform(-2, 2, n)
        exact = evaluate(P, None, x, {q})[q]
        exact = exact.entries
        fd = np.zeros_like(exact)
        for i in range(n):
            e = np.zeros(n)
            e[i] = step
            hi = evaluate(P, None, x + e, {q - 1})[q - 1]
            lo = evaluate(P, None, x - e, {q - 1})[q - 1]
            if q == 1:
                fd[i] = (hi - lo) / (2 * step)
            else:
                fd[i] = (hi.entries - lo.entries) / (2 * step)
        scale = max(1.0, float(np.max(np.abs(exact))))
        np.testing.assert_allclose(fd, exact, rtol=1e-5, atol=1e-5 * scale)


def test_cubic_sep_is_twice_continuous_at_the_seam():
    P = builtin_problem("cubic_sep", 1)
    for q in (0, 1, 2):
        a = evaluate(P, None, np.array([-1.0 - 1e-12]), {q})[q]
        b = evaluate(P, None, np.array([-1.0 + 1e-12]), {q})[q]
        a = a if q == 0 else a.entries
        b = b if q == 0 else b.entries
        np.testing.assert_allclose(a, b, atol=1e-10)


@pytest.mark.parametrize("name", ["cos_sum", "cubic_sep", "logistic_smooth", "quadratic"])
def test_f_low_is_a_lower_bound(name):
    P = builtin_problem(name, 3)
    rng = np.random.default_rng(1)
    for x in rng.uniform(-6, 6, (500, 3)):
        assert evaluate(P, None, x, {0})[0] >= P.f_low - 1e-12


def test_cubic_sep_f_low_attained():
    P = builtin_problem("cubic_sep", 2)
    x = np.full(2, -2.0 - np.sqrt(3.0))
    out = evaluate(P, None, x, {0, 1})
    assert out[0] == pytest.approx(P.f_low, abs=1e-12)
    np.testing.assert_allclose(out[1].entries, 0.0, atol=1e-12)


@pytest.mark.parametrize("name", ["cos_sum", "cubic_sep", "logistic_smooth"])
@pytest.mark.parametrize("p", [1, 2, 3])
def test_lipschitz_certificate(name, p):
    P = builtin_problem(name, 3)
    L = P.lipschitz_constant(p)
    if L is None:
        pytest.skip(f"{name} has no Lipschitz constant for p={p}")
    rng = np.random.default_rng(3)
    slack = 1e-6 if p == 3 else 1e-12
    for _ in range(40):
        x, y = rng.uniform(-3, 3, (2, 3))
        gap = evaluate(P, None, x, {p})[p] - evaluate(P, None, y, {p})[p]
        assert operator_norm(gap) <= L * np.linalg.norm(x - y) + slack
