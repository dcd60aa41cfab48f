import numpy as np
import pytest

from lazytensor import (
    RankOneSum,
    RegularizedModel,
    SymmetricTensor,
    check_acceptance,
    model_gradient,
    model_value,
    subsolve,
    symmetrize,
)

from conftest import central_gradient, random_model


def _p1_model(T, sigma, f=0.0, anchor=(0.0, 0.0)):
    return RegularizedModel(np.array(anchor), f, (), RankOneSum(np.array(T, dtype=float)), sigma)


@pytest.mark.parametrize("p", [1, 2, 3])
def test_anchor_identity_is_exact(rng, p):
    for _ in range(20):
        M = random_model(rng, p, 4)
        assert model_value(M, M.anchor) == M.f_anchor


def test_p1_value_example():
    M = _p1_model([1.0, 0.0], 2.0)
    assert model_value(M, [1.0, 0.0]) == 2.0


def test_p2_value_example():
    # f = |x|^2 / 2 at 0: gradient 0, tensor I, sigma 6, step (1, 0)
    M = RegularizedModel(np.zeros(2), 0.0, (SymmetricTensor(np.zeros(2)),), RankOneSum(np.eye(2)), 6.0)
    assert model_value(M, [1.0, 0.0]) == pytest.approx(1.5, rel=1e-15)


def test_gradient_at_anchor(rng):
    M = random_model(rng, 2, 3)
    np.testing.assert_array_equal(model_gradient(M, M.anchor), M.derivs[0].entries)
    M = random_model(rng, 1, 3)
    np.testing.assert_array_equal(model_gradient(M, M.anchor), M.tensor.slices)


@pytest.mark.parametrize("p", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 3, 5])
def test_gradient_matches_differences(rng, p, n):
    for _ in range(5):
        M = random_model(rng, p, n)
        y = M.anchor + rng.standard_normal(n)
        fd = central_gradient(lambda v: model_value(M, v), y)
        np.testing.assert_allclose(model_gradient(M, y), fd, rtol=1e-6, atol=1e-6)


@pytest.mark.parametrize("p", [2, 3])
def test_symmetric_part_equivalence(rng, p):
    for _ in range(10):
        M = random_model(rng, p, 4)
        S = RegularizedModel(M.anchor, M.f_anchor, M.derivs, RankOneSum(symmetrize(M.tensor).entries), M.sigma)
        y = M.anchor + rng.standard_normal(4)
        assert model_value(S, y) == pytest.approx(model_value(M, y), rel=1e-10)
        np.testing.assert_allclose(model_gradient(S, y), model_gradient(M, y), rtol=1e-10, atol=1e-12)


def test_acceptance_at_anchor():
    M = _p1_model([1.0, 0.0], 2.0)
    cert = check_acceptance(M, M.anchor)
    assert cert.monotone and not cert.stationarity
    assert cert.step_norm == 0.0


def test_acceptance_at_p1_minimizer():
    T = np.array([2.0, -1.0])
    M = _p1_model(T, 4.0, f=0.5)
    y = M.anchor - T / 4.0
    assert model_value(M, y) == pytest.approx(0.5 - T @ T / 8.0, rel=1e-15)
    cert = check_acceptance(M, y)
    assert cert.accepted and cert.grad_norm == 0.0


def test_acceptance_rejects_far_point():
    M = _p1_model([1.0, 0.0], 2.0)
    assert not check_acceptance(M, [10.0, 10.0]).monotone


@pytest.mark.parametrize("p", [1, 2])
def test_exact_minimizer_is_accepted(rng, p):
    for _ in range(20):
        M = random_model(rng, p, 4)
        assert check_acceptance(M, subsolve(M).point).accepted


def test_model_validation(rng):
    with pytest.raises(ValueError):
        RegularizedModel(np.zeros(2), 0.0, (), RankOneSum(np.eye(2)), 1.0)
    with pytest.raises(ValueError):
        RegularizedModel(np.zeros(2), 0.0, (), RankOneSum(np.ones(2)), 0.0)
    with pytest.raises(ValueError):
        RegularizedModel(np.zeros(3), 0.0, (), RankOneSum(np.ones(2)), 1.0)


def test_snapshot_is_copied():
    anchor = np.zeros(2)
    M = _p1_model([1.0, 0.0], 2.0, anchor=anchor)
    anchor[0] = 5.0
    assert M.anchor[0] == 0.0
