"""Inexact minimization of the regularized model.

Returned points always satisfy both acceptance conditions of
:func:`lazytensor.model.check_acceptance`; otherwise :class:`SubsolveFailure`
is raised.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .model import Acceptance, RegularizedModel, check_acceptance
from .multilinear import symmetrize

DEFAULT_BUDGET = 10_000
ARMIJO = 1e-4


class SubsolveFailure(RuntimeError):
    """Inner budget exhausted; ``best_point`` is the lowest-model-value iterate."""

    def __init__(self, message, best_point, inner_iterations, certificate):
        super().__init__(message)
        self.best_point = best_point
        self.inner_iterations = inner_iterations
        self.certificate = certificate


class SecularError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SubsolveResult:
    point: np.ndarray
    inner_iterations: int
    model_value_at_point: float
    model_grad_norm: float
    certificate: Acceptance
    # model values along the inner iterations, starting point first
    history: tuple = field(default=(), repr=False)


def _result(M, s, iters, history=()):
    y = M.anchor + s
    cert = check_acceptance(M, y)
    return SubsolveResult(
        point=y,
        inner_iterations=iters,
        model_value_at_point=M.value_at_step(M.step(y)),
        model_grad_norm=cert.grad_norm,
        certificate=cert,
        history=tuple(history),
    )


def secular_root(eigenvalues, g_rotated, sigma: float, max_iter: int = 200) -> float:
    """Root ``r*`` of ``||(diag(lam) + sigma r / 2)^{-1} g|| = r`` with ``r* >= max(0, -2 lam_min / sigma)``.

    Returns the lower end of the admissible range when the equation has no
    root above it (the hard case, or ``g = 0``).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    g = np.asarray(g_rotated, dtype=float)
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    r_lo = max(0.0, -2.0 * float(lam.min()) / sigma)
    gsq = g * g
    scale = max(1.0, float(np.max(np.abs(lam))))

    def snorm(r):
        d = lam + 0.5 * sigma * r
        live = d > 1e-14 * scale
        if np.any(gsq[~live] > 0):
            return np.inf
        return float(np.sqrt(np.sum(gsq[live] / d[live] ** 2)))

    if snorm(r_lo) <= r_lo:
        return r_lo

    def phi(r):
        return snorm(r) - r

    a = r_lo
    b = max(2.0 * r_lo, 1.0)
    while phi(b) > 0:
        a, b = b, 2.0 * b
        if not np.isfinite(b):
            raise SecularError("could not bracket the secular root")
    r = b
    for _ in range(max_iter):
        val = phi(r)
        if abs(val) <= 1e-10 * (1.0 + r):
            return r
        if val > 0:
            a = r
        else:
            b = r
        if b - a <= 4 * np.spacing(b):
            return b
        # Newton on phi, bisection when it leaves the bracket
        d = lam + 0.5 * sigma * r
        ns = snorm(r)
        dphi = -0.5 * sigma * float(np.sum(gsq / d**3)) / ns - 1.0 if ns > 0 else -1.0
        r_new = r - val / dphi
        r = r_new if a < r_new < b else 0.5 * (a + b)
    raise SecularError(f"secular equation did not converge in {max_iter} iterations")


def _cubic_step(M: RegularizedModel) -> np.ndarray:
    """Global minimizer of ``<g,s> + s^T B s / 2 + sigma ||s||^3 / 6``, B the symmetrized tensor."""
    g = M.gradient_at_anchor
    B = symmetrize(M.tensor).entries
    sigma = M.sigma
    lam, Q = np.linalg.eigh(B)
    gt = Q.T @ g
    r = secular_root(lam, gt, sigma)
    d = lam + 0.5 * sigma * r
    scale = max(1.0, float(np.max(np.abs(lam))))
    live = d > 1e-14 * scale
    st = np.zeros_like(gt)
    st[live] = -gt[live] / d[live]
    s = Q @ st
    missing = r * r - float(st @ st)
    if missing > 0 and not np.all(live):
        # hard case: complete the step along a minimal eigenvector
        v = Q[:, int(np.argmin(lam))]
        tau = np.sqrt(missing)
        cands = [s + tau * v, s - tau * v]
        vals = [M.value_at_step(c) for c in cands]
        if vals[0] == vals[1]:
            cands.sort(key=lambda c: tuple(c))
            s = cands[0]
        else:
            s = cands[int(np.argmin(vals))]
    return s


def _curvature_proxy(M: RegularizedModel, r: float) -> float:
    p = M.p
    total = 1.0
    for i, a in enumerate(M._arrays, start=1):
        if i >= 2:
            total += float(np.linalg.norm(a)) * r ** (i - 2) / factorial(i - 2)
    if p >= 2:
        total += 2.0 * float(np.linalg.norm(M.tensor.slices)) * r ** (p - 2) / factorial(p - 2)
    total += M.sigma * p / factorial(p) * r ** (p - 1)
    return total


def _descent(M: RegularizedModel, s0: np.ndarray, budget: int) -> SubsolveResult:
    """Backtracking gradient descent on the model until the stationarity condition holds."""
    p = M.p
    coef = M.sigma / (2 * factorial(p))
    s = np.array(s0, dtype=float)
    val = M.value_at_step(s)
    g = M.gradient_at_step(s)
    history = [val]
    ds = dg = None
    for it in range(budget + 1):
        r = float(np.linalg.norm(s))
        gn = float(np.linalg.norm(g))
        if gn <= coef * r**p and val <= M.f_anchor:
            return _result(M, s, it, history)
        if it == budget:
            break
        # Barzilai-Borwein trial step, curvature proxy when it is unusable
        t = 1.0 / _curvature_proxy(M, r)
        if ds is not None:
            curv = float(ds @ dg)
            if curv > 0:
                t = float(ds @ ds) / curv
        while True:
            s_new = s - t * g
            val_new = M.value_at_step(s_new)
            if val_new <= val - ARMIJO * t * gn * gn:
                break
            t *= 0.5
            if t * gn <= 1e-17 * (1.0 + r):
                raise SubsolveFailure(
                    "line search stalled", M.anchor + s, it, check_acceptance(M, M.anchor + s)
                )
        g_new = M.gradient_at_step(s_new)
        ds, dg = s_new - s, g_new - g
        s, val, g = s_new, val_new, g_new
        history.append(val)
    raise SubsolveFailure(
        f"inner budget of {budget} iterations exhausted",
        M.anchor + s,
        budget,
        check_acceptance(M, M.anchor + s),
    )


def subsolve(M: RegularizedModel, budget: int = DEFAULT_BUDGET) -> SubsolveResult:
    """Find ``y`` with ``M(y) <= f(anchor)`` and ``||grad M(y)|| <= sigma/(2 p!) ||y - anchor||^p``."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    p = M.p
    zero = np.zeros(M.dim)
    if p == 1:
        s = -M.tensor.slices / M.sigma
        res = _result(M, s, 1)
        if res.certificate.accepted:
            return res
        return _descent(M, zero, budget)
    if p == 2:
        try:
            s = _cubic_step(M)
        except SecularError:
            return _descent(M, zero, budget)
        res = _result(M, s, 1)
        if res.certificate.accepted:
            return res
        # rounding spoiled the exact step; polish it by descent
        start = s if res.certificate.monotone else zero
        return _descent(M, start, budget)
    return _descent(M, zero, budget)
