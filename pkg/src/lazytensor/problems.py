"""Objectives with analytic derivatives and oracle-call accounting.

One call to :func:`evaluate` with any nonempty set of derivative orders
counts as exactly one oracle call, however many orders are requested.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .multilinear import MAX_ORDER, SymmetricTensor


class UnsupportedOrderError(ValueError):
    pass


class OracleCounter:
    """Cumulative oracle-call count; safe to share between threads."""

    def __init__(self):
        self._calls = 0
        self._lock = threading.Lock()

    @property
    def calls(self) -> int:
        return self._calls

    def increment(self) -> None:
        with self._lock:
            self._calls += 1

    def __repr__(self):
        return f"OracleCounter(calls={self._calls})"


# (x, orders) -> {order: value}; order 0 is the float f(x)
DerivativeFn = Callable[[np.ndarray, frozenset], dict]


@dataclass(frozen=True)
class ProblemOracle:
    name: str
    dim: int
    max_order: int
    derivatives: DerivativeFn = field(repr=False)
    # Lipschitz constant of the p-th derivative, keyed by p (absent = unknown)
    lipschitz: dict = field(default_factory=dict)
    f_low: Optional[float] = None
    x0: Optional[np.ndarray] = field(default=None, repr=False)

    def lipschitz_constant(self, p: int) -> Optional[float]:
        return self.lipschitz.get(p)

    def start(self) -> np.ndarray:
        if self.x0 is None:
            return np.zeros(self.dim)
        return np.array(self.x0, dtype=float)


def evaluate(P: ProblemOracle, C: Optional[OracleCounter], x, orders) -> dict:
    """Return ``{q: derivative of order q at x}`` and charge one call to ``C``."""
    orders = frozenset(int(q) for q in orders)
    if not orders:
        raise ValueError("at least one derivative order must be requested")
    bad = [q for q in orders if q < 0 or q > P.max_order]
    if bad:
        raise UnsupportedOrderError(
            f"{P.name} provides derivatives of order 0..{P.max_order}, requested {sorted(bad)}"
        )
    x = np.asarray(x, dtype=float)
    if x.shape != (P.dim,):
        raise ValueError(f"expected a point of shape ({P.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("oracle queried at a non-finite point")
    raw = P.derivatives(x, orders)
    if C is not None:
        C.increment()
    out = {}
    for q in orders:
        out[q] = float(raw[q]) if q == 0 else SymmetricTensor(raw[q])
    return out


def _diag_tensor(d: np.ndarray, q: int) -> np.ndarray:
    n = d.shape[0]
    if q == 1:
        return d
    out = np.zeros((n,) * q)
    idx = np.arange(n)
    out[(idx,) * q] = d
    return out


def _separable(phi_derivs: Callable[[np.ndarray, int], np.ndarray]) -> DerivativeFn:
    """Derivative callback for ``f(x) = sum_i phi(x_i)``."""

    def derivatives(x, orders):
        out = {}
        for q in orders:
            d = phi_derivs(x, q)
            out[q] = float(np.sum(d)) if q == 0 else _diag_tensor(d, q)
        return out

    return derivatives


def quadratic(n: int, A=None) -> ProblemOracle:
    """``f(x) = x^T A x / 2`` with A positive semidefinite (identity by default)."""
    A = np.eye(n) if A is None else np.asarray(A, dtype=float)
    if A.shape != (n, n):
        raise ValueError(f"A must be {n}x{n}")
    A = (A + A.T) / 2
    eigs = np.linalg.eigvalsh(A)
    if eigs[0] < -1e-12:
        raise ValueError("A must be positive semidefinite so that f is bounded below")

    def derivatives(x, orders):
        out = {}
        for q in orders:
            if q == 0:
                out[0] = 0.5 * x @ A @ x
            elif q == 1:
                out[1] = A @ x
            elif q == 2:
                out[2] = A
            else:
                out[q] = np.zeros((n,) * q)
        return out

    return ProblemOracle(
        name="quadratic",
        dim=n,
        max_order=MAX_ORDER,
        derivatives=derivatives,
        lipschitz={1: float(np.max(np.abs(eigs))), 2: 0.0, 3: 0.0},
        f_low=0.0,
        x0=np.ones(n),
    )


def rosenbrock_chain(n: int) -> ProblemOracle:
    """Chained Rosenbrock ``sum_i 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2``."""
    if n < 2:
        raise ValueError("rosenbrock_chain needs n >= 2")

    def derivatives(x, orders):
        u, v = x[:-1], x[1:]
        a = v - u**2
        out = {}
        for q in orders:
            if q == 0:
                out[0] = float(np.sum(100.0 * a**2 + (1.0 - u) ** 2))
            elif q == 1:
                g = np.zeros(n)
                g[:-1] += -400.0 * u * a - 2.0 * (1.0 - u)
                g[1:] += 200.0 * a
                out[1] = g
            elif q == 2:
                H = np.zeros((n, n))
                i = np.arange(n - 1)
                H[i, i] += 1200.0 * u**2 - 400.0 * v + 2.0
                H[i + 1, i + 1] += 200.0
                H[i, i + 1] = H[i + 1, i] = -400.0 * u
                out[2] = H
            elif q == 3:
                T = np.zeros((n, n, n))
                i = np.arange(n - 1)
                T[i, i, i] = 2400.0 * u
                for perm in ((i, i, i + 1), (i, i + 1, i), (i + 1, i, i)):
                    T[perm] = -400.0
                out[3] = T
        return out

    x0 = np.where(np.arange(n) % 2 == 0, -1.2, 1.0)
    return ProblemOracle(
        name="rosenbrock_chain",
        dim=n,
        max_order=MAX_ORDER,
        derivatives=derivatives,
        f_low=0.0,
        x0=x0,
    )


def cos_sum(n: int) -> ProblemOracle:
    """``f(x) = sum_i cos(x_i)``; every derivative is 1-Lipschitz."""
    table = (np.cos, lambda t: -np.sin(t), lambda t: -np.cos(t), np.sin)

    return ProblemOracle(
        name="cos_sum",
        dim=n,
        max_order=MAX_ORDER,
        derivatives=_separable(lambda x, q: table[q](x)),
        lipschitz={1: 1.0, 2: 1.0, 3: 1.0},
        f_low=-float(n),
        x0=np.linspace(0.5, 2.5, n),
    )


_CUBIC_BOX = 1.0


def _cubic_sep_phi(t: np.ndarray, q: int) -> np.ndarray:
    # t^3/3 + t for t >= -b; below -b the third derivative flips to -2 so the
    # function turns upward while staying C^2.
    b = _CUBIC_BOX
    left = t < -b
    u = t + b
    if q == 0:
        inner = t**3 / 3 + t
        outer = (-(b**3) / 3 - b) + (b**2 + 1) * u - b * u**2 - u**3 / 3
    elif q == 1:
        inner = t**2 + 1
        outer = (b**2 + 1) - 2 * b * u - u**2
    elif q == 2:
        inner = 2 * t
        outer = -2 * b - 2 * u
    else:
        inner = np.full_like(t, 2.0)
        outer = np.full_like(t, -2.0)
    return np.where(left, outer, inner)


def cubic_sep(n: int) -> ProblemOracle:
    """Separable ``x^3/3 + x`` with a C^2 cubic extension below ``x = -1``.

    The third derivative is +-2 everywhere, so the Hessian is 2-Lipschitz.
    Each coordinate has its unique minimizer at ``-2 - sqrt(3)``.
    """
    b = _CUBIC_BOX
    t_star = np.array([-2 * b - math.sqrt(2 * b**2 + 1)])
    f_low = n * float(_cubic_sep_phi(t_star, 0)[0])
    return ProblemOracle(
        name="cubic_sep",
        dim=n,
        max_order=MAX_ORDER,
        derivatives=_separable(_cubic_sep_phi),
        lipschitz={2: 2.0},
        f_low=f_low,
        x0=np.zeros(n),
    )


def logistic_smooth(n: int, b=None) -> ProblemOracle:
    """``f(x) = sum_i log(1 + exp(x_i)) - b^T x`` with ``0 < b_i < 1``."""
    b = np.linspace(0.2, 0.8, n) if b is None else np.asarray(b, dtype=float)
    if b.shape != (n,) or np.any(b <= 0) or np.any(b >= 1):
        raise ValueError("b must have entries strictly between 0 and 1")

    def phi(x, q):
        s = 0.5 * (1.0 + np.tanh(0.5 * x))
        if q == 0:
            return np.logaddexp(0.0, x) - b * x
        if q == 1:
            return s - b
        if q == 2:
            return s * (1 - s)
        return s * (1 - s) * (1 - 2 * s)

    entropy = -(b * np.log(b) + (1 - b) * np.log(1 - b))
    return ProblemOracle(
        name="logistic_smooth",
        dim=n,
        max_order=MAX_ORDER,
        derivatives=_separable(phi),
        # sup |phi^{(p+1)}| over the sigmoid range
        lipschitz={1: 0.25, 2: math.sqrt(3) / 18, 3: 0.125},
        f_low=float(np.sum(entropy)),
        x0=np.zeros(n),
    )


BUILTINS = {
    "quadratic": quadratic,
    "rosenbrock_chain": rosenbrock_chain,
    "cos_sum": cos_sum,
    "cubic_sep": cubic_sep,
    "logistic_smooth": logistic_smooth,
}


def builtin_problem(name: str, n: int) -> ProblemOracle:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; valid names: {', '.join(sorted(BUILTINS))}"
        ) from None
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return factory(n)
