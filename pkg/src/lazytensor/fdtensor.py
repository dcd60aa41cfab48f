"""Forward-difference approximation of the p-th derivative from (p-1)-th derivatives."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .multilinear import RankOneSum, SymmetricTensor, operator_norm, symmetrize
from .problems import OracleCounter, ProblemOracle, evaluate

log = logging.getLogger(__name__)

# relative resolution below which forward differences are dominated by rounding
H_FLOOR_SCALE = 2.0**-26


class DegenerateStepError(ValueError):
    pass


@dataclass(frozen=True)
class FdSchedule:
    sigma: float
    h: float
    h_formula: float
    epsilon: float
    p: int
    n: int
    m: int
    floored: bool = False


def regularization(L_k: float, m: int, p: int) -> float:
    return 11.0 * (p + 1) * L_k * m


def stepsize(sigma: float, eps: float, p: int, n: int) -> float:
    """Largest difference step for which the FD error stays within the progress budget."""
    denom = (8.0 * (p + 1)) ** p * 2.0**7 * 3.0 ** (1.0 / p) * sigma ** (1.0 / p)
    inner = sigma**p * eps ** ((p + 1) / p) / denom
    return 4.0 / (sigma * math.sqrt(n)) * inner ** (1.0 / (p + 1))


def schedule(L_k: float, m: int, p: int, n: int, eps: float, z=None, floor: bool = True) -> FdSchedule:
    """Regularization and difference step for the current Lipschitz estimate.

    With ``floor`` set and a base point ``z`` given, ``h`` is raised to
    ``2**-26 * (1 + max|z_i|)`` when the formula falls below it; the schedule
    then carries ``floored=True``.
    """
    if not (L_k > 0 and m >= 1 and p >= 1 and n >= 1 and eps > 0):
        raise ValueError("schedule needs L_k > 0, m >= 1, p >= 1, n >= 1, eps > 0")
    sigma = regularization(L_k, m, p)
    h = stepsize(sigma, eps, p, n)
    h_used, floored = h, False
    if floor and z is not None:
        h_min = H_FLOOR_SCALE * (1.0 + float(np.max(np.abs(z))))
        if h < h_min:
            log.warning("difference step %.3e floored to %.3e", h, h_min)
            h_used, floored = h_min, True
    return FdSchedule(sigma=sigma, h=h_used, h_formula=h, epsilon=eps, p=p, n=n, m=m, floored=floored)


def _raw(value, p: int) -> np.ndarray:
    return np.asarray(value if p == 1 else value.entries, dtype=float)


def build_fd_tensor(
    P: ProblemOracle,
    C: Optional[OracleCounter],
    z,
    h: float,
    p: int,
    base=None,
    workers: int = 1,
) -> RankOneSum:
    """Slices ``D_i = (grad^{p-1} f(z + h e_i) - grad^{p-1} f(z)) / h``.

    Costs n + 1 oracle calls, or n when the value of the (p-1)-th derivative
    at ``z`` is passed in as ``base`` (a float for p=1, else a
    :class:`SymmetricTensor`). Probes may run on ``workers`` threads; slices
    are always assembled in index order.
    """
    if h <= 0:
        raise ValueError("difference step must be positive")
    if p < 1 or P.max_order < p - 1:
        raise ValueError(f"need derivatives of order {p - 1}, problem has {P.max_order}")
    z = np.asarray(z, dtype=float)
    n = P.dim
    probes = []
    for i in range(n):
        zi = z.copy()
        zi[i] += h
        if zi[i] == z[i]:
            raise DegenerateStepError(f"step {h:.3e} vanishes against z[{i}] = {z[i]:.3e}")
        probes.append(zi)
    if base is None:
        base = evaluate(P, C, z, {p - 1})[p - 1]
    base = _raw(base, p)

    def probe(point):
        return _raw(evaluate(P, C, point, {p - 1})[p - 1], p)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(probe, probes))
    else:
        values = [probe(pt) for pt in probes]
    slices = np.stack([(values[i] - base) / h for i in range(n)])
    return RankOneSum(slices, h=h)


def fd_error(P: ProblemOracle, z, R: RankOneSum) -> float:
    """Operator-norm distance between the symmetrized FD tensor and the exact derivative.

    For order 3 the norm is a lower-bound estimate. Uses an uncounted oracle call.
    """
    p = R.order
    if P.max_order < p:
        raise ValueError(f"exact derivative of order {p} unavailable for {P.name}")
    exact = evaluate(P, None, z, {p})[p]
    return operator_norm(symmetrize(R) - exact)


def fd_bound(L: float, n: int, h: float) -> float:
    return L * math.sqrt(n) / 2.0 * h
