"""Up to m model steps that reuse one approximate top-order tensor."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .model import RegularizedModel
from .multilinear import RankOneSum
from .problems import OracleCounter, ProblemOracle, evaluate
from .subsolver import DEFAULT_BUDGET, SubsolveFailure, subsolve


class StepStatus(str, enum.Enum):
    SUCCESS = "success"  # all m steps taken with enough decrease
    SOLUTION = "solution"  # an eps-stationary point was found
    HALT = "halt"  # decrease fell short of the threshold


@dataclass
class StepRecord:
    t: int
    f: float
    grad_norm: float
    step_norm: float
    inner_iterations: int
    threshold: float
    decrease: float
    subsolve_failed: bool = False


@dataclass
class LazyRunState:
    x_t: np.ndarray
    x_tilde: np.ndarray
    f_tilde: float
    t: int
    f_x0: float
    trace: list = field(default_factory=list)

    @property
    def steps(self) -> int:
        return len(self.trace)

    @property
    def subsolve_failures(self) -> int:
        return sum(rec.subsolve_failed for rec in self.trace)


def decrease_threshold(sigma: float, eps: float, p: int, t: int) -> float:
    """Decrease of f required after ``t + 1`` steps."""
    return eps ** ((p + 1) / p) * (t + 1) / (2**6 * 3 ** (1 / p) * sigma ** (1 / p) * factorial(p + 1))


def lazy_tensor_steps(
    P: ProblemOracle,
    C: OracleCounter,
    x,
    T: RankOneSum,
    sigma: float,
    m: int,
    eps: float,
    inner_budget: int = DEFAULT_BUDGET,
):
    """Run up to ``m`` steps from ``x`` with the fixed tensor ``T``.

    Every step costs two oracle calls: the derivatives of order < p at
    ``x_t`` for the model, then ``f`` and ``grad f`` at the new point.
    Returns ``(point, status, state)``.
    """
    if m < 1 or not sigma > 0 or not eps > 0:
        raise ValueError("need m >= 1, sigma > 0, eps > 0")
    p = T.order
    x = np.array(x, dtype=float)
    snapshot_orders = set(range(p))
    state = None
    for t in range(m):
        x_t = x if state is None else state.x_t
        snap = evaluate(P, C, x_t, snapshot_orders)
        if state is None:
            state = LazyRunState(x_t=x, x_tilde=x, f_tilde=snap[0], t=0, f_x0=snap[0])
        M = RegularizedModel(
            anchor=x_t,
            f_anchor=snap[0],
            derivs=tuple(snap[q] for q in range(1, p)),
            tensor=T,
            sigma=sigma,
        )
        failed = False
        try:
            sub = subsolve(M, inner_budget)
            x_next, inner = sub.point, sub.inner_iterations
        except SubsolveFailure as exc:
            x_next, inner, failed = exc.best_point, exc.inner_iterations, True

        new = evaluate(P, C, x_next, {0, 1})
        f_next = new[0]
        gn = float(np.linalg.norm(new[1].entries))
        # running argmin; ties keep the earlier point
        if f_next < state.f_tilde:
            state.x_tilde, state.f_tilde = x_next, f_next
        threshold = decrease_threshold(sigma, eps, p, t)
        decrease = state.f_x0 - state.f_tilde
        state.trace.append(
            StepRecord(
                t=t,
                f=f_next,
                grad_norm=gn,
                step_norm=float(np.linalg.norm(x_next - x_t)),
                inner_iterations=inner,
                threshold=threshold,
                decrease=decrease,
                subsolve_failed=failed,
            )
        )
        state.x_t = x_next
        state.t = t
        if gn <= eps:
            return x_next, StepStatus.SOLUTION, state
        if failed or decrease < threshold:
            return state.x_tilde, StepStatus.HALT, state
    state.t = m
    return state.x_tilde, StepStatus.SUCCESS, state
