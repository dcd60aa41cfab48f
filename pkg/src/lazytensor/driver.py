"""Adaptive outer loop: FD tensor, lazy steps, Lipschitz-estimate update."""
from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .fdtensor import build_fd_tensor, schedule
from .lazy import StepStatus, lazy_tensor_steps
from .problems import OracleCounter, ProblemOracle, evaluate
from .subsolver import DEFAULT_BUDGET

log = logging.getLogger(__name__)

UNKNOWN_L_CAP = 10**6


def optimal_m(p: int, n: int) -> int:
    """Number of lazy steps minimizing the oracle-complexity factor ``(m + n) / m^{(p-1)/p}``."""
    if p < 1 or n < 1:
        raise ValueError("need p >= 1 and n >= 1")
    return 1 if p == 1 else (p - 1) * n + 1


def iteration_bound(L_max: float, f0_minus_flow: float, p: int, m: int, eps: float, L0: float) -> float:
    """Worst-case number of outer iterations before an eps-stationary point."""
    middle = (
        2**7
        * (3 * 11 * (p + 1) * L_max) ** (1 / p)
        * math.factorial(p + 1)
        * f0_minus_flow
        * eps ** (-(p + 1) / p)
        / m ** ((p - 1) / p)
    )
    return 1.0 + middle + math.log2(L_max / L0)


@dataclass
class DriverConfig:
    p: int = 2
    eps: float = 1e-4
    m: Optional[int] = None  # None -> optimal_m(p, n)
    L0: float = 1.0
    max_outer: Optional[int] = None
    inner_budget: int = DEFAULT_BUDGET
    h_floor: bool = True
    seed: int = 0
    x0: Optional[list] = None

    def __post_init__(self):
        if self.p not in (1, 2, 3):
            raise ValueError("p must be 1, 2 or 3")
        if not self.eps > 0 or not self.L0 > 0:
            raise ValueError("eps and L0 must be positive")
        if self.m is not None and self.m < 1:
            raise ValueError("m must be >= 1")
        if self.max_outer is not None and self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.inner_budget < 1:
            raise ValueError("inner_budget must be >= 1")

    def resolved_m(self, n: int) -> int:
        return optimal_m(self.p, n) if self.m is None else self.m


@dataclass
class OuterIterationRecord:
    k: int
    L_k: float
    sigma_k: float
    h_k: float
    alpha_k: StepStatus
    f_zk: float
    grad_norm_zk: float
    oracle_calls_cum: int
    steps: int
    h_floored: bool = False
    subsolve_failures: int = 0
    f_next: float = float("nan")
    lazy_trace: list = field(default_factory=list, repr=False)

    @property
    def flags(self) -> list:
        out = []
        if self.h_floored:
            out.append("h_floored")
        if self.subsolve_failures:
            out.append("subsolve_failed")
        return out


@dataclass
class RunReport:
    problem: str
    dim: int
    config: DriverConfig
    m: int
    records: list
    terminated: bool
    K_eps: Optional[int]
    final_point: np.ndarray
    final_f: float
    final_grad_norm: float
    oracle_calls: int
    f0: float
    max_outer: int

    @property
    def success_set_size(self) -> int:
        return sum(r.alpha_k == StepStatus.SUCCESS for r in self.records)

    @property
    def halt_set_size(self) -> int:
        return sum(r.alpha_k == StepStatus.HALT for r in self.records)

    @property
    def h_floored_count(self) -> int:
        return sum(r.h_floored for r in self.records)

    @property
    def subsolve_failures(self) -> int:
        return sum(r.subsolve_failures for r in self.records)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "n": self.dim,
            "config": dataclasses.asdict(self.config),
            "m": self.m,
            "terminated": self.terminated,
            "K_eps": self.K_eps,
            "max_outer": self.max_outer,
            "success_set_size": self.success_set_size,
            "halt_set_size": self.halt_set_size,
            "oracle_calls": self.oracle_calls,
            "f0": self.f0,
            "final_f": self.final_f,
            "final_grad_norm": self.final_grad_norm,
            "final_point": [float(v) for v in self.final_point],
            "deviations": {
                "h_floored": self.h_floored_count,
                "subsolve_failures": self.subsolve_failures,
            },
            "records": [
                {
                    "k": r.k,
                    "L_k": r.L_k,
                    "sigma_k": r.sigma_k,
                    "h_k": r.h_k,
                    "alpha_k": r.alpha_k.value,
                    "f": r.f_zk,
                    "grad_norm": r.grad_norm_zk,
                    "oracle_calls_cum": r.oracle_calls_cum,
                    "steps": r.steps,
                    "flags": r.flags,
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def run(P: ProblemOracle, cfg: DriverConfig, counter: Optional[OracleCounter] = None) -> RunReport:
    """Minimize ``P`` to ``||grad f|| <= cfg.eps`` with order-(p-1) oracle calls only."""
    p, eps, n = cfg.p, cfg.eps, P.dim
    if P.max_order < p - 1:
        raise ValueError(f"{P.name} provides derivatives up to order {P.max_order}, need {p - 1}")
    m = cfg.resolved_m(n)
    C = counter if counter is not None else OracleCounter()
    calls_before = C.calls
    z = P.start() if cfg.x0 is None else np.array(cfg.x0, dtype=float)
    if z.shape != (n,):
        raise ValueError(f"start point must have {n} entries")
    L_k = cfg.L0
    # Step 1 also fetches the (p-1)-th derivative the FD tensor is based on
    step1_orders = set(range(max(p, 2)))

    records = []
    k = 0
    known = None  # (f, grad norm) at z when a lazy run ended on it with status solution
    max_outer = cfg.max_outer
    f0 = None
    while True:
        if known is not None:
            f_z, gn_z = known
            info = None
        else:
            info = evaluate(P, C, z, step1_orders)
            f_z, gn_z = info[0], float(np.linalg.norm(info[1].entries))
        if f0 is None:
            f0 = f_z
            if max_outer is None:
                max_outer = _default_cap(P, cfg, m, f0)
        if gn_z <= eps:
            return _report(P, cfg, m, records, True, k, z, f_z, gn_z, C.calls - calls_before, f0, max_outer)
        if k >= max_outer:
            log.warning("outer iteration cap %d reached with ||grad f|| = %.3e", max_outer, gn_z)
            return _report(P, cfg, m, records, False, None, z, f_z, gn_z, C.calls - calls_before, f0, max_outer)

        sched = schedule(L_k, m, p, n, eps, z=z, floor=cfg.h_floor)
        T = build_fd_tensor(P, C, z, sched.h, p, base=info[p - 1])
        z_next, alpha, state = lazy_tensor_steps(P, C, z, T, sched.sigma, m, eps, cfg.inner_budget)
        records.append(
            OuterIterationRecord(
                k=k,
                L_k=L_k,
                sigma_k=sched.sigma,
                h_k=sched.h,
                alpha_k=alpha,
                f_zk=f_z,
                grad_norm_zk=gn_z,
                oracle_calls_cum=C.calls - calls_before,
                steps=state.steps,
                h_floored=sched.floored,
                subsolve_failures=state.subsolve_failures,
                f_next=state.trace[-1].f if alpha == StepStatus.SOLUTION else state.f_tilde,
                lazy_trace=state.trace,
            )
        )
        if alpha == StepStatus.HALT:
            L_k = 2 * L_k
        elif alpha == StepStatus.SUCCESS:
            L_k = L_k / 2
        if alpha == StepStatus.SOLUTION:
            last = state.trace[-1]
            known = (last.f, last.grad_norm)
        else:
            known = None
        z = np.asarray(z_next, dtype=float)
        k += 1


def _default_cap(P: ProblemOracle, cfg: DriverConfig, m: int, f0: float) -> int:
    L = P.lipschitz_constant(cfg.p)
    if L is None or P.f_low is None:
        return UNKNOWN_L_CAP
    bound = iteration_bound(max(cfg.L0, 2 * L), max(f0 - P.f_low, 0.0), cfg.p, m, cfg.eps, cfg.L0)
    return int(min(10 * math.ceil(bound), UNKNOWN_L_CAP))


def _report(P, cfg, m, records, terminated, K, z, f_z, gn_z, calls, f0, max_outer):
    return RunReport(
        problem=P.name,
        dim=P.dim,
        config=cfg,
        m=m,
        records=records,
        terminated=terminated,
        K_eps=K,
        final_point=np.array(z),
        final_f=f_z,
        final_grad_norm=gn_z,
        oracle_calls=calls,
        f0=f0,
        max_outer=max_outer,
    )
