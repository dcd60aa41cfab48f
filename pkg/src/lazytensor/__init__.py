"""Lazy finite-difference tensor methods for smooth nonconvex minimization.

A p-th order regularized model is built from exact derivatives up to order
p-1 and a finite-difference estimate of the p-th derivative, which is then
reused across several consecutive steps.
"""
from .driver import DriverConfig, OuterIterationRecord, RunReport, iteration_bound, optimal_m, run
from .fdtensor import DegenerateStepError, FdSchedule, build_fd_tensor, fd_bound, fd_error, schedule
from .lazy import LazyRunState, StepStatus, decrease_threshold, lazy_tensor_steps
from .model import Acceptance, RegularizedModel, check_acceptance, model_gradient, model_value
from .multilinear import (
    RankOneSum,
    SymmetricTensor,
    contract_to_vector,
    eval_power,
    operator_norm,
    rank_one_sum_eval,
    rank_one_sum_gradient,
    symmetrize,
)
from .problems import (
    BUILTINS,
    OracleCounter,
    ProblemOracle,
    UnsupportedOrderError,
    builtin_problem,
    evaluate,
)
from .subsolver import SecularError, SubsolveFailure, SubsolveResult, secular_root, subsolve

__version__ = "0.1.0"

__all__ = [
    "Acceptance",
    "BUILTINS",
    "DegenerateStepError",
    "DriverConfig",
    "FdSchedule",
    "LazyRunState",
    "OracleCounter",
    "OuterIterationRecord",
    "ProblemOracle",
    "RankOneSum",
    "RegularizedModel",
    "RunReport",
    "SecularError",
    "StepStatus",
    "SubsolveFailure",
    "SubsolveResult",
    "SymmetricTensor",
    "UnsupportedOrderError",
    "build_fd_tensor",
    "builtin_problem",
    "check_acceptance",
    "contract_to_vector",
    "decrease_threshold",
    "eval_power",
    "evaluate",
    "fd_bound",
    "fd_error",
    "iteration_bound",
    "lazy_tensor_steps",
    "model_gradient",
    "model_value",
    "operator_norm",
    "optimal_m",
    "rank_one_sum_eval",
    "rank_one_sum_gradient",
    "run",
    "schedule",
    "secular_root",
    "subsolve",
    "symmetrize",
]
