"""Command-line harness: single runs, epsilon and m sweeps, FD-error checks.

Exit codes: 0 when every run reached an eps-stationary point (or every FD
check passed), 2 when a run hit the outer-iteration cap (or an FD check
failed), 1 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from typing import NamedTuple, Optional

import numpy as np

from .driver import DriverConfig, RunReport, optimal_m, run
from .fdtensor import build_fd_tensor, fd_bound, fd_error
from .problems import BUILTINS, builtin_problem

log = logging.getLogger(__name__)

RECORD_COLUMNS = ("k", "L_k", "sigma_k", "h_k", "alpha_k", "f", "grad_norm", "oracle_calls_cum", "flags")
SWEEP_COLUMNS = ("eps", "m", "K_eps", "oracle_calls", "final_grad_norm", "terminated", "success", "halt")
FD_COLUMNS = ("problem", "p", "n", "h", "fd_error", "bound", "ok")

EXIT_OK, EXIT_USAGE, EXIT_CAP = 0, 1, 2


class ScalingFit(NamedTuple):
    slope: float
    degenerate: bool


def fit_scaling_exponent(pairs) -> ScalingFit:
    """Least-squares slope of ``log(count)`` against ``log(1/eps)``."""
    pairs = [(float(e), float(c)) for e, c in pairs]
    if len(pairs) < 3:
        raise ValueError("need at least 3 (eps, count) pairs")
    eps = np.array([e for e, _ in pairs])
    counts = np.array([c for _, c in pairs])
    if np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("eps values must be positive and strictly decreasing")
    if np.any(counts <= 0):
        raise ValueError("counts must be positive")
    if np.all(counts == counts[0]):
        return ScalingFit(0.0, True)
    slope = np.polyfit(np.log(1.0 / eps), np.log(counts), 1)[0]
    return ScalingFit(float(slope), False)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def records_to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_COLUMNS)
    for r in report.records:
        w.writerow(
            [
                r.k,
                _fmt(float(r.L_k)),
                _fmt(float(r.sigma_k)),
                _fmt(float(r.h_k)),
                r.alpha_k.value,
                _fmt(float(r.f_zk)),
                _fmt(float(r.grad_norm_zk)),
                r.oracle_calls_cum,
                ";".join(r.flags),
            ]
        )
    return buf.getvalue()


def parse_records_csv(text: str) -> list:
    """Inverse of :func:`records_to_csv`."""
    reader = csv.reader(io.StringIO(text))
    header = tuple(next(reader))
    if header != RECORD_COLUMNS:
        raise ValueError(f"unexpected columns {header}")
    rows = []
    for k, L, sigma, h, alpha, f, gn, calls, flags in reader:
        rows.append(
            {
                "k": int(k),
                "L_k": float(L),
                "sigma_k": float(sigma),
                "h_k": float(h),
                "alpha_k": alpha,
                "f": float(f),
                "grad_norm": float(gn),
                "oracle_calls_cum": int(calls),
                "flags": flags.split(";") if flags else [],
            }
        )
    return rows


def _rows_to_csv(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(row[c]) for c in columns])
    return buf.getvalue()


def _summary(report: RunReport) -> str:
    K = report.K_eps if report.terminated else f"cap({report.max_outer})"
    return (
        f"{report.problem} n={report.dim} p={report.config.p} m={report.m} eps={report.config.eps:g}: "
        f"K(eps)={K} oracle_calls={report.oracle_calls} grad_norm={report.final_grad_norm:.3e}"
    )


def _sweep_row(report: RunReport) -> dict:
    return {
        "eps": report.config.eps,
        "m": report.m,
        "K_eps": report.K_eps if report.terminated else "",
        "oracle_calls": report.oracle_calls,
        "final_grad_norm": report.final_grad_norm,
        "terminated": report.terminated,
        "success": report.success_set_size,
        "halt": report.halt_set_size,
    }


# ---------------------------------------------------------------- argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated numbers, got {text!r}") from None


def _m_list(text: str) -> list:
    out = []
    for v in str(text).split(","):
        v = v.strip()
        if v == "auto":
            out.append("auto")
        elif v:
            try:
                out.append(int(v))
            except ValueError:
                raise ValueError(f"--m expects integers or 'auto', got {v!r}") from None
    return out


DEFAULTS = {
    "problem": "cos_sum",
    "n": 4,
    "p": 2,
    "m": "auto",
    "eps": "1e-4",
    "L0": 1.0,
    "max_outer": None,
    "inner_budget": 10_000,
    "seed": 0,
    "out": None,
    "format": "csv",
    "h": "1e-1,1e-2,1e-3",
    "x0": None,
    "no_h_floor": False,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lazytensor", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="mode", required=True, parser_class=_Parser)
    for mode in ("run", "sweep-eps", "sweep-m", "verify-fd"):
        sp = sub.add_parser(mode)
        sp.add_argument("--config", help="JSON file with default values for any flag")
        sp.add_argument("--problem", choices=sorted(BUILTINS), default=None)
        sp.add_argument("--n", type=int, default=None)
        sp.add_argument("--p", type=int, choices=(1, 2, 3), default=None)
        sp.add_argument("--m", default=None, help="integer, 'auto', or a list for sweep-m")
        sp.add_argument("--eps", default=None, help="float, or a list for sweep-eps")
        sp.add_argument("--L0", type=float, default=None)
        sp.add_argument("--max-outer", dest="max_outer", type=int, default=None)
        sp.add_argument("--inner-budget", dest="inner_budget", type=int, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--x0", default=None, help="comma-separated start point")
        sp.add_argument("--no-h-floor", dest="no_h_floor", action="store_const", const=True, default=None)
        if mode == "verify-fd":
            sp.add_argument("--h", default=None, help="comma-separated difference steps")
    return parser


def _resolve(args) -> dict:
    opts = dict(DEFAULTS)
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        for key, value in cfg.items():
            key = key.replace("-", "_")
            if key not in opts:
                raise ValueError(f"unknown config key {key!r}")
            opts[key] = value
    for key, value in vars(args).items():
        if key in opts and value is not None:
            opts[key] = value
    return opts


def _config(opts: dict, eps: float, m) -> DriverConfig:
    x0 = opts["x0"]
    if isinstance(x0, str):
        x0 = _float_list(x0)
    return DriverConfig(
        p=int(opts["p"]),
        eps=eps,
        m=None if m == "auto" else int(m),
        L0=float(opts["L0"]),
        max_outer=opts["max_outer"],
        inner_budget=int(opts["inner_budget"]),
        h_floor=not opts["no_h_floor"],
        seed=int(opts["seed"]),
        x0=x0,
    )


def _emit(opts: dict, text: str) -> None:
    if opts["out"]:
        with open(opts["out"], "w", newline="") as fh:
            fh.write(text)


def _cmd_run(opts: dict) -> int:
    eps = _float_list(opts["eps"])
    ms = _m_list(opts["m"])
    if len(eps) != 1 or len(ms) != 1:
        raise ValueError("run takes a single --eps and --m")
    P = builtin_problem(opts["problem"], int(opts["n"]))
    report = run(P, _config(opts, eps[0], ms[0]))
    _emit(opts, report.to_json() if opts["format"] == "json" else records_to_csv(report))
    print(_summary(report))
    return EXIT_OK if report.terminated else EXIT_CAP


def _cmd_sweep(opts: dict, over: str) -> int:
    eps_list = _float_list(opts["eps"])
    m_list = _m_list(opts["m"])
    if over == "eps":
        if len(m_list) != 1:
            raise ValueError("sweep-eps takes a single --m")
        cells = [(e, m_list[0]) for e in eps_list]
    else:
        if len(eps_list) != 1:
            raise ValueError("sweep-m takes a single --eps")
        cells = [(eps_list[0], m) for m in m_list]
    if not cells:
        raise ValueError("sweep grid is empty")
    reports = []
    for eps, m in cells:
        # every cell restarts from the problem's start point
        P = builtin_problem(opts["problem"], int(opts["n"]))
        reports.append(run(P, _config(opts, eps, m)))
    rows = [_sweep_row(r) for r in reports]
    extra = {}
    if over == "eps" and len(reports) >= 3 and all(r.terminated for r in reports):
        try:
            fit = fit_scaling_exponent([(r.config.eps, r.oracle_calls) for r in reports])
            extra = {"slope": fit.slope, "degenerate": fit.degenerate}
        except ValueError as exc:
            log.warning("no scaling fit: %s", exc)
    if opts["format"] == "json":
        _emit(opts, json.dumps({"rows": rows, **extra}, indent=2))
    else:
        _emit(opts, _rows_to_csv(SWEEP_COLUMNS, rows))
    for r in reports:
        print(_summary(r))
    if extra:
        print(f"fitted exponent of oracle calls in 1/eps: {extra['slope']:.4f}")
    return EXIT_OK if all(r.terminated for r in reports) else EXIT_CAP


def _cmd_verify_fd(opts: dict) -> int:
    p, n = int(opts["p"]), int(opts["n"])
    P = builtin_problem(opts["problem"], n)
    L = P.lipschitz_constant(p)
    z = np.random.default_rng(int(opts["seed"])).standard_normal(n)
    rows = []
    for h in _float_list(opts["h"]):
        R = build_fd_tensor(P, None, z, h, p)
        err = fd_error(P, z, R)
        bound = fd_bound(L, n, h) if L is not None else None
        rows.append(
            {
                "problem": P.name,
                "p": p,
                "n": n,
                "h": h,
                "fd_error": err,
                "bound": "" if bound is None else bound,
                "ok": "" if bound is None else err <= bound,
            }
        )
    if opts["format"] == "json":
        _emit(opts, json.dumps(rows, indent=2))
    else:
        _emit(opts, _rows_to_csv(FD_COLUMNS, rows))
    for row in rows:
        print(f"h={row['h']:g} fd_error={row['fd_error']:.3e} bound={row['bound']}")
    return EXIT_OK if all(row["ok"] is not False for row in rows) else EXIT_CAP


def cli_main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = _resolve(args)
        if opts["problem"] not in BUILTINS:
            raise ValueError(f"unknown problem {opts['problem']!r}; valid names: {', '.join(sorted(BUILTINS))}")
        if args.mode == "run":
            return _cmd_run(opts)
        if args.mode == "sweep-eps":
            return _cmd_sweep(opts, "eps")
        if args.mode == "sweep-m":
            return _cmd_sweep(opts, "m")
        return _cmd_verify_fd(opts)
    except (ValueError, OSError) as exc:
        print(f"lazytensor: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    sys.exit(cli_main())
