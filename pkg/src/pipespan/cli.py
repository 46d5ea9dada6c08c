"""Command-line front end.

Subcommands
-----------
speedup    analytic speedup for a distribution spec, optionally next to a
           Monte Carlo estimate
simulate   Monte Carlo speedup with confidence interval, optional CSV of
           per-replicate makespans
fit        fit a sample file against the candidate distributions and emit
           the fit report plus ECDF/overlay CSVs
solve      run one solver (or a plain/pipelined pair with --compare) on the
           second-difference system
ecdf       emit the empirical cdf of a sample file as two-column CSV

JSON goes to stdout in a canonical form (sorted keys) so that re-reading
and re-emitting a record reproduces it byte for byte. CSV side outputs go
to the paths given by flags; relative paths are resolved against
$PIPESPAN_OUTDIR when it is set. Every randomized subcommand takes --seed
and defaults to DEFAULT_SEED, so runs are reproducible by default.

Exit codes: 0 success, 1 usage error, 2 input-data error, 3 numerical
failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import distributions as dists
from . import statfit
from .krylov import (BreakdownError, cg, gmres, laplacian_1d, pgmres, pipecg)
from .quadrature import QuadratureError

__all__ = ["main", "DEFAULT_SEED"]

DEFAULT_SEED = 1729
OUTDIR_ENV = "PIPESPAN_OUTDIR"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class InputDataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we map usage to 1
        raise UsageError(message)


def to_json(record) -> str:
    """Canonical JSON encoding; identical records give identical bytes."""
    return json.dumps(record, sort_keys=True, indent=2) + "\n"


def _out_path(path: str) -> Path:
    p = Path(path)
    base = os.environ.get(OUTDIR_ENV)
    if base and not p.is_absolute():
        p = Path(base) / p
    p.parent.mkdir(parents=True, exist_ok=True)
    return p


def _parse_dist(text: str):
    try:
        return dists.parse_distribution(text)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _load_samples(path: str) -> statfit.SampleSet:
    try:
        return statfit.load_samples(path)
    except (OSError, ValueError) as exc:
        raise InputDataError(str(exc)) from None


def _speedup_record(spec, P, estimate, K=0, seed=None):
    return {
        "distribution": spec,
        "P": P,
        "K": K,
        "method": estimate.method,
        "value": estimate.value,
        "ci_halfwidth": estimate.ci_halfwidth,
        "replicates": estimate.replicates,
        "seed": seed,
    }


def cmd_speedup(args) -> list[dict]:
    dist = _parse_dist(args.dist)
    spec = dists.format_distribution(dist)
    analytic = dists.analytic_speedup(dist, args.P)
    records = [_speedup_record(spec, args.P, analytic)]
    if args.mc:
        mc = dists.monte_carlo_speedup(dist, args.P, args.K, args.replicates,
                                       args.seed, threads=args.threads)
        records.append(_speedup_record(spec, args.P, mc, K=args.K, seed=args.seed))
    return records


def cmd_simulate(args) -> list[dict]:
    dist = _parse_dist(args.dist)
    spec = dists.format_distribution(dist)
    sync, async_ = dists.replicate_makespans(dist, args.P, args.K, args.replicates,
                                             args.seed, threads=args.threads)
    mc = dists.speedup_from_makespans(sync, async_)
    if args.csv:
        lines = ["replicate,synchronized,asynchronous"]
        lines += [f"{r},{s!r},{a!r}" for r, (s, a) in enumerate(zip(sync, async_))]
        _out_path(args.csv).write_text("\n".join(lines) + "\n")
    return [_speedup_record(spec, args.P, mc, K=args.K, seed=args.seed)]


def cmd_fit(args) -> list[dict]:
    samples = _load_samples(args.file)
    if samples.n < 4:
        raise InputDataError(f"{args.file}: need at least 4 samples, found {samples.n}")
    report = statfit.classify(samples, alpha=args.alpha, processes=args.P)
    points = statfit.empirical_cdf(samples)
    if args.ecdf_out:
        lines = [f"{x!r},{p!r}" for x, p in points]
        _out_path(args.ecdf_out).write_text("\n".join(lines) + "\n")
    if args.overlay_out:
        fitted = statfit.fit_exponential_mle(samples)
        lines = [f"{x!r},{p!r},{fitted.cdf(x)!r}" for x, p in points]
        _out_path(args.overlay_out).write_text("\n".join(lines) + "\n")
    record = {
        "file": args.file,
        "n": report.n,
        "alpha": report.alpha,
        "summary": dataclasses.asdict(report.summary),
        "candidates": [
            {
                "name": cand.name,
                "params": dict(cand.params),
                "statistic": cand.result.statistic,
                "critical_value": cand.result.critical_value,
                "reject": cand.result.reject,
            }
            for cand in report.candidates
        ],
        "speedup_bound": report.speedup_bound,
        "speedup_bound_processes": report.speedup_bound_processes,
        "notes": list(report.notes),
    }
    return [record]


_SOLVERS = {"gmres": gmres, "pgmres": pgmres, "cg": cg, "pipecg": pipecg}
_PIPELINED = {"gmres": "pgmres", "cg": "pipecg"}


def _run_solver(name, A, b, iters, tol):
    solver = _SOLVERS[name]
    kwargs = {"tol": tol} if tol is not None else {}
    if name in ("gmres", "pgmres"):
        return solver(A, b, m=iters, **kwargs)
    return solver(A, b, maxit=iters, **kwargs)


def cmd_solve(args) -> list[dict]:
    if args.n < 2:
        raise UsageError("matrix size must be at least 2")
    A = laplacian_1d(args.n)
    b = np.ones(args.n)
    iters = args.iters
    limit = args.n - 2 if args.compare or args.solver == "pgmres" else args.n
    if not 1 <= iters <= limit:
        raise UsageError(f"iteration count must lie in [1, {limit}] for this solver/size")
    if args.compare:
        plain = args.compare
        if plain not in _PIPELINED:
            raise UsageError(f"--compare takes one of {sorted(_PIPELINED)}")
        pair = (plain, _PIPELINED[plain])
        reports = {name: _run_solver(name, A, b, iters, args.tol) for name in pair}
        res = {name: np.asarray(rep.residual_history) for name, rep in reports.items()}
        k = min(len(res[pair[0]]), len(res[pair[1]]))
        denom = np.maximum(np.abs(res[pair[0]][:k]), 1e-300)
        discrepancy = float(np.max(np.abs(res[pair[0]][:k] - res[pair[1]][:k]) / denom))
        record = {
            "comparison": f"{pair[0]}/{pair[1]}",
            "n": args.n,
            "iterations": {name: reports[name].iterations for name in pair},
            "max_residual_discrepancy": discrepancy,
            "final_relative_residual": {name: reports[name].final_relative_residual
                                        for name in pair},
            "reduction_count": {name: reports[name].reduction_count for name in pair},
            "spmv_count": {name: reports[name].spmv_count for name in pair},
        }
        if args.residuals_out:
            lines = [f"{a!r},{c!r}" for a, c in zip(res[pair[0]][:k], res[pair[1]][:k])]
            _out_path(args.residuals_out).write_text("\n".join(lines) + "\n")
        return [record]

    report = _run_solver(args.solver, A, b, iters, args.tol)
    if args.residuals_out:
        lines = [f"{i},{r!r}" for i, r in enumerate(report.residual_history)]
        _out_path(args.residuals_out).write_text("\n".join(lines) + "\n")
    record = report.to_dict()
    record["n"] = args.n
    return [record]


def cmd_ecdf(args) -> list[dict]:
    samples = _load_samples(args.file)
    points = statfit.empirical_cdf(samples)
    lines = [f"{x!r},{p!r}" for x, p in points]
    text = "\n".join(lines) + "\n"
    if args.out:
        _out_path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return []


def build_parser() -> _Parser:
    parser = _Parser(prog="pipespan",
                     description="makespan models, waiting-time statistics, "
                                 "and desk-scale pipelined solvers")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_mc(p):
        p.add_argument("--K", type=int, default=1000, help="steps per replicate")
        p.add_argument("--replicates", type=int, default=100)
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("speedup", help="analytic speedup of a waiting-time distribution")
    p.add_argument("--dist", required=True, help="uniform:a,b | exp:rate | lognormal:mu,sigma [+shift]")
    p.add_argument("--P", type=int, required=True, help="process count")
    p.add_argument("--mc", action="store_true", help="also print a Monte Carlo estimate")
    add_common_mc(p)
    p.set_defaults(func=cmd_speedup)

    p = sub.add_parser("simulate", help="Monte Carlo speedup estimate")
    p.add_argument("--dist", required=True)
    p.add_argument("--P", type=int, required=True)
    add_common_mc(p)
    p.add_argument("--csv", help="write per-replicate makespans to this CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a sample file and test goodness of fit")
    p.add_argument("--file", required=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--P", type=int, default=None,
                   help="process count for the implied speedup bound")
    p.add_argument("--ecdf-out", help="write ECDF points to this CSV")
    p.add_argument("--overlay-out",
                   help="write x, empirical, fitted-exponential cdf to this CSV")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("solve", help="run a solver on the 1-D second-difference system")
    p.add_argument("--solver", choices=sorted(_SOLVERS), default="gmres")
    p.add_argument("--compare", choices=sorted(_PIPELINED),
                   help="run the plain/pipelined pair and report the discrepancy")
    p.add_argument("--n", type=int, required=True, help="matrix dimension")
    p.add_argument("--iters", type=int, required=True)
    p.add_argument("--tol", type=float, default=None,
                   help="relative residual stop; fixed iteration count if omitted")
    p.add_argument("--residuals-out", help="write residual history CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("ecdf", help="emit the empirical cdf of a sample file")
    p.add_argument("--file", required=True)
    p.add_argument("--out", help="CSV path (stdout if omitted)")
    p.set_defaults(func=cmd_ecdf)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        records = args.func(args)
        for record in records:
            sys.stdout.write(to_json(record))
        return EXIT_OK
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InputDataError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (QuadratureError, BreakdownError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
