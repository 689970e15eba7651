"""Command-line front end.

Subcommands: constants, threshold, verify-powers, branch, stability, diagnose.
Every run resolves an output directory (--outdir flag, else the
FRACGELFAND_OUTDIR environment variable, else the working directory), writes a
run_metadata.json recording all inputs, versions and tolerances, and emits its
artifacts there.  CSV artifacts carry 12 significant digits and embed the run
configuration as a leading comment line; tables print 6.  Nothing written
contains a timestamp, so re-running with an identical configuration reproduces
every artifact byte for byte.

Exit codes: 0 success, 1 numerical or tolerance failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .constants import (
    DomainError,
    ProblemParams,
    RegimeError,
    epsilon_expansion,
    hardy_constant,
    lambda0,
    operator_normalization,
    power_coefficient,
)
from .fraclap import RadialFunction, RadialGrid, TailSpec, apply, assemble
from .gelfand import (
    BranchTraceError,
    ContinuationConfig,
    EigenSolveError,
    InfeasibleError,
    NoConvergenceError,
    singular_profile_diagnostic,
    singular_solution_residual,
    solve_at_peak,
    stability_inequality_check,
    torsion_center_value,
    trace_branch,
)
from .threshold import classify, threshold_table

_POWER_TOL = 1e-2
_EIG_TOL = 1e-8
_INEQ_SLACK = 1e-3
_EPS_TABLE = (1e-2, 1e-3, 1e-4)
_VERIFY_EPS = (0.05, 0.1, 0.2)

_GNUPLOT_SCRIPT = """set terminal pngcairo size 900,600
set output 'bifurcation.png'
set xlabel 'lambda'
set ylabel 'u(0)'
set grid
plot 'bifurcation.dat' using 1:2 with linespoints pointtype 7 pointsize 0.6 notitle
"""


def _outdir(args: argparse.Namespace) -> Path:
    raw = args.outdir or os.environ.get("FRACGELFAND_OUTDIR") or "."
    path = Path(raw)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_metadata(outdir: Path, config: dict) -> None:
    record = {
        "config": config,
        "versions": {
            "fracgelfand": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
    }
    (outdir / "run_metadata.json").write_text(json.dumps(record, indent=2, sort_keys=True))


def _config_line(config: dict) -> str:
    return "# config: " + json.dumps(config, sort_keys=True)


def _params(args: argparse.Namespace) -> ProblemParams:
    return ProblemParams(args.n, args.s)


def cmd_constants(args: argparse.Namespace) -> int:
    p = _params(args)
    config = {"subcommand": "constants", "n": p.n, "s": p.s}
    rows = [("normalization", operator_normalization(p)),
            ("torsion_center", torsion_center_value(p))]
    verdict = classify(p)
    if p.supercritical:
        rows = [("lambda0", lambda0(p)), ("hardy_constant", hardy_constant(p)),
                ("margin", verdict.margin)] + rows
    out = _outdir(args)
    _write_metadata(out, config)

    lines = [_config_line(config), "quantity,value"]
    lines += [f"{name},{value:.12g}" for name, value in rows]
    lines.append(f"classification,{verdict.regime.value}")
    (out / "constants.csv").write_text("\n".join(lines) + "\n")

    print(f"n = {p.n}, s = {p.s}  ({verdict.regime.value})")
    for name, value in rows:
        print(f"  {name:<16} {value:.6g}")
    return 0


def cmd_threshold(args: argparse.Namespace) -> int:
    rows = threshold_table(args.n_max)
    config = {"subcommand": "threshold", "n_max": args.n_max, "tol": 1e-8}
    out = _outdir(args)
    _write_metadata(out, config)

    lines = [_config_line(config), "n,critical_s,all_s_bounded"]
    for row in rows:
        crit = "" if row.critical_s is None else f"{row.critical_s:.12g}"
        lines.append(f"{row.n},{crit},{row.all_s_bounded}")
    (out / "threshold.csv").write_text("\n".join(lines) + "\n")

    print(f"{'n':>3}  {'critical s':>12}  verdict")
    for row in rows:
        if row.all_s_bounded:
            print(f"{row.n:>3}  {'-':>12}  bounded for all s")
        elif row.critical_s is not None:
            print(f"{row.n:>3}  {row.critical_s:>12.6g}  bounded for s above threshold")
        else:
            print(f"{row.n:>3}  {'-':>12}  inconclusive for all s")
    return 0


def _power_map_error(p: ProblemParams, alpha: float, n_panels: int) -> float:
    grid = RadialGrid.graded(n_panels)
    op = assemble(p, grid)
    u = RadialFunction.from_callable(
        grid, lambda r: r ** (-alpha), TailSpec.power(alpha), singular_at_origin=True
    )
    result = apply(op, u)
    r = grid.interior
    expected = power_coefficient(p, alpha) * r ** (-alpha - 2.0 * p.s)
    window = (r >= 0.2) & (r <= 0.8)
    rel = np.abs(result.interior - expected) / np.abs(expected)
    return float(rel[window].max())


def cmd_verify_powers(args: argparse.Namespace) -> int:
    p = _params(args)
    out = _outdir(args)

    if args.eps_table:
        config = {"subcommand": "verify-powers", "n": p.n, "s": p.s,
                  "eps_table": True, "eps_values": list(_EPS_TABLE)}
        _write_metadata(out, config)
        h = hardy_constant(p)
        l0 = lambda0(p)
        table = [(eps, *epsilon_expansion(p, eps)) for eps in _EPS_TABLE]
        lines = [_config_line(config), "eps,abs_err_midpoint,abs_err_endpoint"]
        print(f"{'eps':>8}  {'|A-H|':>12}  {'|B-lambda0|':>12}")
        for eps, a_val, b_val in table:
            ea, eb = abs(a_val - h), abs(b_val - l0)
            lines.append(f"{eps:.12g},{ea:.12g},{eb:.12g}")
            print(f"{eps:>8.0e}  {ea:>12.6g}  {eb:>12.6g}")
        (out / "eps_table.csv").write_text("\n".join(lines) + "\n")
        for j in range(len(table) - 1):
            ra = abs(table[j][1] - h) / abs(table[j + 1][1] - h)
            rb = abs(table[j][2] - l0) / abs(table[j + 1][2] - l0)
            print(f"decade {table[j][0]:.0e} -> {table[j+1][0]:.0e}: "
                  f"midpoint ratio {ra:.3g} (order {math.log10(ra):.2f}), "
                  f"endpoint ratio {rb:.3g} (order {math.log10(rb):.2f})")
        return 0

    alphas = args.alpha or [(p.n - 2.0 * p.s) / 2.0]
    for alpha in alphas:
        if not 0.0 < alpha < p.n - 2.0 * p.s:
            raise DomainError(
                f"alpha must lie in (0, n-2s) = (0, {p.n - 2.0 * p.s:g}), got {alpha:g}"
            )
    config = {"subcommand": "verify-powers", "n": p.n, "s": p.s,
              "alphas": list(alphas), "grid": args.grid, "tol": _POWER_TOL}
    _write_metadata(out, config)

    lines = [_config_line(config), "alpha,max_rel_error,tol,passed"]
    failed = []
    for alpha in alphas:
        err = _power_map_error(p, alpha, args.grid)
        ok = err <= _POWER_TOL
        if not ok:
            failed.append((alpha, err))
        lines.append(f"{alpha:.12g},{err:.12g},{_POWER_TOL:.12g},{ok}")
        print(f"alpha = {alpha:<10.6g} max rel error {err:.6g}  "
              f"{'PASS' if ok else 'FAIL'} (tol {_POWER_TOL:g})")
    (out / "verify_powers.csv").write_text("\n".join(lines) + "\n")
    if failed:
        for alpha, err in failed:
            print(f"FAIL: alpha = {alpha:g} error {err:.6g} exceeds {_POWER_TOL:g}",
                  file=sys.stderr)
        return 1
    return 0


def _branch_config(args: argparse.Namespace) -> ContinuationConfig:
    return ContinuationConfig(
        params=_params(args),
        grid=RadialGrid.graded(args.grid, grading=args.grading),
        peak_start=args.peak_min,
        peak_end=args.peak_max,
        peak_step=args.peak_step,
        newton_tol=args.newton_tol,
    )


def cmd_branch(args: argparse.Namespace) -> int:
    cfg = _branch_config(args)
    config = {
        "subcommand": "branch", "n": args.n, "s": args.s, "grid": args.grid,
        "grading": args.grading, "peak_min": args.peak_min, "peak_max": args.peak_max,
        "peak_step": args.peak_step, "newton_tol": args.newton_tol,
        "eigen_tol": _EIG_TOL, "verify": bool(args.verify),
        "diagnose_sigma": args.diagnose_sigma, "rho0": args.rho0,
    }
    out = _outdir(args)
    _write_metadata(out, config)

    trace_error: BranchTraceError | None = None
    try:
        branch = trace_branch(cfg)
    except BranchTraceError as exc:
        trace_error = exc
        branch = exc.partial

    (out / "branch.csv").write_text(_config_line(config) + "\n" + branch.to_csv())
    extra = json.loads(branch.to_json())
    extra["config"] = config
    dat_lines = [_config_line(config)]
    dat_lines += [f"{pt.lam:.12g} {pt.peak:.12g}" for pt in branch.points]
    (out / "bifurcation.dat").write_text("\n".join(dat_lines) + "\n")
    (out / "bifurcation.gp").write_text(_GNUPLOT_SCRIPT)

    rc = 0
    if trace_error is not None:
        print(f"solver failure: {trace_error}", file=sys.stderr)
        print(f"partial branch with {len(branch.points)} points saved", file=sys.stderr)
        rc = 1
    else:
        star = branch.lambda_star_estimate
        print(f"{len(branch.points)} branch points; fold detected: {branch.fold_detected}")
        if math.isfinite(star):
            print(f"lambda* estimate: {star:.6g}")

    if args.verify and branch.points:
        op = cfg.operator()
        pre_fold = branch.points[: branch.fold_index]
        all_ok = True
        for pt in pre_fold:
            ok = pt.stability_eig >= -1e-6
            checks = [f"mu={pt.stability_eig:+.3e}"]
            for eps in _VERIFY_EPS:
                lhs, rhs = stability_inequality_check(op, pt, rho0=args.rho0, eps=eps)
                ineq_ok = lhs <= rhs + _INEQ_SLACK * abs(rhs)
                ok = ok and ineq_ok
                checks.append(f"eps={eps:g}: lhs-rhs={lhs - rhs:+.3e}")
            all_ok = all_ok and ok
            print(f"m={pt.peak:.4g}  {'PASS' if ok else 'FAIL'}  " + "  ".join(checks))
        extra["verify_passed"] = all_ok
        if not all_ok:
            rc = max(rc, 1)

    if args.diagnose_sigma is not None and branch.points:
        report = singular_profile_diagnostic(branch, args.diagnose_sigma)
        print(f"singular diagnostic (sigma={args.diagnose_sigma:g}): "
              f"threshold radius {report.threshold_radius}, "
              f"probe ratios {[f'{x:.5g}' for x in report.probe_ratios]}, "
              f"increasing trend: {report.increasing_trend}")
        extra["singular_diagnostic"] = {
            "sigma": report.sigma,
            "threshold_radius": report.threshold_radius,
            "probe_radius": report.probe_radius,
            "probe_ratios": [float(x) for x in report.probe_ratios],
            "increasing_trend": report.increasing_trend,
        }

    (out / "branch.json").write_text(json.dumps(extra, indent=2))
    return rc


def cmd_stability(args: argparse.Namespace) -> int:
    cfg = ContinuationConfig(
        params=_params(args),
        grid=RadialGrid.graded(args.grid, grading=args.grading),
        peak_start=min(args.peak, 0.1),
        peak_end=args.peak + 1.0,
        newton_tol=args.newton_tol,
    )
    config = {
        "subcommand": "stability", "n": args.n, "s": args.s, "grid": args.grid,
        "grading": args.grading, "peak": args.peak, "rho0": args.rho0,
        "eps": args.eps, "newton_tol": args.newton_tol, "eigen_tol": _EIG_TOL,
    }
    out = _outdir(args)
    _write_metadata(out, config)

    point = solve_at_peak(cfg, args.peak)
    stable = point.stability_eig >= -1e-6
    print(f"m = {point.peak:.6g}: lambda = {point.lam:.6g}, "
          f"stability_eig = {point.stability_eig:+.6g} ({'stable' if stable else 'unstable'})")

    record = {
        "config": config, "lambda": point.lam, "peak": point.peak,
        "stability_eig": point.stability_eig, "residual_norm": point.residual_norm,
        "newton_iters": point.newton_iters, "stable": stable,
    }
    rc = 0
    if stable:
        lhs, rhs = stability_inequality_check(cfg.operator(), point,
                                              rho0=args.rho0, eps=args.eps)
        ok = lhs <= rhs + _INEQ_SLACK * abs(rhs)
        print(f"energy inequality (rho0={args.rho0:g}, eps={args.eps:g}): "
              f"lhs = {lhs:.6g}, rhs = {rhs:.6g}  {'PASS' if ok else 'FAIL'}")
        record["inequality"] = {"rho0": args.rho0, "eps": args.eps,
                                "lhs": lhs, "rhs": rhs, "passed": ok}
        if not ok:
            rc = 1
    (out / "stability.json").write_text(json.dumps(record, indent=2))
    return rc


def cmd_diagnose(args: argparse.Namespace) -> int:
    p = _params(args)
    out = _outdir(args)

    if args.singular_residual:
        config = {"subcommand": "diagnose", "n": args.n, "s": args.s,
                  "grid": args.grid, "grading": args.grading,
                  "mode": "singular_residual"}
        _write_metadata(out, config)
        res = singular_solution_residual(p, RadialGrid.graded(args.grid, grading=args.grading))
        print(f"singular solution relative residual on [0.1, 0.9]: {res:.6g}")
        (out / "diagnose.json").write_text(json.dumps(
            {"config": config, "relative_residual": res}, indent=2))
        return 0

    config = {
        "subcommand": "diagnose", "n": args.n, "s": args.s, "grid": args.grid,
        "grading": args.grading, "mode": "profile_trend", "sigma": args.sigma,
        "peak_min": args.peak_min, "peak_max": args.peak_max,
        "peak_step": args.peak_step, "newton_tol": args.newton_tol,
    }
    _write_metadata(out, config)
    cfg = _branch_config(args)
    branch = trace_branch(cfg)
    report = singular_profile_diagnostic(branch, args.sigma)
    print(f"{len(branch.points)} points to peak {branch.peaks[-1]:.4g}; "
          f"fold detected: {branch.fold_detected}")
    print(f"ratio u/(2s log(1/r)) at r = {report.probe_radius:g} for the three "
          f"highest peaks: {[f'{x:.6g}' for x in report.probe_ratios]}")
    print(f"increasing trend: {report.increasing_trend}; "
          f"threshold radius (sigma={args.sigma:g}): {report.threshold_radius}")
    (out / "diagnose.json").write_text(json.dumps({
        "config": config,
        "fold_detected": branch.fold_detected,
        "threshold_radius": report.threshold_radius,
        "probe_radius": report.probe_radius,
        "probe_ratios": [float(x) for x in report.probe_ratios],
        "increasing_trend": report.increasing_trend,
    }, indent=2))
    return 0


def _add_common(sub: argparse.ArgumentParser, grid_default: int = 128) -> None:
    sub.add_argument("--n", type=int, required=True, help="dimension")
    sub.add_argument("--s", type=float, required=True, help="fractional order in (0,1)")
    sub.add_argument("--grid", type=int, default=grid_default, help="number of radial panels")
    sub.add_argument("--grading", type=float, default=2.0, help="grid grading exponent")


def _add_continuation(sub: argparse.ArgumentParser, peak_max: float = 6.0) -> None:
    sub.add_argument("--peak-min", type=float, default=0.25)
    sub.add_argument("--peak-max", type=float, default=peak_max)
    sub.add_argument("--peak-step", type=float, default=0.25)
    sub.add_argument("--newton-tol", type=float, default=1e-10)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracgelfand",
        description="Fractional Gelfand problem: constants, thresholds, operator "
                    "verification, branch continuation, and diagnostics.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--outdir", default=None,
                        help="artifact directory (default: $FRACGELFAND_OUTDIR or .)")
    subs = parser.add_subparsers(dest="subcommand", required=True)

    sub = subs.add_parser("constants", help="closed-form constants for (n, s)")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.set_defaults(handler=cmd_constants)

    sub = subs.add_parser("threshold", help="boundedness threshold table")
    sub.add_argument("--n-max", type=int, required=True)
    sub.set_defaults(handler=cmd_threshold)

    sub = subs.add_parser("verify-powers", help="operator oracle on power functions")
    sub.add_argument("--n", type=int, required=True)
    sub.add_argument("--s", type=float, required=True)
    sub.add_argument("--alpha", type=float, action="append",
                     help="power exponent (repeatable); default midpoint (n-2s)/2")
    sub.add_argument("--grid", type=int, default=512)
    sub.add_argument("--eps-table", action="store_true",
                     help="print the small-eps coefficient convergence table")
    sub.set_defaults(handler=cmd_verify_powers)

    sub = subs.add_parser("branch", help="trace the solution branch by peak continuation")
    _add_common(sub)
    _add_continuation(sub)
    sub.add_argument("--verify", action="store_true",
                     help="check stability and the energy inequality at pre-fold points")
    sub.add_argument("--diagnose-sigma", type=float, default=None,
                     help="attach the singular-profile diagnostic at this sigma")
    sub.add_argument("--rho0", type=float, default=0.5)
    sub.set_defaults(handler=cmd_branch)

    sub = subs.add_parser("stability", help="stability eigenvalue at one branch point")
    _add_common(sub)
    sub.add_argument("--peak", type=float, required=True)
    sub.add_argument("--rho0", type=float, default=0.5)
    sub.add_argument("--eps", type=float, default=0.1)
    sub.add_argument("--newton-tol", type=float, default=1e-10)
    sub.set_defaults(handler=cmd_stability)

    sub = subs.add_parser("diagnose", help="singular-regime diagnostics")
    _add_common(sub, grid_default=192)
    _add_continuation(sub, peak_max=9.0)
    sub.add_argument("--sigma", type=float, default=0.5)
    sub.add_argument("--singular-residual", action="store_true",
                     help="residual of the exact singular solution instead of a branch trace")
    sub.set_defaults(handler=cmd_diagnose)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except (DomainError, RegimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(f"usage: run 'fracgelfand {args.subcommand} --help' for valid inputs",
              file=sys.stderr)
        return 2
    except (NoConvergenceError, InfeasibleError, BranchTraceError, EigenSolveError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
