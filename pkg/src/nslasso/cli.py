"""Command-line front end.

Subcommands: solve (one level), path (sequential path), gen (synthetic
data to CSV/JSON), bench (replicated benchmark), check (coherence and
signal-strength diagnostics).  Designs read from CSV are normalized to
sqrt(n)-length columns before solving, and regularization levels refer
to that normalized problem; reported coefficient vectors are given on
both scales.

Exit codes: 0 success; 1 I/O or parse failure; 2 validation failure;
3 solve hit the iteration cap (output is still written); 4 singular
restricted system; 5 bench finished with under 90% replication success.

Every command that writes files also writes a `*.manifest.json` run
manifest next to them; re-running the manifest's `argv` reproduces all
non-timing output fields exactly.  Numeric values are serialized with
shortest round-trip formatting (CSV uses 17 significant digits), so
generated files re-ingest losslessly.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .bench import (
    SelectionMode,
    check_conditions,
    coherence,
    format_report_table,
    report_to_dict,
    run_replications,
)
from .core import PrimalDualState, WorkingSet, normalize_columns
from .datagen import (
    DesignKind,
    GroundTruth,
    SimScenario,
    generate_instance,
    generator_metadata,
)
from .errors import NsLassoError, SingularSystem
from .path import PathConfig, select_information_criterion, sns_solve_path
from .solver import LsMethod, NsConfig, StopReason, ns_solve

EXIT_OK = 0
EXIT_IO = 1
EXIT_VALIDATION = 2
EXIT_ITERATION_CAP = 3
EXIT_SINGULAR = 4
EXIT_BENCH_FAILURES = 5


def _sanitize(obj):
    """Make an object JSON-safe: ndarray -> list, non-finite floats -> None."""
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    return obj


def _dump_json(obj, fp) -> None:
    json.dump(_sanitize(obj), fp, indent=2)
    fp.write("\n")


def _read_matrix(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", ndmin=2, dtype=np.float64)


def _read_vector(path: str) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", dtype=np.float64).ravel()


def _manifest_path(out: str) -> Path:
    p = Path(out)
    if p.suffix:
        return p.with_name(p.stem + ".manifest.json")
    return Path(str(p) + ".manifest.json")


def _write_manifest(
    out_path: Path, command: str, argv: list[str], args: argparse.Namespace,
    seeds: list[int], outputs: list[str], elapsed_s: float,
) -> None:
    snapshot = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {
        "command": command,
        "argv": argv,
        "config_snapshot": snapshot,
        "seeds": seeds,
        "tool_version": __version__,
        "numpy_version": np.__version__,
        "outputs": outputs,
        "elapsed_s": elapsed_s,
    }
    with open(out_path, "w") as fp:
        _dump_json(manifest, fp)


def _emit(payload: dict, out: str | None) -> None:
    if out is None:
        _dump_json(payload, sys.stdout)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w") as fp:
            _dump_json(payload, fp)


def _ls_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--max-iter", type=int, default=50, help="iteration cap per solve")
    sub.add_argument(
        "--ls", choices=[m.value for m in LsMethod], default="auto",
        help="restricted least-squares method",
    )
    sub.add_argument("--cg-tol", type=float, default=1e-10)
    sub.add_argument("--cg-max-iter", type=int, default=None)
    sub.add_argument("--direct-threshold", type=int, default=512)
    sub.add_argument("--ridge-epsilon", type=float, default=0.0)


def _ns_config(args: argparse.Namespace, lam: float, lam_bar: float = 0.0) -> NsConfig:
    return NsConfig(
        lam=lam,
        lam_bar=lam_bar,
        max_iter=args.max_iter,
        ls_method=LsMethod(args.ls),
        cg_tol=args.cg_tol,
        cg_max_iter=args.cg_max_iter,
        direct_threshold=args.direct_threshold,
        ridge_epsilon=args.ridge_epsilon,
    )


def cmd_solve(args: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    X = normalize_columns(_read_matrix(args.x))
    y = _read_vector(args.y)
    cfg = _ns_config(args, args.lam, args.lam_bar)
    init = None
    if args.init_beta is not None or args.init_d is not None:
        if args.init_beta is None or args.init_d is None:
            raise NsLassoError("--init-beta and --init-d must be given together")
        init = PrimalDualState(
            _read_vector(args.init_beta), _read_vector(args.init_d), cfg.lam, cfg.lam_bar
        )
    result = ns_solve(X, y, cfg, init)
    elapsed = time.perf_counter() - t0

    beta = result.state.beta
    payload = {
        "lambda": cfg.lam,
        "lambda_bar": cfg.lam_bar,
        "beta": beta / X.column_scales,
        "beta_normalized": beta,
        "d": result.state.d,
        "support": result.working_set.indices,
        "iterations": result.iterations,
        "converged_by": result.converged_by.value,
        "kkt_residual": result.kkt.residual_inf,
        "dual_feasibility": result.kkt.dual_feasibility,
        "objective": result.kkt.objective,
        "time_ms": elapsed * 1e3,
    }
    _emit(payload, args.out)
    if args.out is not None:
        _write_manifest(
            _manifest_path(args.out), "solve", argv, args, [], [args.out], elapsed
        )
    if result.converged_by is StopReason.ITERATION_CAP:
        return EXIT_ITERATION_CAP
    return EXIT_OK


def _path_config(args: argparse.Namespace) -> PathConfig:
    slope, offset = args.lambda_bar_slope, args.lambda_bar_offset
    if args.plain_lasso:
        slope, offset = 0.0, 0.0
    grid = None
    if args.lambda_grid is not None:
        grid = tuple(float(tok) for tok in args.lambda_grid.split(",") if tok.strip())
    return PathConfig(
        alpha=args.alpha,
        max_knots=args.max_knots,
        lambda_bar_slope=slope,
        lambda_bar_offset=offset,
        ns=_ns_config(args, lam=1.0),
        support_cap=args.support_cap,
        lambda_grid=grid,
    )


def _path_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--alpha", type=float, default=8.0 / 13.0, help="geometric decay")
    sub.add_argument("--max-knots", type=int, default=None)
    sub.add_argument("--lambda-bar-slope", type=float, default=13.0 / 15.0)
    sub.add_argument("--lambda-bar-offset", type=float, default=0.0)
    sub.add_argument(
        "--plain-lasso", action="store_true",
        help="no debiasing shift (slope = offset = 0)",
    )
    sub.add_argument("--support-cap", type=int, default=None)
    sub.add_argument(
        "--lambda-grid", type=str, default=None,
        help="comma-separated decreasing levels, bypassing the geometric rule",
    )
    _ls_flags(sub)


def cmd_path(args: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    X = normalize_columns(_read_matrix(args.x))
    y = _read_vector(args.y)
    cfg = _path_config(args)
    path = sns_solve_path(X, y, cfg)
    selected = (
        select_information_criterion(path, X, y) if args.select == "bic" else None
    )
    elapsed = time.perf_counter() - t0

    lines = []
    for m, pt in enumerate(path.points):
        beta = pt.result.state.beta
        nz = np.flatnonzero(beta != 0.0)
        lines.append(
            {
                "m": m,
                "lambda": pt.lam,
                "lambda_bar": pt.lam_bar,
                "support": nz,
                "beta_nonzero": [[int(j), float(beta[j] / X.column_scales[j])] for j in nz],
                "iterations": pt.result.iterations,
                "converged_by": pt.result.converged_by.value,
                "kkt_residual": pt.result.kkt.residual_inf,
                "time_ms": pt.wall_time * 1e3,
            }
        )
    footer = {
        "lambda0": path.lambda0,
        "support_cap": path.support_cap,
        "stopped_by": path.stopped_by.value,
        "selected_index": selected,
    }

    text = "\n".join(json.dumps(_sanitize(rec)) for rec in lines + [footer]) + "\n"
    if args.out is None:
        sys.stdout.write(text)
    else:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text)
        _write_manifest(
            _manifest_path(args.out), "path", argv, args, [], [args.out], elapsed
        )
    return EXIT_OK


def cmd_gen(args: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    scenario = SimScenario(
        n=args.n, p=args.p, T=args.t, R=args.r, rho=args.rho,
        sigma=args.sigma, design=DesignKind(args.design), seed=args.seed,
    )
    X_raw, y, truth = generate_instance(scenario, rep_index=args.rep)
    prefix = args.out_prefix
    parent = Path(prefix).parent
    if str(parent) not in ("", "."):
        parent.mkdir(parents=True, exist_ok=True)
    x_path, y_path, t_path = f"{prefix}X.csv", f"{prefix}y.csv", f"{prefix}truth.json"
    np.savetxt(x_path, X_raw, delimiter=",", fmt="%.17g")
    np.savetxt(y_path, y, delimiter=",", fmt="%.17g")
    payload = {
        "scenario": {
            "n": scenario.n, "p": scenario.p, "T": scenario.T, "R": scenario.R,
            "rho": scenario.rho, "sigma": scenario.sigma,
            "design": scenario.design.value, "seed": scenario.seed, "rep": args.rep,
        },
        "beta_star": truth.beta_star,
        "support": truth.support.indices,
        "signs": truth.signs,
        "metadata": generator_metadata(),
    }
    with open(t_path, "w") as fp:
        _dump_json(payload, fp)
    elapsed = time.perf_counter() - t0
    _write_manifest(
        Path(f"{prefix}manifest.json"), "gen", argv, args, [args.seed],
        [x_path, y_path, t_path], elapsed,
    )
    return EXIT_OK


def _default_threads() -> int:
    env = os.environ.get("NS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def cmd_bench(args: argparse.Namespace, argv: list[str]) -> int:
    t0 = time.perf_counter()
    scenario = SimScenario(
        n=args.n, p=args.p, T=args.t, R=args.r, rho=args.rho,
        sigma=args.sigma, design=DesignKind(args.design), seed=args.seed,
    )
    cfg = _path_config(args)
    workers = args.threads if args.threads is not None else _default_threads()
    report = run_replications(
        scenario, args.reps, cfg, SelectionMode(args.selection), workers=workers
    )
    elapsed = time.perf_counter() - t0

    sys.stdout.write(format_report_table(report) + "\n")
    if args.out is not None:
        _emit(report_to_dict(report), args.out)
        _write_manifest(
            _manifest_path(args.out), "bench", argv, args, [args.seed],
            [args.out], elapsed,
        )
    if report.successes < math.ceil(0.9 * report.reps):
        return EXIT_BENCH_FAILURES
    return EXIT_OK


def _load_truth(path: str) -> GroundTruth:
    with open(path) as fp:
        obj = json.load(fp)
    beta_star = np.asarray(obj["beta_star"], dtype=np.float64)
    idx = np.asarray(obj["support"], dtype=np.intp)
    return GroundTruth(
        beta_star=beta_star,
        support=WorkingSet(indices=idx, p=beta_star.shape[0]),
        signs=np.asarray(obj["signs"], dtype=np.float64),
    )


def cmd_check(args: argparse.Namespace, argv: list[str]) -> int:
    X = normalize_columns(_read_matrix(args.x))
    if args.truth is not None:
        truth = _load_truth(args.truth)
        rep = check_conditions(X, truth, args.sigma)
        payload = {
            "n": X.n, "p": X.p, "nu": rep.nu, "t_nu": rep.t_nu, "c3_ok": rep.c3_ok,
            "gamma_n": rep.gamma_n, "beta_min": rep.beta_min,
            "beta_min_ratio": rep.beta_min_ratio, "c1_ok": rep.c1_ok,
        }
    else:
        payload = {"n": X.n, "p": X.p, "nu": coherence(X)}
    _dump_json(payload, sys.stdout)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nslasso",
        description="Newton screening lasso solver and sequential path driver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve one regularization level")
    p_solve.add_argument("--x", required=True, help="design CSV (rows = samples, no header)")
    p_solve.add_argument("--y", required=True, help="response CSV (one value per line)")
    p_solve.add_argument("--lambda", dest="lam", type=float, required=True)
    p_solve.add_argument("--lambda-bar", dest="lam_bar", type=float, default=0.0)
    p_solve.add_argument("--init-beta", default=None)
    p_solve.add_argument("--init-d", default=None)
    _ls_flags(p_solve)
    p_solve.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p_solve.set_defaults(func=cmd_solve)

    p_path = sub.add_parser("path", help="solve a sequential path")
    p_path.add_argument("--x", required=True)
    p_path.add_argument("--y", required=True)
    _path_flags(p_path)
    p_path.add_argument("--select", choices=["bic", "none"], default="bic")
    p_path.add_argument("--out", default=None, help="output JSON-lines path (default stdout)")
    p_path.set_defaults(func=cmd_path)

    p_gen = sub.add_parser("gen", help="generate a synthetic instance")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--p", type=int, required=True)
    p_gen.add_argument("--t", type=int, required=True, help="true support size")
    p_gen.add_argument("--r", type=float, default=10.0, help="signal magnitude range")
    p_gen.add_argument("--rho", type=float, default=0.0)
    p_gen.add_argument("--sigma", type=float, default=0.0)
    p_gen.add_argument("--design", choices=[k.value for k in DesignKind], default="ar1")
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--rep", type=int, default=0, help="replication index")
    p_gen.add_argument("--out-prefix", required=True)
    p_gen.set_defaults(func=cmd_gen)

    p_bench = sub.add_parser("bench", help="replicated benchmark")
    p_bench.add_argument("--n", type=int, required=True)
    p_bench.add_argument("--p", type=int, required=True)
    p_bench.add_argument("--t", type=int, required=True)
    p_bench.add_argument("--r", type=float, default=10.0)
    p_bench.add_argument("--rho", type=float, default=0.0)
    p_bench.add_argument("--sigma", type=float, default=0.0)
    p_bench.add_argument("--design", choices=[k.value for k in DesignKind], default="ar1")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--reps", type=int, default=50)
    p_bench.add_argument(
        "--selection", choices=[m.value for m in SelectionMode], default="bic"
    )
    p_bench.add_argument(
        "--threads", type=int, default=None,
        help="worker processes (default: NS_THREADS or all cores)",
    )
    _path_flags(p_bench)
    p_bench.add_argument("--out", default=None, help="report JSON path")
    p_bench.set_defaults(func=cmd_bench)

    p_check = sub.add_parser("check", help="coherence / signal-strength diagnostics")
    p_check.add_argument("--x", required=True)
    p_check.add_argument("--truth", default=None, help="truth JSON from `gen`")
    p_check.add_argument("--sigma", type=float, default=0.0)
    p_check.set_defaults(func=cmd_check)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse uses 2 for usage errors, which matches the validation code
        return int(e.code) if e.code else EXIT_OK
    try:
        return args.func(args, argv)
    except SingularSystem as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_SINGULAR
    except NsLassoError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
