"""Error metrics, theory-condition checks, and the replication harness.

`run_replications` repeats generate -> normalize -> path-solve -> select
-> score over independently seeded replications.  Selection is either an
information criterion (usable in practice) or an oracle that picks the
path point with the smallest sup-norm error against the ground truth
(the quantity the recovery theory controls).  Replications derive their
seeds from (scenario.seed, rep_index) alone, so results are identical
for any worker count.
"""

from __future__ import annotations

import concurrent.futures
import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from .core import DesignMatrix, normalize_columns
from .datagen import GroundTruth, SimScenario, generate_instance
from .errors import DimensionMismatch, InvalidDimensions, NsLassoError, ZeroTruth
from .path import PathConfig, SolutionPath, select_information_criterion, sns_solve_path

__all__ = [
    "SUPPORT_TOL",
    "SelectionMode",
    "TrialMetrics",
    "ConditionReport",
    "TrialRow",
    "ReplicationReport",
    "trial_metrics",
    "coherence",
    "gamma_n",
    "check_conditions",
    "run_replications",
    "report_to_dict",
    "format_report_table",
]

# |beta_i| above this counts as a nonzero when comparing supports
SUPPORT_TOL = 1e-10


class SelectionMode(str, enum.Enum):
    INFORMATION_CRITERION = "bic"
    BEST_ON_PATH_ORACLE = "oracle"


@dataclass(frozen=True)
class TrialMetrics:
    """Error metrics for one fitted vector against the ground truth.

    `linf_within_bound` compares ae against (14/3)*gamma_n and is None
    when no noise scale was supplied.
    """

    ae: float
    re: float
    exact_support: bool
    support_size: int
    sign_consistent: bool
    linf_within_bound: bool | None
    wall_time: float


@dataclass(frozen=True)
class ConditionReport:
    """Mutual-coherence and signal-strength diagnostics for one instance."""

    nu: float
    t_nu: float
    c3_ok: bool
    gamma_n: float
    beta_min: float
    beta_min_ratio: float
    c1_ok: bool


@dataclass(frozen=True)
class TrialRow:
    rep: int
    selected_index: int
    lam: float
    metrics: TrialMetrics | None
    error: str | None = None


@dataclass(frozen=True)
class ReplicationReport:
    scenario: SimScenario
    selection: SelectionMode
    reps: int
    rows: list[TrialRow]
    ae_mean: float
    re_mean: float
    rp: float
    mean_support: float
    time_mean: float
    successes: int
    failures: int


def gamma_n(sigma: float, n: int, p: int) -> float:
    """Noise certainty level sigma * sqrt(4 * ln(p) / n)."""
    if n < 1 or p < 2:
        raise InvalidDimensions(f"need n >= 1 and p >= 2, got n={n}, p={p}")
    if sigma < 0.0:
        raise InvalidDimensions(f"need sigma >= 0, got sigma={sigma}")
    return sigma * math.sqrt(4.0 * math.log(p) / n)


def trial_metrics(
    beta_hat: np.ndarray,
    truth: GroundTruth,
    gamma: float | None = None,
    wall_time: float = 0.0,
) -> TrialMetrics:
    """Score one estimate: sup/relative error, support recovery, signs."""
    beta_hat = np.asarray(beta_hat, dtype=np.float64).ravel()
    beta_star = truth.beta_star
    if beta_hat.shape != beta_star.shape:
        raise DimensionMismatch(
            f"estimate has length {beta_hat.shape[0]}, truth has {beta_star.shape[0]}"
        )
    norm_star = float(np.linalg.norm(beta_star))
    if norm_star == 0.0:
        raise ZeroTruth("ground-truth coefficients are identically zero")
    diff = beta_hat - beta_star
    ae = float(np.abs(diff).max())
    re = float(np.linalg.norm(diff)) / norm_star
    nz = np.abs(beta_hat) > SUPPORT_TOL
    support_size = int(nz.sum())
    exact = bool(np.array_equal(np.flatnonzero(nz), truth.support.indices))
    sign_ok = exact and bool(
        np.all(np.sign(beta_hat[truth.support.indices]) == truth.signs)
    )
    within = None if gamma is None else bool(ae < (14.0 / 3.0) * gamma)
    return TrialMetrics(
        ae=ae,
        re=re,
        exact_support=exact,
        support_size=support_size,
        sign_consistent=sign_ok,
        linf_within_bound=within,
        wall_time=wall_time,
    )


def coherence(X: DesignMatrix, block: int = 512) -> float:
    """Largest off-diagonal |(X'X/n)_ij|, computed in column blocks."""
    nu = 0.0
    V = X.values
    for start in range(0, X.p, block):
        stop = min(start + block, X.p)
        G = V.T @ V[:, start:stop] / X.n
        for k in range(stop - start):
            G[start + k, k] = 0.0
        m = float(np.abs(G).max()) if G.size else 0.0
        nu = max(nu, m)
    return nu


def check_conditions(X: DesignMatrix, truth: GroundTruth, sigma: float) -> ConditionReport:
    """Evaluate the coherence and minimum-signal conditions for one instance."""
    nu = coherence(X)
    T = truth.support.size
    if T == 0:
        raise ZeroTruth("ground truth has empty support")
    g = gamma_n(sigma, X.n, X.p)
    beta_min = float(np.abs(truth.beta_star[truth.support.indices]).min())
    floor = 78.0 * g
    ratio = beta_min / floor if floor > 0.0 else math.inf
    return ConditionReport(
        nu=nu,
        t_nu=T * nu,
        c3_ok=bool(T * nu <= 0.25),
        gamma_n=g,
        beta_min=beta_min,
        beta_min_ratio=ratio,
        c1_ok=bool(beta_min >= floor),
    )


def _oracle_index(path: SolutionPath, scales: np.ndarray, beta_star: np.ndarray) -> int:
    candidates = [
        i
        for i, pt in enumerate(path.points)
        if int(np.count_nonzero(pt.result.state.beta)) <= path.support_cap
    ]
    if not candidates:
        candidates = list(range(len(path.points)))
    errs = [
        float(np.abs(path.points[i].result.state.beta / scales - beta_star).max())
        for i in candidates
    ]
    return candidates[int(np.argmin(errs))]


def _run_one(
    scenario: SimScenario, rep: int, path_cfg: PathConfig, selection: SelectionMode
) -> TrialRow:
    try:
        X_raw, y, truth = generate_instance(scenario, rep)
        X = normalize_columns(X_raw)
        t0 = time.perf_counter()
        path = sns_solve_path(X, y, path_cfg)
        elapsed = time.perf_counter() - t0
        if selection is SelectionMode.INFORMATION_CRITERION:
            i = select_information_criterion(path, X, y)
        else:
            i = _oracle_index(path, X.column_scales, truth.beta_star)
        beta_raw = path.points[i].result.state.beta / X.column_scales
        g = gamma_n(scenario.sigma, scenario.n, scenario.p) if scenario.p >= 2 else None
        metrics = trial_metrics(beta_raw, truth, gamma=g, wall_time=elapsed)
        return TrialRow(rep=rep, selected_index=i, lam=path.points[i].lam, metrics=metrics)
    except (NsLassoError, np.linalg.LinAlgError) as e:
        return TrialRow(rep=rep, selected_index=-1, lam=math.nan, metrics=None, error=str(e))


def run_replications(
    scenario: SimScenario,
    reps: int,
    path_cfg: PathConfig,
    selection: SelectionMode = SelectionMode.INFORMATION_CRITERION,
    workers: int = 1,
) -> ReplicationReport:
    """Run `reps` seeded replications, optionally across processes.

    Per-replication failures are recorded on their row and excluded from
    the aggregates; they do not abort the run.
    """
    if reps < 1:
        raise InvalidDimensions(f"reps must be >= 1, got {reps}")
    if workers < 1:
        raise InvalidDimensions(f"workers must be >= 1, got {workers}")
    selection = SelectionMode(selection)

    if workers == 1:
        rows = [_run_one(scenario, r, path_cfg, selection) for r in range(reps)]
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_one, scenario, r, path_cfg, selection)
                for r in range(reps)
            ]
            rows = [f.result() for f in futures]
    rows.sort(key=lambda row: row.rep)

    ok = [row.metrics for row in rows if row.metrics is not None]
    if ok:
        ae_mean = float(np.mean([m.ae for m in ok]))
        re_mean = float(np.mean([m.re for m in ok]))
        rp = float(np.mean([m.exact_support for m in ok]))
        mean_support = float(np.mean([m.support_size for m in ok]))
        time_mean = float(np.mean([m.wall_time for m in ok]))
    else:
        ae_mean = re_mean = rp = mean_support = time_mean = math.nan
    return ReplicationReport(
        scenario=scenario,
        selection=selection,
        reps=reps,
        rows=rows,
        ae_mean=ae_mean,
        re_mean=re_mean,
        rp=rp,
        mean_support=mean_support,
        time_mean=time_mean,
        successes=len(ok),
        failures=reps - len(ok),
    )


def _json_float(x: float):
    return None if (x != x or x in (math.inf, -math.inf)) else float(x)


def report_to_dict(report: ReplicationReport) -> dict:
    """JSON-ready dict; non-finite floats map to null, times stay separate."""
    sc = report.scenario
    rows = []
    for row in report.rows:
        m = row.metrics
        rows.append(
            {
                "rep": row.rep,
                "selected_index": row.selected_index,
                "lambda": _json_float(row.lam),
                "ae": None if m is None else _json_float(m.ae),
                "re": None if m is None else _json_float(m.re),
                "exact_support": None if m is None else m.exact_support,
                "support_size": None if m is None else m.support_size,
                "sign_consistent": None if m is None else m.sign_consistent,
                "linf_within_bound": None if m is None else m.linf_within_bound,
                "time_s": None if m is None else m.wall_time,
                "error": row.error,
            }
        )
    return {
        "method": "sns",
        "selection": report.selection.value,
        "scenario": {
            "n": sc.n,
            "p": sc.p,
            "T": sc.T,
            "R": sc.R,
            "rho": sc.rho,
            "sigma": sc.sigma,
            "design": sc.design.value,
            "seed": sc.seed,
        },
        "reps": report.reps,
        "aggregate": {
            "ae": _json_float(report.ae_mean),
            "re": _json_float(report.re_mean),
            "rp": _json_float(report.rp),
            "mean_support": _json_float(report.mean_support),
            "time_s": _json_float(report.time_mean),
            "successes": report.successes,
            "failures": report.failures,
        },
        "rows": rows,
    }


def format_report_table(report: ReplicationReport) -> str:
    """Plain-text summary table; RE is printed in units of 1e-2."""
    sc = report.scenario
    header = (
        f"design={sc.design.value} n={sc.n} p={sc.p} T={sc.T} R={sc.R} "
        f"rho={sc.rho} sigma={sc.sigma} reps={report.reps} "
        f"selection={report.selection.value}"
    )
    cols = f"{'Method':<8}{'AE':>10}{'RE(x1e-2)':>12}{'RP':>8}{'MEAN':>8}{'Time(s)':>10}"
    line = (
        f"{'SNS':<8}{report.ae_mean:>10.4f}{100.0 * report.re_mean:>12.4f}"
        f"{report.rp:>8.2f}{report.mean_support:>8.2f}{report.time_mean:>10.4f}"
    )
    tail = f"successes={report.successes} failures={report.failures}"
    return "\n".join([header, cols, line, tail])
