"""Sequential Newton screening along a geometric regularization path.

Knots are ``lam_m = lam_0 * alpha**m`` with ``lam_0 = ||X'y/n||_inf``, the
smallest level at which 0 solves the problem.  Each knot warm-starts from
the previous one's output state.  The walk stops once the fitted support
exceeds ``floor(n / ln p)`` (that final, violating point is kept in the
path but skipped by the selector) or after `max_knots` knots.

The per-knot debiasing shift follows an affine schedule
``lam_bar_m = slope * lam_m + offset`` clamped into ``[0, lam_m - 1e-12)``;
slope 13/15 with offset 0 is the default, and slope = offset = 0 gives the
plain lasso path.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DesignMatrix, PrimalDualState, xty_over_n
from .errors import DegenerateResponse, DimensionMismatch, EmptyPath, NsLassoError
from .solver import NsConfig, NsResult, ns_solve

__all__ = [
    "PathStop",
    "PathConfig",
    "PathPoint",
    "SolutionPath",
    "lambda_zero",
    "lambda_bar_schedule",
    "default_support_cap",
    "sns_solve_path",
    "select_information_criterion",
]

# keeps lam_bar strictly below lam at every knot
_BAR_GAP = 1e-12

_DEFAULT_ALPHA = 8.0 / 13.0
_DEFAULT_SLOPE = 13.0 / 15.0


def _default_max_knots(alpha: float) -> int:
    # deep enough that lam_M / lam_0 <= 1e-3
    return int(math.ceil(math.log(1e-3) / math.log(alpha)))


@dataclass(frozen=True)
class PathConfig:
    """Path-level settings.

    alpha : geometric decay per knot, in (0, 1).
    max_knots : knot budget M; None derives it from alpha so the path
        reaches lam_0 * 1e-3.
    lambda_bar_slope, lambda_bar_offset : affine debiasing schedule,
        slope in [0, 1) and offset >= 0, clamped per knot.
    ns : template NsConfig; its lam/lam_bar are overwritten per knot.
    support_cap : overrides floor(n / ln p) when given.
    lambda_grid : explicit decreasing positive levels; bypasses the
        geometric rule (alpha/max_knots are then ignored).
    """

    alpha: float = _DEFAULT_ALPHA
    max_knots: int | None = None
    lambda_bar_slope: float = _DEFAULT_SLOPE
    lambda_bar_offset: float = 0.0
    ns: NsConfig = field(default_factory=lambda: NsConfig(lam=1.0))
    support_cap: int | None = None
    lambda_grid: tuple[float, ...] | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise DimensionMismatch(f"alpha must be in (0, 1), got {self.alpha}")
        if not (0.0 <= self.lambda_bar_slope < 1.0):
            raise DimensionMismatch(
                f"lambda_bar_slope must be in [0, 1), got {self.lambda_bar_slope}"
            )
        if self.lambda_bar_offset < 0.0:
            raise DimensionMismatch(
                f"lambda_bar_offset must be >= 0, got {self.lambda_bar_offset}"
            )
        if self.max_knots is not None and self.max_knots < 1:
            raise DimensionMismatch(f"max_knots must be >= 1, got {self.max_knots}")
        if self.support_cap is not None and self.support_cap < 1:
            raise DimensionMismatch(f"support_cap must be >= 1, got {self.support_cap}")
        if self.lambda_grid is not None:
            grid = tuple(float(v) for v in self.lambda_grid)
            if len(grid) == 0:
                raise DimensionMismatch("lambda_grid must be nonempty")
            if any(not (v > 0.0) for v in grid):
                raise DimensionMismatch("lambda_grid levels must be > 0")
            if any(b >= a for a, b in zip(grid, grid[1:])):
                raise DimensionMismatch("lambda_grid must be strictly decreasing")
            object.__setattr__(self, "lambda_grid", grid)

    def knot_budget(self) -> int:
        if self.lambda_grid is not None:
            return len(self.lambda_grid)
        if self.max_knots is not None:
            return self.max_knots
        return _default_max_knots(self.alpha)


class PathStop(str, enum.Enum):
    SUPPORT_CAP = "support_cap"
    KNOT_BUDGET = "knot_budget"


@dataclass(frozen=True)
class PathPoint:
    lam: float
    lam_bar: float
    result: NsResult
    wall_time: float  # seconds spent in this knot's solve


@dataclass(frozen=True)
class SolutionPath:
    points: list[PathPoint]
    lambda0: float
    support_cap: int
    stopped_by: PathStop


def lambda_zero(X: DesignMatrix, y: np.ndarray) -> float:
    """||X'y/n||_inf — the smallest level whose solution is beta = 0."""
    lam0 = float(np.abs(xty_over_n(X, y)).max())
    if lam0 <= 0.0:
        raise DegenerateResponse("X'y = 0; every level solves to beta = 0")
    return lam0


def lambda_bar_schedule(lam: float, cfg: PathConfig) -> float:
    """Affine shift slope*lam + offset, clamped into [0, lam - 1e-12)."""
    raw = cfg.lambda_bar_slope * lam + cfg.lambda_bar_offset
    return min(max(raw, 0.0), max(lam - _BAR_GAP, 0.0))


def default_support_cap(n: int, p: int) -> int:
    if p < 2:
        raise DimensionMismatch(f"support cap needs p >= 2, got p={p}")
    return int(math.floor(n / math.log(p)))


def sns_solve_path(X: DesignMatrix, y: np.ndarray, cfg: PathConfig) -> SolutionPath:
    """Walk the regularization path with warm-started Newton screening.

    The state passed into knot m is exactly (same arrays) the output
    state of knot m-1; the first knot starts from (0, X'y/n), which is
    the fixed point at lam_0.  Solver errors are re-raised with the knot
    index prepended.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    lam0 = lambda_zero(X, y)
    cap = cfg.support_cap if cfg.support_cap is not None else default_support_cap(X.n, X.p)

    if cfg.lambda_grid is not None:
        levels = list(cfg.lambda_grid)  # may start above lam0; those solve to 0
    else:
        levels = [lam0 * cfg.alpha ** m for m in range(1, cfg.knot_budget() + 1)]

    beta = np.zeros(X.p)
    d = xty_over_n(X, y)
    points: list[PathPoint] = []
    stopped_by = PathStop.KNOT_BUDGET
    for m, lam_m in enumerate(levels, start=1):
        lam_bar_m = lambda_bar_schedule(lam_m, cfg)
        ns_cfg = replace(cfg.ns, lam=lam_m, lam_bar=lam_bar_m)
        init = PrimalDualState(beta, d, lam_m, lam_bar_m)
        t0 = time.perf_counter()
        try:
            result = ns_solve(X, y, ns_cfg, init)
        except NsLassoError as e:
            raise type(e)(f"at path knot m={m} (lam={lam_m!r}): {e}") from e
        wall = time.perf_counter() - t0
        points.append(PathPoint(lam=lam_m, lam_bar=lam_bar_m, result=result, wall_time=wall))
        beta, d = result.state.beta, result.state.d
        if int(np.count_nonzero(beta)) > cap:
            stopped_by = PathStop.SUPPORT_CAP
            break
    return SolutionPath(points=points, lambda0=lam0, support_cap=cap, stopped_by=stopped_by)


def _hbic(n: int, p: int, rss: float, support_size: int) -> float:
    # guard the log against an exact interpolation (rss == 0)
    return n * math.log(max(rss / n, 1e-300)) + support_size * math.log(n) * math.log(
        math.log(p)
    )


def select_information_criterion(path: SolutionPath, X: DesignMatrix, y: np.ndarray) -> int:
    """Index of the path point minimizing a high-dimensional BIC.

    Criterion: n*log(RSS/n) + ||beta||_0 * log(n) * log(log p).  Ties go
    to the larger lam (earlier index).  Points whose support exceeds the
    path's cap are skipped unless every point does.
    """
    if not path.points:
        raise EmptyPath("cannot select from a path with no points")
    y = np.asarray(y, dtype=np.float64).ravel()
    candidates = [
        i
        for i, pt in enumerate(path.points)
        if int(np.count_nonzero(pt.result.state.beta)) <= path.support_cap
    ]
    if not candidates:
        candidates = list(range(len(path.points)))
    best_i = candidates[0]
    best_val = math.inf
    for i in candidates:
        beta = path.points[i].result.state.beta
        r = y - X.values @ beta
        val = _hbic(X.n, X.p, float(r @ r), int(np.count_nonzero(beta)))
        if val < best_val:
            best_val = val
            best_i = i
    return best_i
