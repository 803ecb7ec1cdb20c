"""Newton screening for the lasso.

One iteration screens coordinates by the magnitude of ``beta + d`` —
everything strictly above ``lam`` joins the working set A — then solves
the least-squares problem restricted to A with the dual pinned at
``(lam - lam_bar) * sign(beta_A + d_A)``, and refreshes the dual on the
complement.  Iteration stops as soon as the working set reproduces
itself, which certifies a fixed point of the KKT system (for
``lam_bar = 0``) or of its shifted, debiased variant.

The restricted solve uses a dense Cholesky factorization for small
working sets and conjugate gradient on the implicit Gram operator for
large ones; see `NsConfig.ls_method`.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .core import DesignMatrix, PrimalDualState, WorkingSet, restricted_gram_apply, xty_over_n
from .errors import CgStalledWarning, DimensionMismatch, NonPositiveLambda, SingularSystem
from .prox import KktReport, kkt_residual

__all__ = [
    "LsMethod",
    "StopReason",
    "NsConfig",
    "NsResult",
    "working_set",
    "restricted_ls_solve",
    "ns_iterate",
    "ns_solve",
]


class LsMethod(str, enum.Enum):
    """How the working-set least-squares system is solved."""

    DIRECT = "direct"
    CG = "cg"
    AUTO = "auto"


class StopReason(str, enum.Enum):
    WORKING_SET_FIXED_POINT = "working_set_fixed_point"
    ITERATION_CAP = "iteration_cap"


@dataclass(frozen=True)
class NsConfig:
    """Solver settings for a single regularization level.

    Parameters
    ----------
    lam : float
        Regularization level, > 0.
    lam_bar : float
        Debiasing shift in [0, lam); the dual on the working set is pinned
        at magnitude ``lam - lam_bar``.  0 recovers the plain lasso target.
    max_iter : int
        Iteration cap K; the last iterate is returned if it is reached.
    ls_method : LsMethod
        direct = dense Cholesky of the restricted Gram; cg = conjugate
        gradient on the implicit operator; auto = direct when the working
        set has at most `direct_threshold` members, else cg.
    cg_tol : float
        CG stops when ||G u - rhs|| <= cg_tol * max(1, ||rhs||).
    cg_max_iter : int or None
        None means max(10*|A|, ceil(p/(2*n*|A|))).
    ridge_epsilon : float
        Optional diagonal loading of the restricted Gram (direct mode);
        0 disables it.
    """

    lam: float
    lam_bar: float = 0.0
    max_iter: int = 50
    ls_method: LsMethod = LsMethod.AUTO
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    direct_threshold: int = 512
    ridge_epsilon: float = 0.0

    def __post_init__(self):
        if not (self.lam > 0.0):
            raise NonPositiveLambda(f"lam must be > 0, got {self.lam}")
        if not (0.0 <= self.lam_bar < self.lam):
            raise DimensionMismatch(
                f"lam_bar must lie in [0, lam), got {self.lam_bar} vs lam={self.lam}"
            )
        if self.max_iter < 1:
            raise DimensionMismatch(f"max_iter must be >= 1, got {self.max_iter}")
        if not (self.cg_tol > 0.0):
            raise DimensionMismatch(f"cg_tol must be > 0, got {self.cg_tol}")
        if self.cg_max_iter is not None and self.cg_max_iter < 1:
            raise DimensionMismatch(f"cg_max_iter must be >= 1, got {self.cg_max_iter}")
        if self.direct_threshold < 0:
            raise DimensionMismatch(f"direct_threshold must be >= 0")
        if self.ridge_epsilon < 0.0:
            raise DimensionMismatch(f"ridge_epsilon must be >= 0")
        object.__setattr__(self, "ls_method", LsMethod(self.ls_method))


@dataclass(frozen=True)
class NsResult:
    """Output of `ns_solve`.

    `working_set` is the set A used for the final update; on normal
    termination the set induced by `state` equals it.  `kkt` is evaluated
    at `state.beta` under `lam` (not the shifted level), so with
    lam_bar > 0 the residual reflects the debiasing shift by design.
    """

    state: PrimalDualState
    working_set: WorkingSet
    iterations: int
    converged_by: StopReason
    kkt: KktReport


def working_set(beta: np.ndarray, d: np.ndarray, lam: float) -> WorkingSet:
    """Indices with |beta_i + d_i| strictly greater than lam."""
    if not (lam > 0.0):
        raise NonPositiveLambda(f"lam must be > 0, got {lam}")
    beta = np.asarray(beta, dtype=np.float64).ravel()
    d = np.asarray(d, dtype=np.float64).ravel()
    if beta.shape != d.shape:
        raise DimensionMismatch(f"beta and d have shapes {beta.shape} vs {d.shape}")
    return WorkingSet(indices=np.flatnonzero(np.abs(beta + d) > lam), p=beta.shape[0])


def _auto_cg_cap(p: int, n: int, m: int) -> int:
    return max(10 * m, int(np.ceil(p / (2.0 * n * m))))


def _cg(apply_op, rhs: np.ndarray, x0: np.ndarray, tol: float, max_iter: int) -> np.ndarray:
    """Conjugate gradient with safeguards for (near-)singular operators.

    Tracks the iterate with the smallest residual and returns it if the
    solve cannot reach tolerance: on hitting the iteration cap, on
    curvature breakdown (the operator is only positive semidefinite when
    the working set outgrows the sample size), on divergence, or on a
    long stretch with no residual progress.  All of those emit
    CgStalledWarning; the caller still gets a usable vector.
    """
    x = x0.copy()
    r = rhs - apply_op(x)
    stop = tol * max(1.0, float(np.linalg.norm(rhs)))
    res = float(np.linalg.norm(r))
    if res <= stop:
        return x
    best_x, best_res = x.copy(), res
    stall_window = max(50, rhs.shape[0] // 4)
    since_improved = 0
    p = r.copy()
    rs = res * res
    for _ in range(max_iter):
        Ap = apply_op(p)
        denom = float(p @ Ap)
        if not np.isfinite(denom) or denom <= 1e-14 * float(p @ p):
            break  # semidefinite breakdown
        alpha = rs / denom
        x += alpha * p
        r -= alpha * Ap
        rs_new = float(r @ r)
        res = np.sqrt(rs_new)
        if not np.isfinite(res) or res > 1e3 * best_res:
            break  # divergence
        if res < best_res * (1.0 - 1e-6):
            since_improved = 0
        else:
            since_improved += 1
        if res < best_res:
            best_res = res
            best_x[:] = x
        if res <= stop:
            return x
        if since_improved >= stall_window:
            break  # residual has plateaued (inconsistent system)
        p = r + (rs_new / rs) * p
        rs = rs_new
    warnings.warn(
        f"conjugate gradient stalled at residual {best_res:.3e} (target {stop:.3e})",
        CgStalledWarning,
        stacklevel=3,
    )
    return best_x


def restricted_ls_solve(
    X: DesignMatrix,
    A: WorkingSet,
    rhs: np.ndarray,
    cfg: NsConfig,
    warm: np.ndarray | None = None,
) -> np.ndarray:
    """Solve (X_A' X_A / n) u = rhs for the working-set block.

    Direct mode factorizes the restricted Gram (plus optional ridge);
    a failed factorization raises SingularSystem.  CG mode never forms
    the Gram and warm-starts from `warm` when given; hitting the
    iteration cap emits CgStalledWarning but still returns the iterate.
    """
    rhs = np.asarray(rhs, dtype=np.float64).ravel()
    m = A.size
    if rhs.shape[0] != m:
        raise DimensionMismatch(f"rhs has length {rhs.shape[0]}, expected |A|={m}")
    if m == 0:
        return np.zeros(0)

    method = cfg.ls_method
    if method is LsMethod.AUTO:
        # a working set larger than n makes the Gram singular a priori,
        # so auto never routes those to the Cholesky path
        method = (
            LsMethod.DIRECT
            if m <= min(cfg.direct_threshold, X.n)
            else LsMethod.CG
        )

    if method is LsMethod.DIRECT:
        Xa = X.values[:, A.indices]
        G = Xa.T @ Xa / X.n
        if cfg.ridge_epsilon > 0.0:
            G[np.diag_indices_from(G)] += cfg.ridge_epsilon
        try:
            c, low = scipy.linalg.cho_factor(G, check_finite=False)
        except scipy.linalg.LinAlgError as e:
            raise SingularSystem(
                f"restricted Gram ({m}x{m}) is not positive definite: {e}"
            ) from e
        return scipy.linalg.cho_solve((c, low), rhs, check_finite=False)

    x0 = np.zeros(m) if warm is None else np.asarray(warm, dtype=np.float64).ravel().copy()
    if x0.shape[0] != m:
        raise DimensionMismatch(f"warm start has length {x0.shape[0]}, expected {m}")
    cap = cfg.cg_max_iter if cfg.cg_max_iter is not None else _auto_cg_cap(X.p, X.n, m)
    # slice the active columns once; the per-iteration operator is then
    # two slim matvecs, equivalent to restricted_gram_apply
    Xa = X.values[:, A.indices]
    inv_n = 1.0 / X.n
    if cfg.ridge_epsilon > 0.0:
        eps = cfg.ridge_epsilon
        apply_op = lambda u: Xa.T @ (Xa @ u) * inv_n + eps * u
    else:
        apply_op = lambda u: Xa.T @ (Xa @ u) * inv_n
    return _cg(apply_op, rhs, x0, cfg.cg_tol, cap)


def ns_iterate(
    state: PrimalDualState, X: DesignMatrix, y: np.ndarray, cfg: NsConfig
) -> tuple[PrimalDualState, WorkingSet]:
    """One Newton-screening update; returns the new state and the set used.

    With an empty working set the update degenerates to beta = 0 and
    d = X'y/n.  Otherwise beta is solved on A against the pinned dual
    (lam - lam_bar) * sign(beta_A + d_A), the off-set coefficients are
    zeroed, and the dual is refreshed from the new residuals off A.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.n:
        raise DimensionMismatch(f"y has length {y.shape[0]}, expected n={X.n}")
    if state.p != X.p:
        raise DimensionMismatch(f"state has p={state.p}, design has p={X.p}")

    A = working_set(state.beta, state.d, cfg.lam)
    if A.size == 0:
        beta1 = np.zeros(X.p)
        d1 = xty_over_n(X, y)
        return PrimalDualState(beta1, d1, cfg.lam, cfg.lam_bar), A

    idx = A.indices
    s = np.sign(state.beta[idx] + state.d[idx])
    d_active = (cfg.lam - cfg.lam_bar) * s
    Xa = X.values[:, idx]
    rhs = Xa.T @ y / X.n - d_active
    beta_active = restricted_ls_solve(X, A, rhs, cfg, warm=state.beta[idx])

    beta1 = np.zeros(X.p)
    beta1[idx] = beta_active
    resid = y - Xa @ beta_active
    d1 = xty_over_n(X, resid)
    # pin the working-set dual exactly; the matvec only approximates it
    d1[idx] = d_active
    return PrimalDualState(beta1, d1, cfg.lam, cfg.lam_bar), A


def ns_solve(
    X: DesignMatrix,
    y: np.ndarray,
    cfg: NsConfig,
    init: PrimalDualState | None = None,
) -> NsResult:
    """Iterate Newton screening until the working set is a fixed point.

    `init` defaults to the cold start (beta, d) = (0, X'y/n).  Stops when
    the set induced by the new state equals the set just used for the
    update, or after `cfg.max_iter` iterations (the last iterate is then
    returned with converged_by = ITERATION_CAP).
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if init is None:
        init = PrimalDualState(
            np.zeros(X.p), xty_over_n(X, y), cfg.lam, cfg.lam_bar
        )
    if init.p != X.p:
        raise DimensionMismatch(f"init has p={init.p}, design has p={X.p}")

    state = init
    used = None
    stop = StopReason.ITERATION_CAP
    iterations = cfg.max_iter
    for k in range(cfg.max_iter):
        state, used = ns_iterate(state, X, y, cfg)
        induced = working_set(state.beta, state.d, cfg.lam)
        if induced == used:
            stop = StopReason.WORKING_SET_FIXED_POINT
            iterations = k + 1
            break
    return NsResult(
        state=state,
        working_set=used,
        iterations=iterations,
        converged_by=stop,
        kkt=kkt_residual(X, y, state.beta, cfg.lam),
    )
