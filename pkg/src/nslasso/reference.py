"""Independent reference solvers used to cross-check the main algorithm.

`fista_solve` is an accelerated proximal-gradient lasso solver sharing no
code path with the Newton screening iteration.  `generalized_newton_step`
assembles the dense 2p-by-2p Newton system for the KKT map

    F(beta, d) = (beta - soft_threshold(beta + d, lam),  n*d - X'(y - X*beta))

in the permuted ordering (d_A, beta_I, beta_A, d_I) and solves one step
explicitly.  It exists to certify, numerically, that one screening
update equals one generalized Newton update; it is deliberately
restricted to small p.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import DesignMatrix, PrimalDualState
from .errors import (
    DimensionMismatch,
    InvalidDimensions,
    NonConvergedWarning,
    NonPositiveLambda,
    SingularNewtonSystem,
)
from .prox import kkt_residual, soft_threshold

__all__ = [
    "fista_solve",
    "gram_spectral_norm",
    "newton_derivative_gamma",
    "evaluate_F",
    "NewtonSystem",
    "assemble_newton_system",
    "generalized_newton_step",
]

_NEWTON_MAX_P = 200


def gram_spectral_norm(X: DesignMatrix, rel_tol: float = 1e-6, max_iter: int = 1000) -> float:
    """Largest eigenvalue of X'X/n by power iteration, to `rel_tol` relative."""
    rng = np.random.default_rng(0)
    v = rng.standard_normal(X.p)
    v /= np.linalg.norm(v)
    lam_prev = 0.0
    for _ in range(max_iter):
        w = X.values.T @ (X.values @ v) / X.n
        lam = float(v @ w)  # Rayleigh quotient at the normalized v
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
        if abs(lam - lam_prev) <= rel_tol * abs(lam):
            return lam
        lam_prev = lam
    return lam_prev


def fista_solve(
    X: DesignMatrix,
    y: np.ndarray,
    lam: float,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    init: np.ndarray | None = None,
) -> np.ndarray:
    """Accelerated proximal gradient for the lasso, with adaptive restart.

    Steps are 1/L with L the power-iteration estimate of the Gram's
    largest eigenvalue (inflated by 1e-6 so the step stays admissible).
    Returns the first iterate whose KKT residual_inf is <= tol; emits
    NonConvergedWarning and returns the last iterate otherwise.
    """
    if not (lam > 0.0):
        raise NonPositiveLambda(f"lam must be > 0, got {lam}")
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.n:
        raise DimensionMismatch(f"y has length {y.shape[0]}, expected n={X.n}")

    L = gram_spectral_norm(X, rel_tol=1e-9) * (1.0 + 1e-6)
    step = 1.0 / L
    thr = step * lam

    x = np.zeros(X.p) if init is None else np.asarray(init, dtype=np.float64).ravel().copy()
    if x.shape[0] != X.p:
        raise DimensionMismatch(f"init has length {x.shape[0]}, expected p={X.p}")
    z = x.copy()
    t = 1.0
    for _ in range(max_iter):
        grad = X.values.T @ (X.values @ z - y) / X.n
        x_new = soft_threshold(z - step * grad, thr)
        if kkt_residual(X, y, x_new, lam).residual_inf <= tol:
            return x_new
        # gradient-scheme adaptive restart
        if float((z - x_new) @ (x_new - x)) > 0.0:
            t = 1.0
            z = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            z = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        x = x_new
    warnings.warn(
        f"fista did not reach tol={tol:g} within {max_iter} iterations",
        NonConvergedWarning,
        stacklevel=2,
    )
    return x


def newton_derivative_gamma(v: np.ndarray, lam: float) -> np.ndarray:
    """Diagonal of a Newton derivative of the soft threshold at `v`.

    Entries are 1 where |v_i| > lam and 0 otherwise; the boundary
    |v_i| = lam takes 0, matching the strict working-set rule.
    """
    if not (lam > 0.0):
        raise NonPositiveLambda(f"lam must be > 0, got {lam}")
    v = np.asarray(v, dtype=np.float64)
    return (np.abs(v) > lam).astype(np.float64)


def evaluate_F(state: PrimalDualState, X: DesignMatrix, y: np.ndarray) -> np.ndarray:
    """KKT map in natural ordering: (beta - soft_threshold(beta+d, lam), n*d - X'(y - X*beta))."""
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.shape[0] != X.n:
        raise DimensionMismatch(f"y has length {y.shape[0]}, expected n={X.n}")
    if state.p != X.p:
        raise DimensionMismatch(f"state has p={state.p}, design has p={X.p}")
    f1 = state.beta - soft_threshold(state.beta + state.d, state.lam)
    f2 = X.n * state.d - X.values.T @ (y - X.values @ state.beta)
    return np.concatenate([f1, f2])


@dataclass(frozen=True)
class NewtonSystem:
    """Dense Newton system in the permuted ordering (d_A, beta_I, beta_A, d_I).

    `h @ delta_perm = rhs` where rhs = -F in the same row ordering.
    `permutation[j]` is the position in the natural (beta, d) stacking of
    permuted coordinate j, so `delta_natural[permutation] = delta_perm`.
    """

    h: np.ndarray
    rhs: np.ndarray
    permutation: np.ndarray


def assemble_newton_system(
    state: PrimalDualState, X: DesignMatrix, y: np.ndarray, lam: float
) -> NewtonSystem:
    """Build H and -F at `state` for level `lam`, permuted as (d_A, beta_I, beta_A, d_I)."""
    if not (lam > 0.0):
        raise NonPositiveLambda(f"lam must be > 0, got {lam}")
    y = np.asarray(y, dtype=np.float64).ravel()
    p, n = X.p, X.n
    if state.p != p:
        raise DimensionMismatch(f"state has p={state.p}, design has p={p}")
    if y.shape[0] != n:
        raise DimensionMismatch(f"y has length {y.shape[0]}, expected n={n}")
    if p > _NEWTON_MAX_P:
        raise InvalidDimensions(
            f"dense Newton assembly is limited to p <= {_NEWTON_MAX_P}, got p={p}"
        )

    b = newton_derivative_gamma(state.beta + state.d, lam)
    act = np.flatnonzero(b == 1.0)
    ina = np.flatnonzero(b == 0.0)
    a, q = act.size, ina.size

    Xa = X.values[:, act]
    Xi = X.values[:, ina]

    h = np.zeros((2 * p, 2 * p))
    # column blocks: [0:a] = d_A, [a:a+q] = beta_I, [a+q:2a+q] = beta_A, [2a+q:] = d_I
    c_da, c_bi, c_ba, c_di = 0, a, a + q, 2 * a + q
    # row 1: F1 on A depends only on d_A
    h[0:a, c_da : c_da + a] = -np.eye(a)
    # row 2: F1 on I depends only on beta_I
    h[a : a + q, c_bi : c_bi + q] = np.eye(q)
    # row 3: F2 on A
    h[a + q : 2 * a + q, c_da : c_da + a] = n * np.eye(a)
    h[a + q : 2 * a + q, c_bi : c_bi + q] = Xa.T @ Xi
    h[a + q : 2 * a + q, c_ba : c_ba + a] = Xa.T @ Xa
    # row 4: F2 on I
    h[2 * a + q :, c_bi : c_bi + q] = Xi.T @ Xi
    h[2 * a + q :, c_ba : c_ba + a] = Xi.T @ Xa
    h[2 * a + q :, c_di : c_di + q] = n * np.eye(q)

    f1 = state.beta - soft_threshold(state.beta + state.d, lam)
    f2 = n * state.d - X.values.T @ (y - X.values @ state.beta)
    rhs = -np.concatenate([f1[act], f1[ina], f2[act], f2[ina]])

    permutation = np.concatenate([p + act, ina, act, p + ina])
    return NewtonSystem(h=h, rhs=rhs, permutation=permutation)


def generalized_newton_step(
    state: PrimalDualState, X: DesignMatrix, y: np.ndarray, lam: float
) -> PrimalDualState:
    """One explicit generalized Newton update of the KKT map at level `lam`.

    Solves the dense permuted system and maps the increment back to the
    natural (beta, d) ordering.  Raises SingularNewtonSystem when H is
    singular (e.g. rank-deficient active Gram).
    """
    sys_ = assemble_newton_system(state, X, y, lam)
    try:
        delta_perm = np.linalg.solve(sys_.h, sys_.rhs)
    except np.linalg.LinAlgError as e:
        raise SingularNewtonSystem(str(e)) from e
    delta = np.empty(2 * X.p)
    delta[sys_.permutation] = delta_perm
    beta_new = state.beta + delta[: X.p]
    d_new = state.d + delta[X.p :]
    return PrimalDualState(beta_new, d_new, lam, 0.0)
