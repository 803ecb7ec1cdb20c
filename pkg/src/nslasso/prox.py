"""Soft thresholding, the lasso objective, and KKT diagnostics.

A vector ``beta`` minimizes ``(1/2n)||y - X beta||^2 + lam*||beta||_1``
iff it is a fixed point of ``beta = soft_threshold(beta + d, lam)`` with
``d = X'(y - X beta)/n``.  `kkt_residual` measures the violation of that
fixed-point equation in the sup norm, which certifies optimality.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DesignMatrix, xty_over_n
from .errors import DimensionMismatch, NonPositiveLambda

__all__ = ["KktReport", "soft_threshold", "lasso_objective", "dual_variable", "kkt_residual"]


@dataclass(frozen=True)
class KktReport:
    """Optimality diagnostics for a candidate lasso solution.

    residual_inf : sup-norm of beta - soft_threshold(beta + d, lam); zero
        exactly at minimizers.
    dual_feasibility : max(0, max_{i: beta_i = 0} |d_i| - lam); the amount
        by which the dual bound is violated on the zero coordinates.
    objective : the lasso objective at beta.
    """

    residual_inf: float
    dual_feasibility: float
    objective: float


def soft_threshold(v: np.ndarray, lam: float) -> np.ndarray:
    """Componentwise soft threshold: shrink toward 0 by lam, clip to 0 within lam.

    Entries with |v_i| <= lam map to exactly 0 (the boundary included).
    """
    if not (lam > 0.0):
        raise NonPositiveLambda(f"lam must be > 0, got {lam}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def lasso_objective(X: DesignMatrix, y: np.ndarray, beta: np.ndarray, lam: float) -> float:
    """Evaluate (1/2n)||y - X beta||^2 + lam*||beta||_1."""
    if not (lam > 0.0):
        raise NonPositiveLambda(f"lam must be > 0, got {lam}")
    y = np.asarray(y, dtype=np.float64).ravel()
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if y.shape[0] != X.n:
        raise DimensionMismatch(f"y has length {y.shape[0]}, expected n={X.n}")
    if beta.shape[0] != X.p:
        raise DimensionMismatch(f"beta has length {beta.shape[0]}, expected p={X.p}")
    r = y - X.values @ beta
    return 0.5 * float(r @ r) / X.n + lam * float(np.abs(beta).sum())


def dual_variable(X: DesignMatrix, y: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Residual correlations d = X'(y - X beta)/n."""
    y = np.asarray(y, dtype=np.float64).ravel()
    beta = np.asarray(beta, dtype=np.float64).ravel()
    if y.shape[0] != X.n:
        raise DimensionMismatch(f"y has length {y.shape[0]}, expected n={X.n}")
    if beta.shape[0] != X.p:
        raise DimensionMismatch(f"beta has length {beta.shape[0]}, expected p={X.p}")
    return xty_over_n(X, y - X.values @ beta)


def kkt_residual(X: DesignMatrix, y: np.ndarray, beta: np.ndarray, lam: float) -> KktReport:
    """Fixed-point and dual-feasibility diagnostics at `beta`."""
    beta = np.asarray(beta, dtype=np.float64).ravel()
    d = dual_variable(X, y, beta)
    residual = beta - soft_threshold(beta + d, lam)
    zero = beta == 0.0
    if np.any(zero):
        dual_feas = max(0.0, float(np.abs(d[zero]).max()) - lam)
    else:
        dual_feas = 0.0
    return KktReport(
        residual_inf=float(np.abs(residual).max()) if residual.size else 0.0,
        dual_feasibility=dual_feas,
        objective=lasso_objective(X, y, beta, lam),
    )
