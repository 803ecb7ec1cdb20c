"""Core containers: normalized designs, primal/dual states, working sets.

Every solver in this package operates on a design whose columns have
Euclidean length sqrt(n).  `DesignMatrix` stores such a matrix together
with the per-column scales needed to map coefficients back to the scale
of the raw inputs: if ``beta`` solves the normalized problem, then
``beta / column_scales`` solves the problem posed with the raw matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroColumn

__all__ = [
    "DesignMatrix",
    "PrimalDualState",
    "WorkingSet",
    "normalize_columns",
    "xty_over_n",
    "restricted_gram_apply",
]

# Column norms at or below this are treated as exact zeros.
_NORM_FLOOR = 1e-300


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class DesignMatrix:
    """An n-by-p design with columns scaled to Euclidean length sqrt(n).

    Attributes
    ----------
    values : ndarray, shape (n, p)
        The normalized matrix, column-major, read-only.
    column_scales : ndarray, shape (p,)
        Positive factors such that ``raw[:, j] = values[:, j] * column_scales[j]``.
        A coefficient vector for `values` maps to the raw scale by dividing
        componentwise by `column_scales`.
    """

    values: np.ndarray
    column_scales: np.ndarray

    def __post_init__(self):
        v = np.asfortranarray(self.values, dtype=np.float64)
        s = np.ascontiguousarray(self.column_scales, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionMismatch(f"design must be 2-d, got ndim={v.ndim}")
        if s.shape != (v.shape[1],):
            raise DimensionMismatch(
                f"column_scales has shape {s.shape}, expected ({v.shape[1]},)"
            )
        if not np.all(np.isfinite(v)):
            raise DimensionMismatch("design contains non-finite entries")
        if not np.all(s > 0.0):
            raise DimensionMismatch("column_scales must be strictly positive")
        norms = np.sqrt(np.einsum("ij,ij->j", v, v))
        root_n = np.sqrt(v.shape[0])
        if np.any(np.abs(norms - root_n) > 1e-8 * root_n):
            raise DimensionMismatch(
                "columns are not normalized to length sqrt(n); "
                "construct via normalize_columns()"
            )
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "column_scales", _readonly(s))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


def normalize_columns(raw: np.ndarray) -> DesignMatrix:
    """Rescale each column of `raw` to Euclidean length sqrt(n).

    Parameters
    ----------
    raw : ndarray, shape (n, p)
        Arbitrary finite matrix with no zero columns.

    Returns
    -------
    DesignMatrix

    Raises
    ------
    ZeroColumn
        If any column norm is <= 1e-300.
    DimensionMismatch
        If `raw` is not a finite 2-d array.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 2 or raw.shape[0] < 1 or raw.shape[1] < 1:
        raise DimensionMismatch(f"expected a nonempty 2-d array, got shape {raw.shape}")
    if not np.all(np.isfinite(raw)):
        raise DimensionMismatch("design contains non-finite entries")
    norms = np.linalg.norm(raw, axis=0)
    bad = np.flatnonzero(norms <= _NORM_FLOOR)
    if bad.size:
        raise ZeroColumn(int(bad[0]))
    scales = norms / np.sqrt(raw.shape[0])
    return DesignMatrix(values=raw / scales, column_scales=scales)


@dataclass(frozen=True)
class WorkingSet:
    """A sorted set of column indices out of ``range(p)``."""

    indices: np.ndarray
    p: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp).ravel()
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 0 or idx[-1] >= self.p):
            raise DimensionMismatch(
                "working-set indices must be strictly increasing in [0, p)"
            )
        object.__setattr__(self, "indices", _readonly(idx))

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def __len__(self) -> int:
        return self.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, WorkingSet):
            return NotImplemented
        return self.p == other.p and np.array_equal(self.indices, other.indices)

    __hash__ = None  # mutable-array semantics; sets of WorkingSets unsupported

    def complement(self) -> np.ndarray:
        """Indices in [0, p) not in the set, ascending."""
        mask = np.ones(self.p, dtype=bool)
        mask[self.indices] = False
        return np.flatnonzero(mask)

    def member_mask(self) -> np.ndarray:
        mask = np.zeros(self.p, dtype=bool)
        mask[self.indices] = True
        return mask


@dataclass(frozen=True)
class PrimalDualState:
    """A primal/dual pair (beta, d) at regularization (lam, lam_bar).

    `d` plays the role of the correlation of residuals with the columns,
    X'(y - X beta)/n, though intermediate iterates may carry a `d` that is
    not exactly that function of `beta`.  `lam_bar` in [0, lam) is the
    shift used on the working set when debiasing; 0 means none.
    """

    beta: np.ndarray
    d: np.ndarray
    lam: float
    lam_bar: float = 0.0

    def __post_init__(self):
        b = np.ascontiguousarray(self.beta, dtype=np.float64)
        d = np.ascontiguousarray(self.d, dtype=np.float64)
        if b.ndim != 1 or d.shape != b.shape:
            raise DimensionMismatch(
                f"beta and d must be 1-d of equal length, got {b.shape} and {d.shape}"
            )
        if not (self.lam > 0.0):
            raise DimensionMismatch(f"lam must be > 0, got {self.lam}")
        if not (0.0 <= self.lam_bar < self.lam):
            raise DimensionMismatch(
                f"lam_bar must lie in [0, lam), got lam_bar={self.lam_bar}, lam={self.lam}"
            )
        object.__setattr__(self, "beta", _readonly(b))
        object.__setattr__(self, "d", _readonly(d))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "lam_bar", float(self.lam_bar))

    @property
    def p(self) -> int:
        return self.beta.shape[0]


def xty_over_n(X: DesignMatrix, v: np.ndarray) -> np.ndarray:
    """Compute X'v / n for a length-n vector `v`."""
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.shape[0] != X.n:
        raise DimensionMismatch(f"v has length {v.shape[0]}, expected n={X.n}")
    return X.values.T @ v / X.n


def restricted_gram_apply(X: DesignMatrix, A: WorkingSet, u: np.ndarray) -> np.ndarray:
    """Apply the restricted Gram operator (X_A' X_A / n) to `u`.

    Implemented as two matrix-vector products so the |A| x |A| Gram matrix
    is never formed; this is the kernel the conjugate-gradient solver
    iterates with when the working set is large.
    """
    u = np.asarray(u, dtype=np.float64).ravel()
    if u.shape[0] != A.size:
        raise DimensionMismatch(f"u has length {u.shape[0]}, expected |A|={A.size}")
    if A.p != X.p:
        raise DimensionMismatch(f"working set is over p={A.p}, design has p={X.p}")
    Xa = X.values[:, A.indices]
    return Xa.T @ (Xa @ u) / X.n
