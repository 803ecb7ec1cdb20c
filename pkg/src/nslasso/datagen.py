"""Seeded synthetic problem generators for benchmarking.

Two row-i.i.d. Gaussian designs are provided: an AR(1)-correlated design
(columns follow x_j = rho*x_{j-1} + sqrt(1-rho^2)*z_j, so the population
column covariance is rho^|i-j|) and a moving-average design
(x_j = z_j + rho*(z_{j-1} + z_{j+1}) for interior columns, endpoints
copied).  Ground-truth coefficients live on a uniformly drawn support of
size T, with magnitudes R**kappa for kappa ~ U[0,1) and Rademacher signs,
so every signal has magnitude in [1, R).

All draws run through `numpy.random.default_rng` seeded from explicit
`SeedSequence`s; `generate_instance(scenario, r)` derives the component
streams as SeedSequence(scenario.seed, spawn_key=(r,)).spawn(3) in the
order (design, coefficients, noise), which makes every replication
reproducible independently of execution order or worker count.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.signal

from .core import WorkingSet
from .errors import DimensionMismatch, InvalidDimensions, InvalidRho, InvalidT

__all__ = [
    "DesignKind",
    "SimScenario",
    "GroundTruth",
    "gen_design_ar1",
    "gen_design_ma",
    "gen_coefficients",
    "gen_response",
    "generate_instance",
    "generator_metadata",
]

class DesignKind(str, enum.Enum):
    AR1 = "ar1"
    MA = "ma"


@dataclass(frozen=True)
class SimScenario:
    """A complete description of one synthetic benchmark setting."""

    n: int
    p: int
    T: int
    R: float
    rho: float
    sigma: float
    design: DesignKind
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "design", DesignKind(self.design))
        if self.n < 1 or self.p < 1:
            raise InvalidDimensions(f"need n, p >= 1, got n={self.n}, p={self.p}")
        if not (1 <= self.T <= self.p and self.T < self.n):
            raise InvalidT(f"need 1 <= T <= p and T < n, got T={self.T}")
        if not (self.R > 1.0):
            raise InvalidDimensions(f"need R > 1, got R={self.R}")
        if not (0.0 <= self.rho < 1.0):
            raise InvalidRho(f"need rho in [0, 1), got rho={self.rho}")
        if self.sigma < 0.0:
            raise InvalidDimensions(f"need sigma >= 0, got sigma={self.sigma}")
        if self.design is DesignKind.MA and self.p < 3:
            raise InvalidDimensions("the moving-average design needs p >= 3")


@dataclass(frozen=True)
class GroundTruth:
    """True coefficients: `signs` aligns with `support.indices` (ascending)."""

    beta_star: np.ndarray
    support: WorkingSet
    signs: np.ndarray


def gen_design_ar1(n: int, p: int, rho: float, seed) -> np.ndarray:
    """Rows i.i.d. N(0, Sigma) with Sigma_ij = rho^|i-j|, via the AR recursion."""
    if not (0.0 <= rho < 1.0):
        raise InvalidRho(f"need rho in [0, 1), got rho={rho}")
    if n < 1 or p < 1:
        raise InvalidDimensions(f"need n, p >= 1, got n={n}, p={p}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, p))
    if rho == 0.0 or p == 1:
        return z
    z[:, 1:] *= np.sqrt(1.0 - rho * rho)
    return scipy.signal.lfilter([1.0], [1.0, -rho], z, axis=1)


def gen_design_ma(n: int, p: int, rho: float, seed) -> np.ndarray:
    """Moving-average design: interior x_j = z_j + rho*(z_{j-1} + z_{j+1})."""
    if p < 3:
        raise InvalidDimensions(f"the moving-average design needs p >= 3, got p={p}")
    if n < 1:
        raise InvalidDimensions(f"need n >= 1, got n={n}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((n, p))
    x = z.copy()
    x[:, 1 : p - 1] += rho * (z[:, : p - 2] + z[:, 2:])
    return x


def gen_coefficients(p: int, T: int, R: float, seed) -> GroundTruth:
    """Support of size T uniform without replacement; beta_i = sign * R**kappa.

    Signs are Rademacher and kappa ~ U[0,1), drawn per support index after
    sorting, so `signs` lines up with the ascending support.
    """
    if not (1 <= T <= p):
        raise InvalidT(f"need 1 <= T <= p, got T={T}, p={p}")
    if not (R > 1.0):
        raise InvalidDimensions(f"need R > 1, got R={R}")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(p, size=T, replace=False))
    signs = rng.choice(np.array([-1.0, 1.0]), size=T)
    kappa = rng.random(T)
    beta_star = np.zeros(p)
    beta_star[idx] = signs * R ** kappa
    return GroundTruth(
        beta_star=beta_star, support=WorkingSet(indices=idx, p=p), signs=signs
    )


def gen_response(X_raw: np.ndarray, beta_star: np.ndarray, sigma: float, seed) -> np.ndarray:
    """y = X beta* + sigma * eps with eps ~ N(0, I)."""
    X_raw = np.asarray(X_raw, dtype=np.float64)
    beta_star = np.asarray(beta_star, dtype=np.float64).ravel()
    if X_raw.ndim != 2 or X_raw.shape[1] != beta_star.shape[0]:
        raise DimensionMismatch(
            f"design {X_raw.shape} incompatible with beta of length {beta_star.shape[0]}"
        )
    if sigma < 0.0:
        raise InvalidDimensions(f"need sigma >= 0, got sigma={sigma}")
    rng = np.random.default_rng(seed)
    return X_raw @ beta_star + sigma * rng.standard_normal(X_raw.shape[0])


def generate_instance(scenario: SimScenario, rep_index: int = 0):
    """Draw (X_raw, y, truth) for one replication.

    The three component streams are derived as
    SeedSequence(scenario.seed, spawn_key=(rep_index,)).spawn(3) in the
    order (design, coefficients, noise).
    """
    if rep_index < 0:
        raise InvalidDimensions(f"rep_index must be >= 0, got {rep_index}")
    root = np.random.SeedSequence(scenario.seed, spawn_key=(rep_index,))
    design_seed, coef_seed, noise_seed = root.spawn(3)
    if scenario.design is DesignKind.AR1:
        X_raw = gen_design_ar1(scenario.n, scenario.p, scenario.rho, design_seed)
    else:
        X_raw = gen_design_ma(scenario.n, scenario.p, scenario.rho, design_seed)
    truth = gen_coefficients(scenario.p, scenario.T, scenario.R, coef_seed)
    y = gen_response(X_raw, truth.beta_star, scenario.sigma, noise_seed)
    return X_raw, y, truth


def generator_metadata() -> dict:
    """Provenance block embedded in generated-data outputs."""
    return {
        "generator": "numpy.random.PCG64",
        "numpy_version": np.__version__,
        "stream_derivation": "SeedSequence(seed, spawn_key=(rep,)).spawn(3) -> (design, coef, noise)",
    }
