"""Simulated regression data for the autocorrelation experiments.

Rows of X are equicorrelated N(0, 1) covariate vectors (pairwise correlation
``rho``), columns are then standardized. The first ceil(sparsity_frac * p)
true coefficients are t_2 draws, the rest are zero, and the noise is t_4.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .model import DesignData, standardize
from .numerics import stream


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    rho: float = 0.2
    sparsity_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if self.n < 2 or self.p < 1:
            raise InvalidParameter(f"need n >= 2 and p >= 1, got n={self.n}, p={self.p}")
        if not 0.0 <= self.rho < 1.0:
            raise InvalidParameter(f"rho must lie in [0, 1), got {self.rho}")
        if not 0.0 < self.sparsity_frac <= 1.0:
            raise InvalidParameter(f"sparsity_frac must lie in (0, 1], got {self.sparsity_frac}")
        if self.seed < 0:
            raise InvalidParameter(f"seed must be non-negative, got {self.seed}")

    @property
    def n_nonzero(self):
        # guard against k/5*5 style rounding pushing ceil up by one
        return math.ceil(round(self.sparsity_frac * self.p, 9))


def equicorrelated_normals(n, p, rho, rng):
    """Rows x = sqrt(rho) z0 + sqrt(1 - rho) z with a shared scalar z0 per row."""
    z0 = rng.standard_normal((n, 1))
    z = rng.standard_normal((n, p))
    return math.sqrt(rho) * z0 + math.sqrt(1.0 - rho) * z


def generate_design(config, rng):
    """Standardized n x p design (column means 0, squared norms n)."""
    raw = equicorrelated_normals(config.n, config.p, config.rho, rng)
    return standardize(raw, np.zeros(config.n)).X


def student_t(rng, df, size):
    return rng.standard_normal(size) / np.sqrt(rng.chisquare(df, size) / df)


def generate_response(X, config, rng):
    """Return ``(Y, beta_star)`` with Y = X beta_star + eps."""
    X = np.asarray(X, dtype=float)
    if X.shape != (config.n, config.p):
        raise InvalidParameter(f"X has shape {X.shape}, config expects {(config.n, config.p)}")
    beta_star = np.zeros(config.p)
    k = config.n_nonzero
    beta_star[:k] = student_t(rng, 2.0, k)
    eps = student_t(rng, 4.0, config.n)
    return X @ beta_star + eps, beta_star


def simulate(config, *keys):
    """Draw one dataset from ``stream(config.seed, *keys)``.

    Returns ``(data, Y, beta_star)`` where ``data`` wraps the standardized
    design and centered response.
    """
    rng = stream(config.seed, *keys)
    X = generate_design(config, rng)
    Y, beta_star = generate_response(X, config, rng)
    return DesignData.from_arrays(X, Y), Y, beta_star
