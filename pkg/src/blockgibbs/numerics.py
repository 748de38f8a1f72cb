"""Random-variate generators and positive-definite linear algebra.

All draws go through a :class:`numpy.random.Generator` backed by PCG64
(period 2**128). Streams are keyed by ``(seed, *keys)`` through
:class:`numpy.random.SeedSequence`, so chain ``c`` of a run seeded with
``s`` always uses ``stream(s, c)`` and no two chains share state.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dpotrf, dtrtrs

from .errors import DimensionMismatch, InvalidParameter, NotPositiveDefinite

PIVOT_RTOL = 1e-14
SYMMETRY_RTOL = 1e-12


def stream(seed, *keys):
    """Return an independent generator for ``(seed, *keys)``."""
    if seed < 0:
        raise InvalidParameter(f"seed must be non-negative, got {seed}")
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed, *keys):
    """Derive a 64-bit child seed from ``(seed, *keys)``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class LowerFactor:
    """Lower Cholesky factor ``L`` with ``L @ L.T`` equal to the factored matrix."""

    L: np.ndarray

    @property
    def p(self):
        return self.L.shape[0]

    def reconstruct(self):
        return self.L @ self.L.T


def cholesky(A):
    """Factor a symmetric positive-definite matrix.

    Raises
    ------
    NotPositiveDefinite
        If LAPACK rejects ``A`` or any pivot falls to ``1e-14 * max(diag(A))``
        or below.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise DimensionMismatch(f"expected a non-empty square matrix, got shape {A.shape}")
    if np.abs(A - A.T).max() > SYMMETRY_RTOL * np.abs(A).max():
        raise InvalidParameter("matrix is not symmetric")
    return factor_spd(A)


def factor_spd(A):
    """:func:`cholesky` without the shape and symmetry checks.

    For matrices symmetric by construction, such as X^T X + D^{-1}.
    """
    L, info = dpotrf(A, lower=1, clean=1, overwrite_a=0)
    if info != 0:
        raise NotPositiveDefinite(f"leading minor {info} is not positive")
    d = L.diagonal()
    if (d * d).min() <= PIVOT_RTOL * A.diagonal().max():
        raise NotPositiveDefinite(f"pivot {(d * d).min():.3g} below tolerance")
    return LowerFactor(L)


def solve_posdef(factor, b):
    """Solve ``(L L^T) x = b`` by a forward then a backward triangular solve."""
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.shape[0] != factor.p:
        raise DimensionMismatch(f"factor is {factor.p}x{factor.p}, rhs has shape {b.shape}")
    return _solve_posdef(factor.L, b)


def _solve_posdef(L, b):
    y, _ = dtrtrs(L, b, lower=1, trans=0)
    x, _ = dtrtrs(L, y, lower=1, trans=1)
    return x


def _positive_finite(name, value):
    value = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(value)) or not np.all(value > 0):
        raise InvalidParameter(f"{name} must be positive and finite")
    return value


# above this phi*y the direct root formula has relative error ~ eps*(phi*y)**2
_CANCEL_LIMIT = 1e3


def _ig_root(y, phi):
    """Smaller root of the Michael-Schucany-Haas quadratic for unit mean.

    ``phi`` is the dispersion times the mean. The direct formula cancels
    catastrophically once ``phi*y`` is large; it can come out <= 0 (the case
    the classic ``1/(y*phi)`` safeguard catches) but also positive and wrong.
    Those positions use the reciprocal of the larger root, the product of the
    roots being 1, which is the same number without cancellation and tends to
    ``1/(y*phi)``. Returns the root and the boolean mask of fallback positions.
    """
    x1 = 1.0 + phi / 2.0 * (y - np.sqrt(4.0 * y / phi + y * y))
    py = phi * y
    bad = (x1 <= 0) | (py > _CANCEL_LIMIT)
    if bad.any():
        stable = 1.0 / (1.0 + py / 2.0 + np.sqrt(py) * np.sqrt(1.0 + py / 4.0))
        x1 = np.where(bad, stable, x1)
    return x1, bad


def _ig_draw(rng, mean, shape, size):
    phi = mean / shape
    y = rng.chisquare(1.0, size=size)
    x1, _ = _ig_root(y, phi)
    u = rng.random(size=size)
    return mean * np.where(u < 1.0 / (1.0 + x1), x1, 1.0 / x1)


def draw_inverse_gaussian(rng, mean, shape, size=None):
    """Draw from InverseGaussian(mean, shape) by the transformation method.

    ``mean`` and ``shape`` broadcast against each other (and ``size``).
    Returns a float when every input is scalar.
    """
    mean = _positive_finite("mean", mean)
    shape = _positive_finite("shape", shape)
    out_shape = np.broadcast_shapes(mean.shape, shape.shape) if size is None else size
    out = _ig_draw(rng, mean, shape, out_shape)
    return float(out) if np.ndim(out) == 0 else out


def _ig_scaled_draw(rng, m, l, size):
    # sqrt(m)*sqrt(l) rather than sqrt(m*l): the product may overflow
    # even when the scale itself is representable.
    scale = np.sqrt(m) * np.sqrt(l)
    return scale * _ig_draw(rng, m / scale, l / scale, size)


def draw_inverse_gaussian_scaled(rng, m, l, size=None):
    """InverseGaussian(m, l) drawn on the unit scale ``sqrt(m*l)`` and rescaled.

    Same distribution as :func:`draw_inverse_gaussian`, but stays finite
    when ``m`` and ``l`` are individually extreme.
    """
    m = _positive_finite("m", m)
    l = _positive_finite("l", l)
    if not np.all(np.isfinite(np.sqrt(m) * np.sqrt(l))):
        raise InvalidParameter("m*l must be finite")
    out_shape = np.broadcast_shapes(m.shape, l.shape) if size is None else size
    out = _ig_scaled_draw(rng, m, l, out_shape)
    return float(out) if np.ndim(out) == 0 else out


def draw_inverse_gamma(rng, a, s, size=None):
    """InverseGamma(shape ``a``, scale ``s``) as ``2 s / chi2(2 a)``."""
    a = _positive_finite("a", a)
    s = _positive_finite("s", s)
    out_shape = np.broadcast_shapes(a.shape, s.shape) if size is None else size
    out = 2.0 * s / rng.chisquare(2.0 * a, size=out_shape)
    return float(out) if np.ndim(out) == 0 else out


def draw_beta_conditional(rng, factor, beta_tilde, sigma2):
    """Draw from N(beta_tilde, sigma2 * A^{-1}) where ``factor`` holds chol(A)."""
    if not (sigma2 > 0) or not np.isfinite(sigma2):
        raise InvalidParameter(f"sigma2 must be positive, got {sigma2}")
    z = rng.standard_normal(factor.p)
    w, _ = dtrtrs(factor.L, z, lower=1, trans=1)
    return beta_tilde + math.sqrt(sigma2) * w
