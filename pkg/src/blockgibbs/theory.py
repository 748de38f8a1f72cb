"""Theoretical quantities for the two-block Bayesian lasso chain.

* the drift/minorization constants and the total-variation bound,
* the drift function V(beta, sigma2) = lambda^2 |beta|^2 / sigma2,
* the quadratic-form ratio |A^{-1} X^T Y|^2 / C_tau and a fuzz harness for it,
* a quadrature oracle for the exact p = 1 lasso posterior.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import log_ndtr

from .errors import (ConstantColumn, DegenerateDenominator, GridTooCoarse, InvalidBound,
                     InvalidParameter)
from .kernels import beta_conditional_params
from .model import DesignData, standardize
from .numerics import stream


# -- geometric ergodicity bound ------------------------------------------------


def drift_constants(n, p, gamma):
    """Return ``(b, d_min)`` for drift rate ``gamma``; any valid d exceeds d_min."""
    if n < 1 or p < 1:
        raise InvalidParameter(f"need n, p >= 1, got n={n}, p={p}")
    if not 0.0 < gamma < 1.0:
        raise InvalidParameter(f"gamma must lie in (0, 1), got {gamma}")
    b = ((n + 3) * p) * (16.0 * gamma + (n + 3)) / (64.0 * gamma)
    return b, 2.0 * b / (1.0 - gamma)


@dataclass(frozen=True)
class BoundParams:
    n: int
    p: int
    gamma: float
    d: float
    r: float
    lam: float
    beta0_norm2: float
    sigma0_2: float


class BoundTerms(NamedTuple):
    b: float
    d_min: float
    eps: float
    U: float
    alpha: float


def bound_terms(params):
    b, d_min = drift_constants(params.n, params.p, params.gamma)
    if not params.d > d_min:
        raise InvalidBound(f"d = {params.d} must exceed d_min = {d_min}", d_min=d_min)
    if not 0.0 < params.r < 1.0:
        raise InvalidParameter(f"r must lie in (0, 1), got {params.r}")
    if not params.lam > 0 or not params.sigma0_2 > 0 or params.beta0_norm2 < 0:
        raise InvalidParameter("need lambda > 0, sigma0_2 > 0, beta0_norm2 >= 0")
    d, g = params.d, params.gamma
    eps = math.exp(-params.p * math.sqrt(d))
    U = 1.0 + 2.0 * (g * d + b)
    alpha = (1.0 + d) / (1.0 + 2.0 * b + g * d)
    return BoundTerms(b, d_min, eps, U, alpha)


def tv_bound(params, k):
    """Total-variation bound after ``k`` two-block steps from (beta0, sigma0^2).

    (1 - eps)^(r k) + (U^r / alpha^(1-r))^k (1 + b/(1-gamma) + lambda |beta0|^2 / sigma0^2),
    with both powers formed in log space.
    """
    if k < 1:
        raise InvalidParameter(f"k must be a positive integer, got {k}")
    t = bound_terms(params)
    r = params.r
    first = math.exp(r * k * math.log1p(-t.eps))
    log_rate = r * math.log(t.U) - (1.0 - r) * math.log(t.alpha)
    const = 1.0 + t.b / (1.0 - params.gamma) + params.lam * params.beta0_norm2 / params.sigma0_2
    second = math.exp(min(k * log_rate + math.log(const), 700.0))
    return first + second


def contraction_rate(params):
    """U^r / alpha^(1-r); the bound decreases in k only when this is below one."""
    t = bound_terms(params)
    return math.exp(params.r * math.log(t.U) - (1.0 - params.r) * math.log(t.alpha))


def drift_value(beta, sigma2, lam):
    if not sigma2 > 0:
        raise InvalidParameter(f"sigma2 must be positive, got {sigma2}")
    beta = np.asarray(beta, dtype=float)
    return float(lam * lam * (beta @ beta) / sigma2)


# -- quadratic-form ratio --------------------------------------------------------


def lemma2_ratio(data, tau):
    """|A_tau^{-1} X^T Y~|^2 / C_tau with C_tau = Y~^T (I - X A_tau^{-1} X^T) Y~."""
    beta_tilde, _ = beta_conditional_params(data, tau)
    c_tau = data.YtY - data.XtY @ beta_tilde
    if not c_tau > 1e-12 * data.YtY:
        raise DegenerateDenominator(f"C_tau = {c_tau:.3g} is not positive")
    return float(beta_tilde @ beta_tilde) / c_tau


def counterexample_instance():
    """n = 2, p = 1, X = (1, -1), Y = (1, -1), tau = 1: the ratio is 2/3 > |tau|_1 / 4."""
    data = DesignData.from_arrays(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]))
    return data, np.ones(1)


@dataclass
class FuzzReport:
    trials: int
    evaluated: int
    skipped: int
    max_ratio_over_l1: float
    max_ratio_over_quarter_l1: float
    violations_l1: int
    violations_quarter_l1: int
    worst: dict


def _fuzz_instance(rng, max_n, max_p):
    n = int(rng.integers(2, max_n + 1))
    p = int(rng.integers(1, max_p + 1))
    rho = float(rng.choice([0.0, 0.5, 0.95]))
    X = math.sqrt(rho) * rng.standard_normal((n, 1)) + math.sqrt(1 - rho) * rng.standard_normal((n, p))
    Y = rng.standard_normal(n)
    if rng.random() < 0.5:
        # push Y towards the column space so C_tau gets small
        Y = X @ rng.standard_normal(p) + 0.1 * Y
    tau = np.exp(rng.uniform(-7.0, 7.0, size=p))
    return X, Y, tau


def fuzz_lemma2(trials, max_n=6, max_p=6, seed=0):
    """Evaluate the ratio on random instances and track it against |tau|_1 and |tau|_1/4."""
    if trials < 1:
        raise InvalidParameter(f"trials must be positive, got {trials}")
    if max_n < 2 or max_p < 1:
        raise InvalidParameter("need max_n >= 2 and max_p >= 1")
    rng = stream(seed)
    evaluated = skipped = viol1 = viol4 = 0
    best = 0.0
    worst = {}
    for _ in range(trials):
        X, Y, tau = _fuzz_instance(rng, max_n, max_p)
        try:
            ratio = lemma2_ratio(standardize(X, Y), tau)
        except (ConstantColumn, DegenerateDenominator):
            skipped += 1
            continue
        evaluated += 1
        rel = ratio / tau.sum()
        viol1 += rel > 1.0
        viol4 += rel > 0.25
        if rel > best:
            best = rel
            worst = {"n": X.shape[0], "p": X.shape[1], "ratio": ratio, "tau_l1": float(tau.sum())}
    return FuzzReport(trials, evaluated, skipped, best, 4.0 * best, int(viol1), int(viol4), worst)


# -- exact p = 1 posterior by quadrature -----------------------------------------


class OracleMoments(NamedTuple):
    mean_beta: float
    mean_sigma2: float
    sd_beta: float
    sd_sigma2: float


# log-density drop defining the integration box
_BOX_DROP = 30.0
_EDGE_RATIO = 1e-6


def _suff_stats(data):
    if data.p != 1:
        raise InvalidParameter(f"oracle needs p = 1, got p = {data.p}")
    if data.n < 3:
        raise InvalidParameter("oracle needs n >= 3 for a proper posterior")
    xtx = float(data.XtX[0, 0])
    xty = float(data.XtY[0])
    return data.n, xtx, xty, data.YtY


def _log_density_ub(u, b, n, xtx, xty, yty, lam):
    """Log posterior in (u, b) = (log sigma2, beta / sigma), Jacobian included.

    The (beta, sigma2) density is (sigma2)^{-(n+2)/2} exp(-RSS/(2 sigma2) - lam |beta| / sigma):
    centered likelihood (sigma2)^{-(n-1)/2}, Laplace prior (sigma2)^{-1/2}, and 1/sigma2.
    d beta d sigma2 = sigma^3 db du.
    """
    sigma = np.exp(0.5 * u)
    rss_over_s2 = yty / (sigma * sigma) - 2.0 * b * xty / sigma + b * b * xtx
    return (1.5 - 0.5 * (n + 2)) * u - 0.5 * rss_over_s2 - lam * np.abs(b)


def _log_marginal_u(u, n, xtx, xty, yty, lam):
    """log of the integral over beta of the (beta, sigma2) density, plus log sigma2."""
    s2 = np.exp(u)
    sigma = np.sqrt(s2)
    a = xtx / s2
    c = xty / xtx
    k = lam / sigma
    pos = log_ndtr((c - k / a) * np.sqrt(a)) - k * c
    neg = log_ndtr(-(c + k / a) * np.sqrt(a)) + k * c
    c_min = yty - xty * c
    return (-0.5 * (n + 2) * u - c_min / (2.0 * s2) + 0.5 * np.log(2 * np.pi / a)
            + k * k / (2 * a) + np.logaddexp(pos, neg) + u)


def _moment_orders(n):
    """Finite moments of the p = 1 posterior; sigma2 has an IG((n-1)/2) tail."""
    shape = 0.5 * (n - 1)
    return {"mean_sigma2": shape > 1, "sd_sigma2": shape > 2,
            "mean_beta": shape > 0.5, "sd_beta": shape > 1}


def _default_box(n, xtx, xty, yty, lam):
    finite = _moment_orders(n)
    tail_power = 2.0 if finite["sd_sigma2"] else (1.0 if finite["mean_sigma2"] else 0.0)
    u0 = math.log(max(yty, 1e-300) / n)
    u = np.linspace(u0 - 80.0, u0 + 200.0, 40001)
    lm = _log_marginal_u(u, n, xtx, xty, yty, lam)
    keep_lo = lm > lm.max() - _BOX_DROP
    weighted = lm + tail_power * u
    keep_hi = weighted > weighted[keep_lo].max() - _BOX_DROP
    u_lo = u[np.argmax(keep_lo)]
    u_hi = max(u[len(u) - 1 - np.argmax(keep_hi[::-1])], u[len(u) - 1 - np.argmax(keep_lo[::-1])])
    # b | u is within a Laplace-shrunk Gaussian of centre xty/(xtx sigma), sd 1/sqrt(xtx)
    half = math.sqrt(2.0 * _BOX_DROP / xtx) + 1.0 / math.sqrt(xtx)
    centres = (xty / xtx) / np.exp(0.5 * np.array([u_lo, u_hi]))
    b_lo = min(0.0, centres.min()) - half
    b_hi = max(0.0, centres.max()) + half
    return (float(u_lo), float(u_hi)), (float(b_lo), float(b_hi))


def _trapezoid_weights(m):
    w = np.ones(m)
    w[0] = w[-1] = 0.5
    return w


def _grid_moments(box_u, box_b, resolution, n, xtx, xty, yty, lam, chunk=256):
    u = np.linspace(*box_u, resolution)
    b = np.linspace(*box_b, resolution)
    log_wb = np.log(_trapezoid_weights(resolution))
    row_mass = np.empty(resolution)
    row_b1 = np.empty(resolution)
    row_b2 = np.empty(resolution)
    edge_cols = -np.inf
    for lo in range(0, resolution, chunk):
        sl = slice(lo, min(lo + chunk, resolution))
        logh = _log_density_ub(u[sl, None], b[None, :], n, xtx, xty, yty, lam)
        edge_cols = max(edge_cols, logh[:, 0].max(), logh[:, -1].max())
        if lo == 0:
            edge_first = logh[0].max()
        if sl.stop == resolution:
            edge_last = logh[-1].max()
        top = logh.max(axis=1)
        e = np.exp(logh + log_wb - top[:, None])
        s0 = e.sum(axis=1)
        row_mass[sl] = top + np.log(s0)
        row_b1[sl] = (e @ b) / s0
        row_b2[sl] = (e @ (b * b)) / s0
    peak = row_mass.max()
    w = np.exp(row_mass - peak) * _trapezoid_weights(resolution)
    w /= w.sum()
    s2 = np.exp(u)
    sigma = np.sqrt(s2)
    m_s2 = float(w @ s2)
    m_b = float(w @ (sigma * row_b1))
    v_s2 = float(w @ (s2 - m_s2) ** 2)
    v_b = float(w @ (s2 * row_b2 - 2.0 * m_b * sigma * row_b1 + m_b * m_b))
    # edge test against the pointwise peak, which is at most the largest row mass
    point_peak = _log_density_ub(u[:, None], b[None, ::max(1, resolution // 400)],
                                 n, xtx, xty, yty, lam).max()
    edges = max(edge_first, edge_last, edge_cols)
    return OracleMoments(m_b, m_s2, math.sqrt(max(v_b, 0.0)), math.sqrt(v_s2)), edges - point_peak


def posterior_oracle_1d(data, lam, resolution=2000, sigma2_range=None, b_range=None,
                        check_refinement=True):
    """Posterior moments of (beta, sigma2) for the p = 1 Bayesian lasso.

    Integrates the closed-form unnormalized posterior by the trapezoid rule on
    a tensor grid in (log sigma2, beta / sigma). Moments that do not exist for
    this n are returned as ``inf``.

    Parameters
    ----------
    data : DesignData with p == 1
    lam : float
        Lasso penalty.
    resolution : int
        Grid points per axis.
    sigma2_range, b_range : (float, float), optional
        Integration box for sigma2 and beta/sigma; chosen automatically if omitted.
    check_refinement : bool
        Recompute with the step halved and raise :class:`GridTooCoarse` if any
        finite moment moves by more than 0.1%.

    Raises
    ------
    GridTooCoarse
        If the density on the box boundary exceeds 1e-6 of its peak, or the
        refinement check fails.
    """
    n, xtx, xty, yty = _suff_stats(data)
    if not lam > 0:
        raise InvalidParameter(f"lambda must be positive, got {lam}")
    box_u, box_b = _default_box(n, xtx, xty, yty, lam)
    if sigma2_range is not None:
        box_u = (math.log(sigma2_range[0]), math.log(sigma2_range[1]))
    if b_range is not None:
        box_b = tuple(b_range)
    moments, edge = _grid_moments(box_u, box_b, resolution, n, xtx, xty, yty, lam)
    if edge > math.log(_EDGE_RATIO):
        raise GridTooCoarse(f"boundary density is {math.exp(edge):.3g} of the peak")
    if check_refinement:
        fine, _ = _grid_moments(box_u, box_b, 2 * resolution - 1, n, xtx, xty, yty, lam)
        scale = {"mean_beta": moments.sd_beta, "sd_beta": moments.sd_beta,
                 "mean_sigma2": moments.mean_sigma2, "sd_sigma2": moments.sd_sigma2}
        for name in OracleMoments._fields:
            a, c = getattr(moments, name), getattr(fine, name)
            denom = max(abs(a), scale[name])
            if abs(a - c) > 1e-3 * denom:
                raise GridTooCoarse(f"{name} moved from {a:.6g} to {c:.6g} on refinement")
        moments = fine
    finite = _moment_orders(n)
    return OracleMoments(*(getattr(moments, k) if finite[k] else math.inf
                           for k in OracleMoments._fields))
