"""Design data, shrinkage priors and the conditional draw of tau.

Every prior here is a normal scale mixture: beta | sigma2, tau ~ N(0, sigma2 D_tau).
The priors differ only in how tau | beta, sigma2 is drawn, which is the first
leg of both the three-block and two-block kernels.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ConstantColumn, DimensionMismatch, InvalidParameter
from .numerics import _ig_scaled_draw

# beta_j**2 below this is treated as an exact zero in the inverse-Gaussian updates
BETA2_FLOOR = 1e-300


@dataclass(frozen=True)
class DesignData:
    """Standardized design ``X`` with centered response ``Y_tilde`` and caches."""

    X: np.ndarray
    Y_tilde: np.ndarray
    XtY: np.ndarray = field(repr=False)
    YtY: float
    XtX: np.ndarray = field(repr=False)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @classmethod
    def from_arrays(cls, X, Y, center=True):
        """Wrap ``X`` as is; ``Y`` is centered unless ``center`` is False."""
        X = np.array(X, dtype=float, ndmin=2)
        Y = np.array(Y, dtype=float).ravel()
        if X.shape[0] != Y.shape[0]:
            raise DimensionMismatch(f"X has {X.shape[0]} rows but Y has {Y.shape[0]} entries")
        if center:
            Y = Y - Y.mean()
        X.setflags(write=False)
        Y.setflags(write=False)
        return cls(X=X, Y_tilde=Y, XtY=X.T @ Y, YtY=float(Y @ Y), XtX=X.T @ X)


def standardize(X_raw, Y_raw):
    """Center and scale columns of ``X_raw`` to squared norm n; center ``Y_raw``."""
    X = np.array(X_raw, dtype=float, ndmin=2)
    Y = np.array(Y_raw, dtype=float).ravel()
    n = X.shape[0]
    if Y.shape[0] != n:
        raise DimensionMismatch(f"X has {n} rows but Y has {Y.shape[0]} entries")
    if n < 2:
        raise InvalidParameter("standardize needs at least two observations")
    Xc = X - X.mean(axis=0)
    Xc -= Xc.mean(axis=0)  # second pass removes the rounding left by a large offset
    norms2 = np.einsum("ij,ij->j", Xc, Xc)
    for j in range(X.shape[1]):
        if not norms2[j] > 1e-24 * max(1.0, float(np.abs(X[:, j]).max())) ** 2:
            raise ConstantColumn(j)
    Xs = Xc * np.sqrt(n / norms2)
    Xs -= Xs.mean(axis=0)
    return DesignData.from_arrays(Xs, Y, center=True)


@dataclass
class ChainState:
    beta: np.ndarray
    sigma2: float
    tau: np.ndarray

    def copy(self):
        return ChainState(self.beta.copy(), self.sigma2, self.tau.copy())


def _vector(name, value, p, low=None, high=None):
    v = np.broadcast_to(np.asarray(value, dtype=float), (p,)).copy()
    if not np.all(np.isfinite(v)):
        raise InvalidParameter(f"{name} must be finite")
    if low is not None and not np.all(v > low):
        raise InvalidParameter(f"{name} must exceed {low}")
    if high is not None and not np.all(v < high):
        raise InvalidParameter(f"{name} must be below {high}")
    return v


def _check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise InvalidParameter(f"{name} must be positive and finite, got {value}")


# -- priors ------------------------------------------------------------------


@dataclass(frozen=True)
class Lasso:
    lam: float
    tag = "lasso"

    def __post_init__(self):
        _check_positive("lambda", self.lam)

    def draw_tau(self, beta, sigma2, rng):
        return update_tau_lasso(beta, sigma2, self.lam, rng)

    def initial_tau(self, p):
        return np.ones(p)

    def check_tau(self, tau):
        return bool(np.all(tau > 0))

    def to_dict(self):
        return {"prior": self.tag, "lambda": self.lam}


@dataclass(frozen=True)
class SpikeSlab:
    """Two-point mixing prior: tau_j = kappa_j*zeta_j w.p. w_j, else zeta_j."""

    w: np.ndarray
    kappa: np.ndarray
    zeta: np.ndarray
    tag = "spike-slab"

    @classmethod
    def build(cls, p, w, kappa, zeta):
        return cls(
            w=_vector("w", w, p, 0.0, 1.0),
            kappa=_vector("kappa", kappa, p, 1.0),
            zeta=_vector("zeta", zeta, p, 0.0),
        )

    def draw_tau(self, beta, sigma2, rng):
        return update_tau_spike_slab(beta, sigma2, self, rng)

    def initial_tau(self, p):
        return self.zeta.copy()

    def check_tau(self, tau):
        return bool(np.all((tau == self.zeta) | (tau == self.kappa * self.zeta)))

    def to_dict(self):
        return {"prior": self.tag, "w": self.w.tolist(), "kappa": self.kappa.tolist(),
                "zeta": self.zeta.tolist()}


@dataclass(frozen=True)
class StudentT:
    """Inverse-gamma(nu_j/2, eta_j/2) mixing, i.e. scaled t priors on beta_j."""

    nu: np.ndarray
    eta: np.ndarray
    tag = "student-t"

    @classmethod
    def build(cls, p, nu, eta):
        return cls(nu=_vector("nu", nu, p, 0.0), eta=_vector("eta", eta, p, 0.0))

    def draw_tau(self, beta, sigma2, rng):
        return update_tau_student_t(beta, sigma2, self, rng)

    def initial_tau(self, p):
        return np.ones(p)

    def check_tau(self, tau):
        return bool(np.all(tau > 0))

    def to_dict(self):
        return {"prior": self.tag, "nu": self.nu.tolist(), "eta": self.eta.tolist()}


@dataclass(frozen=True)
class ElasticNet:
    lam1: float
    lam2: float
    tag = "elastic-net"

    def __post_init__(self):
        _check_positive("lambda1", self.lam1)
        _check_positive("lambda2", self.lam2)

    def draw_tau(self, beta, sigma2, rng):
        return update_tau_elastic_net(beta, sigma2, self.lam1, self.lam2, rng)

    def initial_tau(self, p):
        return np.full(p, 1.0 / (1.0 + self.lam2))

    def check_tau(self, tau):
        return bool(np.all((tau > 0) & (tau < 1.0 / self.lam2)))

    def to_dict(self):
        return {"prior": self.tag, "lambda1": self.lam1, "lambda2": self.lam2}


# -- tau | beta, sigma2 --------------------------------------------------------


def _inverse_gaussian_precisions(beta, sigma2, lam2, rng):
    """Draw v_j ~ IG(sqrt(lam2*sigma2/beta_j^2), lam2), the Levy limit at beta_j = 0."""
    beta2 = np.asarray(beta, dtype=float) ** 2
    zero = beta2 < BETA2_FLOOR
    if not zero.any():
        return _ig_scaled_draw(rng, np.sqrt(lam2 * sigma2 / beta2), lam2, beta2.shape)
    v = np.empty_like(beta2)
    live = ~zero
    n_live = int(live.sum())
    if n_live:
        v[live] = _ig_scaled_draw(rng, np.sqrt(lam2 * sigma2 / beta2[live]), lam2, n_live)
    v[zero] = lam2 / rng.chisquare(1.0, size=int(zero.sum()))
    return v


def update_tau_lasso(beta, sigma2, lam, rng):
    """Draw tau with 1/tau_j ~ InverseGaussian(sqrt(lam^2 sigma2 / beta_j^2), lam^2)."""
    _check_positive("lambda", lam)
    _check_positive("sigma2", sigma2)
    return 1.0 / _inverse_gaussian_precisions(beta, sigma2, lam * lam, rng)


def spike_slab_weight(beta_j, sigma2, w_j, kappa_j, zeta_j):
    """Posterior probability that tau_j sits at the slab value kappa_j*zeta_j.

    Vectorized over the coordinate arguments. Evaluated as a logistic of the
    log-odds so large ``beta_j**2 / sigma2`` cannot overflow.
    """
    w_j = np.asarray(w_j, dtype=float)
    kappa_j = np.asarray(kappa_j, dtype=float)
    zeta_j = np.asarray(zeta_j, dtype=float)
    if not np.all((w_j > 0) & (w_j < 1)):
        raise InvalidParameter("w must lie in (0, 1)")
    if not np.all(kappa_j > 0) or not np.all(zeta_j > 0):
        raise InvalidParameter("kappa and zeta must be positive")
    _check_positive("sigma2", sigma2)
    out = _slab_probability(np.asarray(beta_j, dtype=float), sigma2, w_j, kappa_j, zeta_j)
    return float(out) if np.ndim(out) == 0 else out


def _slab_probability(beta, sigma2, w, kappa, zeta):
    log_odds_spike = (np.log1p(-w) - np.log(w) + 0.5 * np.log(kappa)
                      - beta * beta / (2.0 * sigma2) * (kappa - 1.0) / (kappa * zeta))
    return np.clip(expit(-log_odds_spike), 0.0, 1.0)


def update_tau_spike_slab(beta, sigma2, prior, rng):
    """tau_j = kappa_j zeta_j with probability w_tilde_j, else zeta_j."""
    _check_positive("sigma2", sigma2)
    w_tilde = _slab_probability(np.asarray(beta, dtype=float), sigma2,
                                prior.w, prior.kappa, prior.zeta)
    slab = rng.random(prior.w.shape[0]) < w_tilde
    return np.where(slab, prior.kappa * prior.zeta, prior.zeta)


def update_tau_student_t(beta, sigma2, prior, rng):
    """tau_j ~ InverseGamma((nu_j+1)/2, (eta_j + beta_j^2/sigma2)/2)."""
    _check_positive("sigma2", sigma2)
    beta = np.asarray(beta, dtype=float)
    scale = (prior.eta + beta ** 2 / sigma2) / 2.0
    return 2.0 * scale / rng.chisquare(prior.nu + 1.0)


def update_tau_elastic_net(beta, sigma2, lam1, lam2, rng):
    """tau_j = 1/(v_j + lam2) with v_j ~ InverseGaussian(sqrt(lam1 sigma2 / beta_j^2), lam1)."""
    _check_positive("lambda1", lam1)
    _check_positive("lambda2", lam2)
    _check_positive("sigma2", sigma2)
    return 1.0 / (_inverse_gaussian_precisions(beta, sigma2, lam1, rng) + lam2)
