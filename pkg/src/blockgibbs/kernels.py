"""Three-block and two-block Gibbs transition kernels and the chain runner.

Three-block (original) cycle, from (beta0, sigma2_0):
    tau | beta0, sigma2_0;  beta1 | tau, sigma2_0;  sigma2_1 | beta1, tau

Two-block (blocked) cycle:
    tau | beta0, sigma2_0;  sigma2_1 | tau;  beta1 | sigma2_1, tau

Both factor A_tau = X^T X + D_tau^{-1} exactly once per step.
"""

import enum
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ChainError, DegenerateScale, InvalidParameter, ShrinkageError
from .model import ChainState
from .numerics import _solve_posdef, draw_beta_conditional, factor_spd, stream


class KernelKind(enum.Enum):
    THREE_BLOCK = "three-block"
    TWO_BLOCK = "two-block"


@dataclass
class ChainOutput:
    sigma2_samples: np.ndarray
    beta_samples: Optional[np.ndarray]
    kernel: KernelKind
    prior: str
    seed: int
    burn_in: int
    n_iter: int
    wall_time: float


def _check_tau(tau):
    tau = np.asarray(tau, dtype=float)
    if not tau.min() > 0:
        raise InvalidParameter("tau must be strictly positive")
    return tau


def _inverse_gamma(rng, shape, scale):
    return 2.0 * scale / rng.chisquare(2.0 * shape)


def beta_conditional_params(data, tau, factorize=factor_spd):
    """Return ``(beta_tilde, factor)`` with beta_tilde = A_tau^{-1} X^T Y_tilde.

    ``factorize`` maps the symmetric matrix A_tau to a LowerFactor.
    """
    tau = _check_tau(tau)
    A = data.XtX.copy()
    A.flat[:: data.p + 1] += 1.0 / tau
    factor = factorize(A)
    return _solve_posdef(factor.L, data.XtY), factor


def sigma2_original_params(data, beta, tau):
    """Inverse-gamma (shape, scale) of sigma2 | beta, tau."""
    tau = _check_tau(tau)
    resid = data.Y_tilde - data.X @ beta
    scale = 0.5 * (resid @ resid + (beta * beta / tau).sum())
    return 0.5 * (data.n + data.p - 1), float(scale)


def sigma2_blocked_params(data, tau, beta_tilde=None):
    """Inverse-gamma (shape, scale) of sigma2 | tau with beta integrated out.

    The scale Y~^T (I - X A^{-1} X^T) Y~ / 2 is computed as
    (Y~^T Y~ - (X^T Y~)^T beta_tilde) / 2. Pass ``beta_tilde`` to reuse an
    existing factorization.
    """
    if data.n < 2:
        raise InvalidParameter("blocked sigma2 update needs n >= 2")
    if beta_tilde is None:
        beta_tilde, _ = beta_conditional_params(data, tau)
    else:
        _check_tau(tau)
    scale = 0.5 * (data.YtY - data.XtY @ beta_tilde)
    if scale <= 0:
        if scale < -1e-10 * data.YtY:
            raise DegenerateScale(f"blocked sigma2 scale is {scale:.3g}")
        scale = 0.0
    return 0.5 * (data.n - 1), float(scale)


def step_three_block(state, data, prior, rng, factorize=factor_spd):
    tau = prior.draw_tau(state.beta, state.sigma2, rng)
    beta_tilde, factor = beta_conditional_params(data, tau, factorize)
    beta = draw_beta_conditional(rng, factor, beta_tilde, state.sigma2)
    shape, scale = sigma2_original_params(data, beta, tau)
    sigma2 = _inverse_gamma(rng, shape, scale)
    return ChainState(beta, sigma2, tau)


def step_two_block(state, data, prior, rng, factorize=factor_spd):
    tau = prior.draw_tau(state.beta, state.sigma2, rng)
    beta_tilde, factor = beta_conditional_params(data, tau, factorize)
    shape, scale = sigma2_blocked_params(data, tau, beta_tilde)
    if scale == 0.0:
        raise DegenerateScale("blocked sigma2 scale underflowed to zero")
    sigma2 = _inverse_gamma(rng, shape, scale)
    beta = draw_beta_conditional(rng, factor, beta_tilde, sigma2)
    return ChainState(beta, sigma2, tau)


STEPS = {KernelKind.THREE_BLOCK: step_three_block, KernelKind.TWO_BLOCK: step_two_block}


def default_init(p, prior):
    """beta0 = 1_p and sigma2_0 = 1; tau is overwritten by the first draw."""
    return ChainState(np.ones(p), 1.0, prior.initial_tau(p))


def run_chain(data, prior, kind, n_iter, burn_in=0, init=None, seed=0, keep_beta=False):
    """Run ``burn_in + n_iter`` steps of ``kind`` and keep the last ``n_iter``.

    The chain draws from ``stream(seed)``. A failing step raises
    :class:`ChainError` carrying the 0-based iteration index.
    """
    if n_iter <= 0 or burn_in < 0:
        raise InvalidParameter("need n_iter > 0 and burn_in >= 0")
    kind = KernelKind(kind)
    step = STEPS[kind]
    state = default_init(data.p, prior) if init is None else init.copy()
    rng = stream(seed)
    sigma2_out = np.empty(n_iter)
    beta_out = np.empty((n_iter, data.p)) if keep_beta else None

    start = time.perf_counter()
    for it in range(burn_in + n_iter):
        try:
            state = step(state, data, prior, rng)
        except (ShrinkageError, FloatingPointError, np.linalg.LinAlgError) as exc:
            raise ChainError(it, exc) from exc
        k = it - burn_in
        if k >= 0:
            sigma2_out[k] = state.sigma2
            if keep_beta:
                beta_out[k] = state.beta
    wall = time.perf_counter() - start
    return ChainOutput(sigma2_out, beta_out, kind, prior.tag, int(seed), int(burn_in),
                       int(n_iter), wall)
