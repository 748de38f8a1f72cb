"""Scalar-chain diagnostics and the DACF experiment grid.

The effective sample size follows the autoregressive spectral estimate:
fit AR(q) by Yule-Walker for every q up to ``floor(10 log10 N)``, pick q by
AIC, and divide the sample variance by the AR spectral density at zero.
When AIC picks q = 0 the ESS is exactly N.
"""

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .errors import ConstantSeries, TooShort
from .kernels import KernelKind, run_chain
from .numerics import derive_seed
from .simdata import SimConfig, simulate

KERNEL_ORDER = (KernelKind.THREE_BLOCK, KernelKind.TWO_BLOCK)


@dataclass
class DiagnosticsReport:
    n_samples: int
    mean: float
    sd: float
    q025: float
    q50: float
    q975: float
    lag1_acf: Optional[float]
    ess: Optional[float]
    ar_order: Optional[int]

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class DacfCell:
    n: int
    p: int
    kernel: KernelKind
    mean_lag1_acf: float
    n_reps: int


def _centered(series, min_len):
    x = np.asarray(series, dtype=float).ravel()
    if x.size < min_len:
        raise TooShort(f"series has {x.size} values, need at least {min_len}")
    xc = x - x.mean()
    ss = float(xc @ xc)
    if not ss > 0:
        raise ConstantSeries("series has zero variance")
    return xc, ss


def autocorr(series, lag=1):
    """Lag-``lag`` autocorrelation with the biased (N-denominator) normalization."""
    if lag < 1:
        raise ValueError("lag must be a positive integer")
    xc, ss = _centered(series, lag + 2)
    return float(xc[:-lag] @ xc[lag:]) / ss


def _acov(xc, max_lag):
    n = xc.size
    return np.array([xc[: n - k] @ xc[k:] for k in range(max_lag + 1)]) / n


def levinson_durbin(r, order):
    """Yule-Walker AR fits of every order from autocovariances ``r``.

    Returns ``(coefs, variances)``: ``coefs[q]`` holds the AR(q) coefficients
    and ``variances[q]`` the innovations variance of that fit.
    """
    variances = np.empty(order + 1)
    variances[0] = r[0]
    coefs = [np.empty(0)]
    phi = np.empty(0)
    for q in range(1, order + 1):
        k = (r[q] - phi @ r[q - 1:0:-1]) / variances[q - 1]
        phi = np.concatenate([phi - k * phi[::-1], [k]])
        variances[q] = variances[q - 1] * (1.0 - k * k)
        coefs.append(phi)
    return coefs, variances


def ess_ar(series):
    """Return ``(ess, ar_order)`` from the AIC-selected AR spectral density at zero."""
    xc, ss = _centered(series, 10)
    n = xc.size
    q_max = min(n - 1, int(math.floor(10.0 * math.log10(n))))
    r = _acov(xc, q_max)
    coefs, variances = levinson_durbin(r, q_max)
    with np.errstate(divide="ignore"):
        aic = n * np.log(variances) + 2.0 * np.arange(q_max + 1)
    q = int(np.argmin(aic))  # first minimum, so ties go to the smaller order
    if q == 0:
        return float(n), 0
    var_pred = variances[q] * n / (n - (q + 1))
    spec0 = var_pred / (1.0 - coefs[q].sum()) ** 2
    var_x = ss / (n - 1)
    return float(min(n, n * var_x / spec0)), q


def summarize(series):
    """Posterior summary plus lag-one ACF and ESS.

    A constant series yields ``sd == 0`` and ``None`` for the correlation-based
    fields rather than an error.
    """
    x = np.asarray(series, dtype=float).ravel()
    if x.size < 10:
        raise TooShort(f"series has {x.size} values, need at least 10")
    q025, q50, q975 = np.quantile(x, [0.025, 0.5, 0.975])
    try:
        lag1 = autocorr(x, 1)
        ess, order = ess_ar(x)
    except ConstantSeries:
        lag1 = ess = order = None
    return DiagnosticsReport(
        n_samples=int(x.size), mean=float(x.mean()), sd=float(x.std(ddof=1)),
        q025=float(q025), q50=float(q50), q975=float(q975),
        lag1_acf=lag1, ess=ess, ar_order=order,
    )


def _kernel_index(kind):
    return KERNEL_ORDER.index(KernelKind(kind))


def _dacf_task(args):
    n, p, kind, prior, rep, iters, burn_in, master_seed, rho, sparsity = args
    # data depend on (n, p, rep) only, so both kernels see the same datasets
    config = SimConfig(n, p, rho=rho, sparsity_frac=sparsity, seed=master_seed)
    data, _, _ = simulate(config, n, p, rep)
    if callable(prior):
        prior = prior(p)
    seed = derive_seed(master_seed, n, p, _kernel_index(kind), rep)
    out = run_chain(data, prior, kind, iters, burn_in, seed=seed)
    return autocorr(out.sigma2_samples, 1)


def dacf_grid(n_list, p_list, reps, iters, burn_in, prior, master_seed,
              rho=0.2, sparsity_frac=0.2, workers=1):
    """Mean lag-one ACF of sigma2 over ``reps`` simulated datasets per cell.

    ``prior`` is a prior object or a callable ``p -> prior`` (for priors with
    per-coordinate hyperparameters). ``p_list`` is either a list shared by all
    ``n`` or a callable ``n -> list``. Cells come back ordered by n, p, kernel
    (three-block first). Results are a pure function of the arguments.
    """
    if reps < 1 or iters < 1 or burn_in < 0:
        raise ValueError("reps and iters must be positive, burn_in non-negative")
    grid = [(n, p) for n in n_list for p in (p_list(n) if callable(p_list) else p_list)]
    tasks = [(n, p, kind, prior, rep, iters, burn_in, master_seed, rho, sparsity_frac)
             for n, p in grid for kind in KERNEL_ORDER for rep in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            acfs = list(pool.map(_dacf_task, tasks, chunksize=1))
    else:
        acfs = [_dacf_task(t) for t in tasks]
    cells = []
    for i, (n, p) in enumerate(grid):
        for k, kind in enumerate(KERNEL_ORDER):
            start = (i * len(KERNEL_ORDER) + k) * reps
            cells.append(DacfCell(n, p, kind, float(np.mean(acfs[start:start + reps])), reps))
    return cells
