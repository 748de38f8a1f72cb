import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats
from scipy.linalg import solve_toeplitz

from blockgibbs.diagnostics import (DacfCell, autocorr, dacf_grid, ess_ar, levinson_durbin,
                                    summarize)
from blockgibbs.errors import ConstantSeries, TooShort
from blockgibbs.kernels import KernelKind
from blockgibbs.model import Lasso
from blockgibbs.numerics import stream


def ar1(phi, n, seed):
    g = stream(seed)
    e = g.standard_normal(n)
    x = np.empty(n)
    x[0] = e[0] / math.sqrt(1 - phi * phi)
    for t in range(1, n):
        x[t] = phi * x[t - 1] + e[t]
    return x


# -- autocorr ------------------------------------------------------------------------


def test_autocorr_iid():
    assert abs(autocorr(stream(1).standard_normal(10_000), 1)) < 0.05


def test_autocorr_constant():
    with pytest.raises(ConstantSeries):
        autocorr(np.full(50, 3.0))


def test_autocorr_too_short():
    with pytest.raises(TooShort):
        autocorr(np.array([1.0, 2.0]), 1)


def test_autocorr_ar1():
    assert abs(autocorr(ar1(0.9, 100_000, 2), 1) - 0.9) < 0.02


def test_autocorr_biased_normalization():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    # centred (-1.5, -0.5, 0.5, 1.5): lag-1 products 0.75 - 0.25 + 0.75 over 5
    assert abs(autocorr(x, 1) - 1.25 / 5.0) < 1e-15
    assert abs(autocorr(x, 2) - (-0.75 - 0.75) / 5.0) < 1e-15


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=4, max_size=200), st.integers(1, 2))
def test_autocorr_bounded(values, lag):
    x = np.array(values)
    if np.ptp(x) == 0:
        return
    try:
        r = autocorr(x, lag)
    except ConstantSeries:
        return
    assert -1 - 1e-9 <= r <= 1 + 1e-9


# -- Levinson-Durbin / ESS -----------------------------------------------------------


def test_levinson_matches_toeplitz_solve():
    x = ar1(0.6, 5000, 3)
    x = x - x.mean()
    r = np.array([x[: x.size - k] @ x[k:] for k in range(9)]) / x.size
    coefs, variances = levinson_durbin(r, 8)
    for q in range(1, 9):
        phi = solve_toeplitz(r[:q], r[1:q + 1])
        np.testing.assert_allclose(coefs[q], phi, rtol=1e-10, atol=1e-12)
        assert abs(variances[q] - (r[0] - phi @ r[1:q + 1])) < 1e-12 * r[0]


def test_ess_white_noise():
    ess, order = ess_ar(stream(0).standard_normal(10_000))
    assert order == 0
    assert ess == 10_000.0


def test_ess_ar1():
    n = 100_000
    ess, order = ess_ar(ar1(0.5, n, 4))
    assert order >= 1
    assert abs(ess - n / 3.0) / (n / 3.0) < 0.10


def test_ess_too_short_and_constant():
    with pytest.raises(TooShort):
        ess_ar(np.arange(5.0))
    with pytest.raises(ConstantSeries):
        ess_ar(np.ones(100))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(10, 400), phi=st.floats(-0.95, 0.95), seed=st.integers(0, 2**31))
def test_ess_bounded_by_n(n, phi, seed):
    ess, order = ess_ar(ar1(phi, n, seed))
    assert 0 < ess <= n
    if order == 0:
        assert ess == n


# -- summarize ----------------------------------------------------------------------


def test_summarize_sequence():
    rep = summarize(np.arange(1.0, 101.0))
    assert rep.q50 == 50.5 and rep.mean == 50.5
    assert rep.n_samples == 100
    assert rep.q025 <= rep.q50 <= rep.q975
    assert rep.ess <= rep.n_samples


def test_summarize_normal_quantile():
    rep = summarize(stream(5).standard_normal(100_000))
    assert abs(rep.q025 - stats.norm.ppf(0.025)) < 0.03


def test_summarize_constant():
    rep = summarize(np.full(20, 2.5))
    assert rep.sd == 0.0 and rep.mean == 2.5
    assert rep.ess is None and rep.lag1_acf is None and rep.ar_order is None


def test_summarize_too_short():
    with pytest.raises(TooShort):
        summarize(np.arange(5.0))


def test_summarize_dict_fields():
    d = summarize(stream(6).standard_normal(50)).to_dict()
    assert set(d) == {"n_samples", "mean", "sd", "q025", "q50", "q975", "lag1_acf", "ess",
                      "ar_order"}


# -- DACF grid ----------------------------------------------------------------------


def test_dacf_grid_shape():
    cells = dacf_grid([5], [10], 2, 200, 20, Lasso(1.0), master_seed=3)
    assert len(cells) == 2
    assert [c.kernel for c in cells] == [KernelKind.THREE_BLOCK, KernelKind.TWO_BLOCK]
    assert all(isinstance(c, DacfCell) and math.isfinite(c.mean_lag1_acf) and c.n_reps == 2
               for c in cells)
    cells = dacf_grid([5, 6], [3, 4], 1, 100, 0, Lasso(1.0), master_seed=3)
    assert [(c.n, c.p) for c in cells] == [(5, 3)] * 2 + [(5, 4)] * 2 + [(6, 3)] * 2 + [(6, 4)] * 2


def test_dacf_grid_deterministic_and_parallel_safe():
    args = ([5, 15], [5, 15], 2, 150, 10, Lasso(1.0), 8)
    a = dacf_grid(*args)
    assert a == dacf_grid(*args)
    assert a == dacf_grid(*args, workers=2)
    assert a != dacf_grid(*args[:-1], 9)


def test_dacf_grid_callables():
    def prior(p):
        return Lasso(1.0 + p / 100.0)

    cells = dacf_grid([4, 5], lambda n: [2 * n], 1, 100, 0, prior, master_seed=1)
    assert [(c.n, c.p) for c in cells[::2]] == [(4, 8), (5, 10)]


@pytest.mark.slow
def test_dacf_two_block_below_three_block():
    three, two = dacf_grid([5], [50], 3, 3000, 300, Lasso(1.0), master_seed=12)
    assert two.mean_lag1_acf < three.mean_lag1_acf


def test_dacf_grid_invalid():
    with pytest.raises(ValueError):
        dacf_grid([5], [5], 0, 10, 0, Lasso(1.0), 0)
