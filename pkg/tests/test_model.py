import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from blockgibbs.errors import ConstantColumn, DimensionMismatch, InvalidParameter
from blockgibbs.model import (ChainState, DesignData, ElasticNet, Lasso, SpikeSlab, StudentT,
                              spike_slab_weight, standardize, update_tau_elastic_net,
                              update_tau_lasso, update_tau_spike_slab, update_tau_student_t)
from blockgibbs.numerics import stream

# -- standardize / DesignData ----------------------------------------------------


def test_standardize_small_example():
    d = standardize(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 1.0, 1.0]))
    r = math.sqrt(1.5)
    np.testing.assert_allclose(d.X[:, 0], [-r, 0.0, r], rtol=1e-15, atol=1e-15)
    np.testing.assert_array_equal(d.Y_tilde, [0.0, 0.0, 0.0])
    assert abs(d.X[:, 0] @ d.X[:, 0] - 3.0) < 1e-12
    assert (d.n, d.p) == (3, 1)


def test_standardize_idempotent():
    raw = np.random.default_rng(0).standard_normal((20, 4))
    d1 = standardize(raw, np.arange(20.0))
    d2 = standardize(d1.X, d1.Y_tilde)
    np.testing.assert_allclose(d2.X, d1.X, rtol=0, atol=1e-12)
    np.testing.assert_allclose(d2.Y_tilde, d1.Y_tilde, rtol=0, atol=1e-12)


def test_standardize_constant_column():
    X = np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]])
    with pytest.raises(ConstantColumn) as info:
        standardize(X, np.zeros(3))
    assert info.value.column == 1


def test_standardize_errors():
    with pytest.raises(DimensionMismatch):
        standardize(np.ones((3, 2)), np.ones(4))
    with pytest.raises(InvalidParameter):
        standardize(np.ones((1, 2)), np.ones(1))


@settings(max_examples=40, deadline=None)
@given(n=st.integers(2, 30), p=st.integers(1, 8), seed=st.integers(0, 2**31),
       loc=st.floats(-1e3, 1e3), scale=st.floats(1e-3, 1e3))
def test_design_invariants(n, p, seed, loc, scale):
    g = np.random.default_rng(seed)
    d = standardize(loc + scale * g.standard_normal((n, p)), loc + g.standard_normal(n))
    assert np.all(np.abs(d.X.mean(axis=0)) < 1e-10)
    assert np.all(np.abs((d.X ** 2).sum(axis=0) - n) < 1e-8)
    assert abs(d.Y_tilde.sum()) <= 1e-10 * n * max(np.abs(d.Y_tilde).max(), 1e-300)
    np.testing.assert_allclose(d.XtX, d.X.T @ d.X, rtol=1e-12, atol=1e-12 * n)
    np.testing.assert_allclose(d.XtY, d.X.T @ d.Y_tilde, rtol=1e-12, atol=1e-12 * n)
    assert abs(d.YtY - d.Y_tilde @ d.Y_tilde) <= 1e-12 * max(d.YtY, 1e-300)


def test_design_read_only():
    d = DesignData.from_arrays(np.ones((3, 1)), np.arange(3.0))
    with pytest.raises(ValueError):
        d.X[0, 0] = 2.0


# -- lasso -------------------------------------------------------------------------


def test_lasso_positive_on_random_states():
    g = stream(1)
    for _ in range(10_000):
        beta = g.standard_normal(4) * 10.0 ** g.uniform(-8, 3)
        sigma2 = 10.0 ** g.uniform(-4, 4)
        tau = update_tau_lasso(beta, sigma2, 10.0 ** g.uniform(-2, 2), g)
        assert np.all(tau > 0) and np.all(np.isfinite(tau))


@pytest.mark.parametrize("beta,sigma2,lam", [(1.0, 1.0, 2.0), (0.5, 2.0, 1.0), (-3.0, 0.5, 0.3)])
def test_lasso_inverse_tau_mean(beta, sigma2, lam):
    g = stream(2)
    inv = 1.0 / update_tau_lasso(np.full(100_000, beta), sigma2, lam, g)
    target = math.sqrt(lam * lam * sigma2 / beta ** 2)
    assert abs(inv.mean() - target) / target < 0.02


def test_lasso_zero_beta_is_chi_square():
    tau = update_tau_lasso(np.zeros(100_000), 1.0, 1.0, stream(3))
    assert stats.kstest(tau, stats.chi2(1).cdf).statistic <= 0.01


def test_lasso_limit_is_continuous_at_zero():
    # the exact inverse-Gaussian branch at tiny beta lands on the same chi-square law
    tau = update_tau_lasso(np.full(100_000, 1e-9), 1.0, 1.0, stream(4))
    assert stats.kstest(tau, stats.chi2(1).cdf).statistic <= 0.01
    tau2 = update_tau_lasso(np.zeros(100_000), 2.0, 3.0, stream(5))
    assert stats.kstest(tau2 * 9.0, stats.chi2(1).cdf).statistic <= 0.01


def test_lasso_invalid():
    with pytest.raises(InvalidParameter):
        update_tau_lasso(np.ones(2), 1.0, 0.0, stream(0))
    with pytest.raises(InvalidParameter):
        update_tau_lasso(np.ones(2), -1.0, 1.0, stream(0))
    with pytest.raises(InvalidParameter):
        Lasso(-1.0)


# -- spike and slab ----------------------------------------------------------------


def test_spike_slab_weight_at_zero():
    assert abs(spike_slab_weight(0.0, 1.0, 0.5, 100.0, 0.01) - 1.0 / 11.0) < 1e-15


@pytest.mark.parametrize("beta,sigma2,zeta", [(0.0, 1.0, 1.0), (3.0, 0.2, 0.01), (-7.0, 5.0, 2.0)])
def test_spike_slab_weight_kappa_one(beta, sigma2, zeta):
    assert abs(spike_slab_weight(beta, sigma2, 0.3, 1.0, zeta) - 0.3) < 1e-15


def test_spike_slab_weight_formula():
    expected = 1.0 / (1.0 + 2.0 * math.exp(-0.75))
    assert abs(spike_slab_weight(1.0, 1.0, 0.5, 4.0, 0.5) - expected) < 1e-14
    assert abs(expected - 0.51421) < 1e-5


def test_spike_slab_weight_no_overflow():
    assert spike_slab_weight(1e200, 1e-10, 0.5, 100.0, 2e-5) == 1.0
    w = spike_slab_weight(np.array([0.0, 1.0]), 1.0, [0.5, 0.5], [100.0, 4.0], [0.01, 0.5])
    assert w.shape == (2,) and abs(w[0] - 1 / 11) < 1e-15


def test_spike_slab_weight_invalid():
    for args in [(0.0, 1.0, 0.0, 2.0, 1.0), (0.0, 1.0, 1.0, 2.0, 1.0),
                 (0.0, 1.0, 0.5, 0.0, 1.0), (0.0, 1.0, 0.5, 2.0, -1.0), (0.0, 0.0, 0.5, 2.0, 1.0)]:
        with pytest.raises(InvalidParameter):
            spike_slab_weight(*args)


def test_spike_slab_support_and_frequency():
    prior = SpikeSlab.build(100_000, 0.5, 100.0, 0.01)
    tau = update_tau_spike_slab(np.zeros(100_000), 1.0, prior, stream(6))
    assert prior.check_tau(tau)
    assert abs((tau == 1.0).mean() - 1.0 / 11.0) < 0.005


def test_spike_slab_near_one_weight():
    prior = SpikeSlab.build(10_000, 1.0 - 1e-12, 100.0, 0.01)
    tau = update_tau_spike_slab(np.zeros(10_000), 1.0, prior, stream(7))
    assert (tau == 1.0).mean() >= 0.999


def test_spike_slab_build_ranges():
    with pytest.raises(InvalidParameter):
        SpikeSlab.build(3, 0.5, 1.0, 0.01)
    with pytest.raises(InvalidParameter):
        SpikeSlab.build(3, 1.0, 10.0, 0.01)
    with pytest.raises(InvalidParameter):
        SpikeSlab.build(3, 0.5, 10.0, [0.1, 0.0, 0.1])
    assert SpikeSlab.build(3, 0.5, [2.0, 3.0, 4.0], 0.1).kappa.tolist() == [2.0, 3.0, 4.0]


# -- Student-t ---------------------------------------------------------------------


def test_student_t_positive_and_mean():
    prior = StudentT.build(100_000, 3.0, 2.0)
    tau = update_tau_student_t(np.zeros(100_000), 1.0, prior, stream(8))
    assert np.all(tau > 0)
    assert abs(tau.mean() - 1.0) < 0.03


def test_student_t_gamma_identity():
    prior = StudentT.build(100_000, 1.0, 1.0)
    beta = np.full(100_000, math.sqrt(3.0 * 2.0))
    tau = update_tau_student_t(beta, 2.0, prior, stream(9))
    assert abs((1.0 / tau).mean() - 0.5) / 0.5 < 0.03


def test_student_t_closed_form():
    nu, eta, b2 = 5.0, 0.7, 1.3
    prior = StudentT.build(100_000, nu, eta)
    tau = update_tau_student_t(np.full(100_000, math.sqrt(b2)), 1.0, prior, stream(10))
    oracle = stats.invgamma((nu + 1) / 2, scale=(eta + b2) / 2)
    assert stats.kstest(tau, oracle.cdf).statistic <= 0.01


def test_student_t_invalid():
    with pytest.raises(InvalidParameter):
        StudentT.build(2, 0.0, 1.0)
    with pytest.raises(InvalidParameter):
        StudentT.build(2, 1.0, -1.0)


# -- elastic net -------------------------------------------------------------------


def test_elastic_net_support():
    g = stream(11)
    for lam2 in (1e-3, 0.5, 10.0):
        for _ in range(200):
            beta = g.standard_normal(5) * 10.0 ** g.uniform(-6, 2)
            beta[0] = 0.0
            tau = update_tau_elastic_net(beta, 10.0 ** g.uniform(-3, 3), 2.0, lam2, g)
            assert np.all(tau > 0) and np.all(tau < 1.0 / lam2)
            assert ElasticNet(2.0, lam2).check_tau(tau)


def test_elastic_net_matches_lasso_as_lambda2_vanishes():
    beta = np.full(100_000, 0.7)
    en = 1.0 / update_tau_elastic_net(beta, 1.3, 4.0, 1e-12, stream(12))
    la = 1.0 / update_tau_lasso(beta, 1.3, 2.0, stream(13))
    assert stats.ks_2samp(en, la).statistic <= 0.01


def test_elastic_net_mean():
    inv = 1.0 / update_tau_elastic_net(np.ones(100_000), 1.0, 4.0, 0.5, stream(14)) - 0.5
    assert abs(inv.mean() - 2.0) / 2.0 < 0.02


def test_elastic_net_zero_beta_limit():
    lam1, lam2 = 2.0, 0.5
    v = 1.0 / update_tau_elastic_net(np.zeros(100_000), 1.0, lam1, lam2, stream(15)) - lam2
    # v = lam1 / Z with Z ~ chi2_1
    assert stats.kstest(lam1 / v, stats.chi2(1).cdf).statistic <= 0.01


def test_elastic_net_invalid():
    with pytest.raises(InvalidParameter):
        ElasticNet(1.0, 0.0)
    with pytest.raises(InvalidParameter):
        update_tau_elastic_net(np.ones(2), 1.0, -1.0, 1.0, stream(0))


# -- shared properties -------------------------------------------------------------

PRIORS = {
    "lasso": lambda p: Lasso(1.5),
    "spike-slab": lambda p: SpikeSlab.build(p, 0.5, 100.0, 0.01),
    "student-t": lambda p: StudentT.build(p, 3.0, 1.0),
    "elastic-net": lambda p: ElasticNet(2.0, 0.5),
}


@pytest.mark.parametrize("name", sorted(PRIORS))
def test_tau_invariants_hold(name):
    prior = PRIORS[name](6)
    g = stream(16)
    for _ in range(500):
        beta = g.standard_normal(6) * 10.0 ** g.uniform(-3, 2)
        tau = prior.draw_tau(beta, 10.0 ** g.uniform(-2, 2), g)
        assert tau.shape == (6,) and prior.check_tau(tau)
    assert prior.check_tau(prior.initial_tau(6))
    assert prior.to_dict()["prior"] == prior.tag


@pytest.mark.parametrize("name", sorted(PRIORS))
def test_tau_components_independent(name):
    prior = PRIORS[name](2)
    g = stream(17)
    # small enough that the spike-and-slab weights stay away from 0 and 1
    beta = np.array([0.15, -0.1])
    draws = np.array([prior.draw_tau(beta, 1.2, g) for _ in range(10_000)])
    r = np.corrcoef(draws[:, 0], draws[:, 1])[0, 1]
    assert abs(r) <= 3.0 / math.sqrt(10_000)


def test_chain_state_copy_is_deep():
    s = ChainState(np.ones(2), 1.0, np.ones(2))
    c = s.copy()
    c.beta[0] = 5.0
    assert s.beta[0] == 1.0
