import io
import math

import mpmath
import numpy as np
import pytest
from scipy import stats
from scipy.linalg import expm

from sphbm import wright_fisher as wf
from sphbm.errors import ConvergenceError, DomainError, RegimeError
from sphbm.rng import RngStream
from sphbm.validation import chi_square_pmf, empirical_pmf, total_variation
from sphbm.wright_fisher import (
    DeathProcessLaw,
    WrightFisherLaw,
    death_pmf,
    death_pmf_table,
    death_tail_index,
    entrance_time_moments,
    gaussian_ainf_params,
    sample_ainf,
    sample_ainf_gaussian,
    sample_wf_components,
    sample_wf_increment,
    simulate_death_process,
    wf_mean,
    wf_mixture_cdf,
    write_pmf_csv,
)


def death_chain_oracle(theta, t, n=900):
    """Transient law of the death chain by a dense matrix exponential.

    Started at ``n`` and run for ``t`` minus the mean passage time from
    infinity to ``n``; the remaining error is second order in that passage
    time's spread, about ``n**-3``.
    """
    m = np.arange(n + 1, dtype=float)
    lam = 0.5 * m * (m + theta - 1.0)
    lam[0] = 0.0
    gen = np.diag(-lam) + np.diag(lam[1:], 1)
    mu, _ = entrance_time_moments(n, theta)
    return expm(gen * (t - mu))[:, n]


@pytest.mark.parametrize(
    "theta,t,atol",
    [(1.0, 0.05, 2e-5), (2.0, 0.05, 2e-5), (0.5, 0.1, 5e-6), (2.0, 0.5, 1e-7), (5.0, 1.0, 1e-8), (3.0, 5.0, 1e-10), (0.0, 0.3, 1e-6)],
)
def test_series_matches_matrix_exponential(theta, t, atol):
    q = death_pmf_table(DeathProcessLaw(theta, t))
    ref = death_chain_oracle(theta, t)
    k = min(q.size, ref.size)
    assert np.max(np.abs(q[:k] - ref[:k])) < atol
    assert abs(q.sum() - 1.0) < 1e-10


def test_theta_zero_never_absorbs():
    assert death_pmf(DeathProcessLaw(0.0, 2.0), 0) == 0.0


def test_long_time_absorption():
    q = death_pmf_table(DeathProcessLaw(2.0, 50.0))
    assert q[0] > 0.999


def test_single_mass_point_agrees_with_table():
    law = DeathProcessLaw(2.5, 0.3)
    q = death_pmf_table(law)
    for m in (0, 3, 7, 15):
        assert death_pmf(law, m) == pytest.approx(q[m], abs=1e-15)
    with pytest.raises(DomainError):
        death_pmf(law, -1)


def test_tail_index_bounds_the_mass():
    for theta, t in [(1.0, 0.05), (4.5, 1.0), (0.2, 3.0)]:
        m = death_tail_index(theta, t, 1e-12)
        q = death_pmf_table(DeathProcessLaw(theta, t), m_max=m + 200)
        assert q[m + 1 :].sum() <= 1e-12


def test_small_time_convergence_error_fails_fast():
    with pytest.raises(ConvergenceError):
        death_pmf_table(DeathProcessLaw(2.0, 0.001))


def test_sample_ainf_chi_square():
    law = DeathProcessLaw(3.0, 0.2)
    draws = sample_ainf(law, RngStream(11), 50_000)
    rep = chi_square_pmf(np.bincount(draws), death_pmf_table(law), 0.01)
    assert rep.passed, rep.line()


def test_sample_ainf_regime_floor():
    with pytest.raises(RegimeError):
        sample_ainf(DeathProcessLaw(2.0, 0.04), RngStream(0))
    # the floor is configurable
    assert sample_ainf(DeathProcessLaw(2.0, 0.04), RngStream(0), exact_floor=0.01) >= 0


def test_sample_ainf_scalar_and_determinism():
    law = DeathProcessLaw(2.0, 0.5)
    assert isinstance(sample_ainf(law, RngStream(3)), int)
    assert np.array_equal(sample_ainf(law, RngStream(3), 100), sample_ainf(law, RngStream(3), 100))


def test_gaussian_params_limits():
    mean, var = gaussian_ainf_params(1.0, 0.01)
    assert mean == pytest.approx(200.0)
    assert var == pytest.approx(2.0 / (3.0 * 0.01))
    # continuity across the series switch at small beta
    for theta in (1.39, 1.41, 0.59, 1.0 + 1e-7):
        mean, var = gaussian_ainf_params(theta, 0.05)
        beta = 0.5 * (theta - 1.0) * 0.05
        with mpmath.workdps(50):
            b = mpmath.mpf(beta)
            eta = b / mpmath.expm1(b)
            ref = 2 * eta / 0.05 * (eta + b) ** 2 * (1 + eta / (eta + b) - 2 * eta) / b**2
        assert mean == pytest.approx(2 * float(eta) / 0.05, rel=1e-13)
        assert var == pytest.approx(float(ref), rel=1e-11)


def test_gaussian_sampler_moments():
    law = DeathProcessLaw(3.0, 0.02)
    x = sample_ainf_gaussian(law, RngStream(4), 100_000)
    mean, var = gaussian_ainf_params(3.0, 0.02)
    assert abs(x.mean() - mean) < 5 * math.sqrt(var / x.size)
    assert x.var() == pytest.approx(var, rel=0.03)


def test_entrance_moments_closed_form():
    mu, var = entrance_time_moments(10, 1.0)
    j = np.arange(11, 2_000_000, dtype=float)
    assert mu == pytest.approx(np.sum(2.0 / j**2) + 2.0 / j[-1], rel=1e-9)
    assert var == pytest.approx(np.sum(4.0 / j**4), rel=1e-6)


def test_death_oracle_plain_chain_law():
    # from n = 3 with theta = 1 the first death has rate 4.5
    sim = simulate_death_process(3, 1.0, 0.4, RngStream(5), 100_000)
    assert np.mean(sim == 3) == pytest.approx(math.exp(-1.8), abs=0.005)
    assert sim.min() >= 0


def test_death_oracle_entrance_removes_bias():
    law = DeathProcessLaw(2.0, 0.1)
    q = death_pmf_table(law)
    plain = simulate_death_process(200, 2.0, 0.1, RngStream(6), 50_000)
    fixed = simulate_death_process(200, 2.0, 0.1, RngStream(6), 50_000, entrance=True)
    assert total_variation(q, empirical_pmf(fixed)) < total_variation(q, empirical_pmf(plain))
    assert total_variation(q, empirical_pmf(fixed)) < 0.02


def test_wf_domain():
    with pytest.raises(DomainError):
        WrightFisherLaw(-1.0, 1.0, 0.5, 1.0)
    with pytest.raises(DomainError):
        WrightFisherLaw(1.0, 1.0, 1.5, 1.0)
    with pytest.raises(DomainError):
        WrightFisherLaw(1.0, 1.0, 0.5, 0.0)
    with pytest.raises(DomainError):
        sample_wf_increment(WrightFisherLaw(0.0, 1.0, 0.0, 1.0), RngStream(0))
    with pytest.raises(RegimeError):
        sample_wf_increment(WrightFisherLaw(1.0, 1.0, 0.5, 0.01), RngStream(0))


@pytest.mark.parametrize("th1,th2,x,t", [(1.0, 1.0, 0.0, 0.5), (0.5, 2.0, 0.7, 0.2), (4.5, 4.5, 0.0, 1.0)])
def test_wf_sample_mean(th1, th2, x, t):
    y = sample_wf_increment(WrightFisherLaw(th1, th2, x, t), RngStream(7), 100_000)
    se = y.std() / math.sqrt(y.size)
    assert abs(y.mean() - wf_mean(th1, th2, x, t)) < 4 * se


def test_wf_components_structure():
    comp = sample_wf_components(WrightFisherLaw(1.0, 2.0, 0.3, 0.5), RngStream(8), 1000)
    assert np.all(comp.successes <= comp.lineages)
    assert np.all((comp.value > 0) & (comp.value < 1))


def test_wf_approx_path():
    y = sample_wf_increment(WrightFisherLaw(1.0, 1.0, 0.5, 0.01), RngStream(9), 100, approx=True)
    assert y.shape == (100,)


def test_mixture_cdf_long_time_is_stationary_beta():
    law = WrightFisherLaw(1.5, 2.5, 0.2, 40.0)
    ys = np.linspace(0, 1, 11)
    assert np.allclose(wf_mixture_cdf(law, ys), stats.beta(1.5, 2.5).cdf(ys), atol=1e-10)


def test_mixture_cdf_matches_samples():
    law = WrightFisherLaw(1.0, 0.5, 0.6, 0.3)
    y = sample_wf_increment(law, RngStream(10), 20_000)
    assert stats.kstest(y, lambda v: wf_mixture_cdf(law, v)).pvalue > 0.001


def test_mixture_cdf_edges():
    law = WrightFisherLaw(1.0, 1.0, 0.0, 0.5)
    assert wf_mixture_cdf(law, 0.0) == 0.0
    assert wf_mixture_cdf(law, 1.0) == 1.0
    assert wf_mixture_cdf(law, np.array([[0.2, 0.4]])).shape == (1, 2)


def test_pmf_csv_format():
    law = DeathProcessLaw(2.0, 1.0)
    buf = io.StringIO()
    text = write_pmf_csv(law, buf)
    assert buf.getvalue() == text
    lines = text.splitlines()
    assert lines[0] == "m,q"
    vals = [float(line.split(",")[1]) for line in lines[1:]]
    assert abs(sum(vals) - 1.0) < 1e-8
    assert [int(line.split(",")[0]) for line in lines[1:]] == list(range(len(vals)))
    assert text == write_pmf_csv(law)


def test_table_cache_is_reused():
    wf._table.cache_clear()
    law = DeathProcessLaw(2.0, 0.7)
    death_pmf_table(law)
    death_pmf_table(law)
    assert wf._table.cache_info().hits >= 1
