import json
import math

import numpy as np
import pytest
from scipy import stats

from sphbm.errors import DomainError
from sphbm.rng import RngStream
from sphbm.suite import ManifestError, load_manifest, radial_cos_cdf, run_entry, run_manifest
from sphbm.validation import (
    DegenerateTestError,
    StatReport,
    chi_square_pmf,
    empirical_pmf,
    euler_maruyama_sphere,
    euler_maruyama_wf,
    iter_reports_jsonl,
    ks_one_sample,
    ks_two_sample,
    mean_decay_check,
    pool_tail,
    rejection_rate,
    total_variation,
    z_test_mean,
)
from sphbm.wright_fisher import wf_mean


def test_stat_report_pass_rules_and_json():
    r = StatReport("x", 0.1, 0.2, (10,), 0.05)
    assert r.passed
    assert not StatReport("x", 0.1, 0.01, (10,), 0.05).passed
    tv = StatReport("tv", 0.02, None, (10,), threshold=0.05)
    assert tv.passed and "< 0.05" in tv.line()
    doc = json.loads(tv.to_json())
    assert doc["passed"] is True and doc["p_value"] is None and doc["sizes"] == [10]
    assert iter_reports_jsonl([r, tv]).count("\n") == 2


def test_ks_one_sample_matches_scipy():
    x = stats.norm.rvs(size=500, random_state=1)
    ours = ks_one_sample(x, stats.norm.cdf)
    ref = stats.kstest(x, "norm", method="asymp")
    assert ours.statistic == pytest.approx(ref.statistic, abs=1e-15)
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-6)


def test_ks_one_sample_rejects_bad_cdf():
    with pytest.raises(DomainError):
        ks_one_sample([0.1, 0.2], lambda v: 2.0 * np.ones_like(v))
    with pytest.raises(DomainError):
        ks_one_sample([0.1, 0.2], lambda v: 1.0 - v)
    with pytest.raises(DomainError):
        ks_one_sample([], stats.norm.cdf)


def test_ks_two_sample_detects_shift():
    a = stats.norm.rvs(size=5000, random_state=2)
    b = stats.norm.rvs(loc=0.2, size=5000, random_state=3)
    assert not ks_two_sample(a, b).passed
    with pytest.raises(DomainError):
        ks_two_sample([], a)


def test_pool_tail():
    e, o = pool_tail(np.array([1.0, 2.0, 50.0, 40.0, 3.0, 1.0]), np.array([1, 3, 49, 41, 2, 2]))
    assert e.tolist() == [53.0, 44.0]
    assert o.tolist() == [53.0, 45.0]
    e, o = pool_tail(np.array([10.0, 2.0, 10.0]), np.array([9, 3, 10]))
    assert e.tolist() == [10.0, 12.0] and e.sum() == 22.0


def test_chi_square_against_scipy():
    pmf = np.array([0.2, 0.3, 0.5])
    counts = np.array([25, 28, 47])
    ours = chi_square_pmf(counts, pmf)
    ref = stats.chisquare(counts, 100 * pmf)
    assert ours.statistic == pytest.approx(ref.statistic)
    assert ours.p_value == pytest.approx(ref.pvalue)
    # callable pmf and folding of unobserved tail mass
    geo = lambda m: 0.5 ** (m + 1)  # noqa: E731
    rep = chi_square_pmf(np.array([500, 250, 125, 125]), geo)
    assert rep.statistic == pytest.approx(0.0, abs=1e-9)


def test_chi_square_degenerate():
    with pytest.raises(DegenerateTestError):
        chi_square_pmf(np.array([100]), np.array([1.0]))


def test_tv_and_empirical_pmf():
    assert total_variation([0.5, 0.5], [0.5, 0.25, 0.25]) == pytest.approx(0.25)
    assert np.allclose(empirical_pmf([0, 2, 2, 1], length=4), [0.25, 0.25, 0.5, 0.0])


def test_z_test_mean():
    rep = z_test_mean(np.ones(10), 1.0)
    assert rep.statistic == 0.0 and rep.passed
    assert not z_test_mean(np.ones(10), 2.0).passed


def test_em_sphere_stays_on_sphere_and_covers_remainder():
    z = np.array([0.0, 0.0, 1.0])
    pts = euler_maruyama_sphere(z, 0.0105, 0.001, RngStream(1), 100)
    assert pts.shape == (100, 3)
    assert np.allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-12)
    with pytest.raises(DomainError):
        euler_maruyama_sphere(z, 0.1, 0.2, RngStream(0))
    with pytest.raises(DomainError):
        euler_maruyama_sphere(z, 0.1, 0.0, RngStream(0))


def test_em_wf_clamps():
    w = euler_maruyama_wf(0.01, 1.0, 0.01, 0.1, 0.1, RngStream(2), 1000)
    assert np.all((w >= 0) & (w <= 1))
    assert isinstance(euler_maruyama_wf(0.5, 0.1, 0.01, 1.0, 1.0, RngStream(2)), float)
    with pytest.raises(DomainError):
        euler_maruyama_wf(1.5, 0.1, 0.01, 1.0, 1.0, RngStream(2))


def test_em_sphere_bias_shrinks_with_dt():
    z = np.array([0.0, 0.0, 1.0])
    cdf = radial_cos_cdf(3, 0.5)
    stats_ = [
        ks_one_sample(euler_maruyama_sphere(z, 0.5, dt, RngStream(3, i), 200_000) @ z, cdf).statistic
        for i, dt in enumerate([0.2, 0.05, 0.0125])
    ]
    assert stats_[0] > stats_[1] > stats_[2]


def test_em_wf_bias_shrinks_with_dt():
    target = wf_mean(1.0, 2.0, 0.3, 0.5)
    bias = [
        abs(euler_maruyama_wf(0.3, 0.5, dt, 1.0, 2.0, RngStream(4, i), 1_000_000).mean() - target)
        for i, dt in enumerate([0.2, 0.05, 0.0125])
    ]
    assert bias[0] > bias[1] > bias[2]


def test_mean_decay_check_detects_wrong_time():
    ok = mean_decay_check(3, 0.5, 50_000, RngStream(5))
    assert ok.passed
    bad = z_test_mean(np.full(10, 0.5) + np.random.default_rng(0).normal(0, 0.01, 10), math.exp(-1.0))
    assert not bad.passed


def test_rejection_rate_under_null_is_small():
    def test(rng):
        return ks_one_sample(rng.generator.random(200), lambda v: v)

    rate = rejection_rate(test, 100, RngStream(6), alpha=0.05)
    assert 0.0 <= rate <= 0.15


def test_manifest_roundtrip(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"tests": [
        {"test": "series-regime", "params": {"theta": 2.0, "t": 1.0}, "seed": 1, "N": 1},
        {"test": "mean-decay", "params": {"d": 3, "t": 1.0}, "seed": 2, "N": 20000, "alpha": 0.0027},
    ]}))
    entries = load_manifest(path)
    assert entries[0]["alpha"] == 0.01
    reports = run_manifest(entries)
    assert len(reports) == 2 and all(r.passed for r in reports)
    assert len(run_manifest(entries, only="mean-decay")) == 1


@pytest.mark.parametrize(
    "doc",
    [
        "not json",
        json.dumps([1, 2]),
        json.dumps({"tests": [{"test": "nope", "seed": 1, "N": 1}]}),
        json.dumps({"tests": [{"test": "mean-decay", "params": {}, "N": 1}]}),
        json.dumps({"tests": [{"test": "mean-decay", "seed": 1, "N": 0}]}),
        json.dumps({"tests": [{"test": "mean-decay", "seed": 1, "N": 5, "alpha": 2}]}),
        json.dumps({"tests": [{"test": "mean-decay", "params": [], "seed": 1, "N": 5}]}),
    ],
)
def test_manifest_errors(tmp_path, doc):
    path = tmp_path / "bad.json"
    path.write_text(doc)
    with pytest.raises(ManifestError):
        load_manifest(path)


def test_run_entry_missing_parameter():
    with pytest.raises(ManifestError):
        run_entry({"test": "mean-decay", "params": {"d": 3}, "seed": 1, "N": 10, "alpha": 0.01})


def test_degenerate_chi_square_falls_back_to_binomial():
    rep = run_entry({"test": "ainf-chi2", "params": {"theta": 5.0, "t": 5.0}, "seed": 1, "N": 10_000, "alpha": 0.01})[0]
    assert "binomial" in rep.name
