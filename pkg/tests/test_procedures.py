import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrddtest import statdist
from mrddtest.errors import ConfigError, DegenerateSample, DegenerateVariance
from mrddtest.marginals import Dataset, MarginalStat, marginal_stat, marginal_stats
from mrddtest.montecarlo import generate, model1, model3, rep_stream
from mrddtest.procedures import (
    bct_test,
    distance_test,
    mt_test,
    mtmax_test,
    run_tests,
    signed_distance,
    signed_distances,
)


def zstats(*zs, sigma=0.7):
    return [MarginalStat.from_z(z, sigma, j) for j, z in enumerate(zs)]


# -- MT --------------------------------------------------------------------

def test_mt_zero():
    res = mt_test(zstats(0.0, 0.0), 0.05)
    assert res.statistic == 0.0 and res.p_value == 1.0 and not res.reject and res.df == 2


def test_mt_boundary_case():
    res = mt_test(zstats(1.959963985, 0.0), 0.05)
    assert res.statistic == pytest.approx(3.841459, abs=1e-6)
    assert res.p_value == pytest.approx(math.exp(-3.841458820 / 2), abs=1e-9)
    assert res.p_value == pytest.approx(0.1465, abs=1e-4)
    assert not res.reject


def test_mt_rejects():
    res = mt_test(zstats(2.0, 2.0), 0.05)
    assert res.statistic == pytest.approx(8.0)
    assert res.critical_value == pytest.approx(5.991464547, abs=1e-8)
    assert res.reject


def test_nonpositive_variance_rejected():
    bad = MarginalStat(0, 0.1, 0.0, 10, 5, 5, 0.2, 0.2, 0.1, 0.0, 0.1)
    for fn in (mt_test, mtmax_test, bct_test):
        with pytest.raises(DegenerateVariance):
            fn([bad], 0.05)


@pytest.mark.parametrize("alpha", [0.0, 1.0, 1.5, -0.1])
def test_alpha_validation(alpha):
    with pytest.raises(ConfigError):
        mt_test(zstats(1.0), alpha)


@given(st.lists(st.floats(-6, 6), min_size=1, max_size=8), st.floats(0.001, 0.5))
def test_p_value_consistency(zs, alpha):
    mt = mt_test(zstats(*zs), alpha)
    assert mt.p_value == pytest.approx(1 - statdist.chi2_cdf(mt.statistic, len(zs)), abs=1e-9)
    assert mt.reject == (mt.statistic > mt.critical_value)
    mx = mtmax_test(zstats(*zs), alpha)
    assert mx.p_value == pytest.approx(1 - (2 * statdist.normal_cdf(mx.statistic) - 1) ** len(zs), abs=1e-9)
    assert mx.reject == (mx.statistic > mx.critical_value)


@given(st.lists(st.floats(-6, 6), min_size=2, max_size=8), st.randoms())
def test_relabeling_invariance(zs, rnd):
    perm = list(zs)
    rnd.shuffle(perm)
    assert mt_test(zstats(*zs)).statistic == pytest.approx(mt_test(zstats(*perm)).statistic, rel=1e-12)
    assert mtmax_test(zstats(*zs)).reject == mtmax_test(zstats(*perm)).reject
    assert bct_test(zstats(*zs)).reject == bct_test(zstats(*perm)).reject


@given(st.floats(-8, 8))
def test_d1_mt_equals_two_sided_z(z):
    mt = mt_test(zstats(z))
    assert abs(mt.p_value - 2 * statdist.normal_sf(abs(z))) <= 1e-10


# -- MTMAX -----------------------------------------------------------------

def test_mtmax_examples():
    res = mtmax_test(zstats(0.0, 0.0, 0.0))
    assert res.statistic == 0.0 and res.p_value == 1.0
    res = mtmax_test(zstats(1.959963985, sigma=1.0), 0.05)
    assert res.p_value == pytest.approx(0.05, abs=1e-9)
    # exactly at the critical value the strict rule does not reject
    crit = statdist.normal_quantile(0.975)
    res = mtmax_test(zstats(crit, sigma=1.0), 0.05)
    assert res.statistic == res.critical_value and not res.reject
    res = mtmax_test(zstats(2.5, -0.3), 0.05)
    assert res.critical_value == pytest.approx(2.2364766, abs=1e-6)
    assert res.reject


# -- BCT -------------------------------------------------------------------

def test_bct_examples():
    res = bct_test(zstats(2.5, 0.1), 0.05)
    assert res.critical_value == pytest.approx(2.241403, abs=1e-6)
    assert res.statistic == 2.5 and res.reject
    assert res.p_value == pytest.approx(min(1.0, 2 * 2 * statdist.normal_sf(2.5)))
    for alpha in (0.01, 0.5, 0.99):
        assert not bct_test(zstats(0.0, 0.0, 0.0), alpha).reject


@given(st.floats(-6, 6), st.floats(0.001, 0.5))
def test_bct_d1_is_z_test(z, alpha):
    res = bct_test(zstats(z), alpha)
    assert res.reject == (abs(z) > statdist.normal_quantile(1 - alpha / 2))


@given(st.floats(-6, 6), st.floats(0.001, 0.5))
def test_d1_methods_agree(z, alpha):
    crit = statdist.normal_quantile(1 - alpha / 2)
    if abs(abs(z) - crit) < 1e-7:  # floating tie at the critical value
        return
    decisions = {fn(zstats(z), alpha).reject for fn in (mt_test, mtmax_test, bct_test)}
    assert len(decisions) == 1


# -- distance --------------------------------------------------------------

def test_signed_distance_examples():
    assert signed_distance([1.0, 2.0]) == 1.0
    assert signed_distance([-3.0, -4.0]) == -5.0
    assert signed_distance([-3.0, 4.0]) == -3.0
    assert signed_distance([0.0, 3.0]) == 0.0


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=6))
def test_signed_distance_sign(row):
    dist = signed_distance(row)
    if all(v >= 0 for v in row):
        assert dist >= 0
    else:
        assert dist <= 0 and abs(dist) == pytest.approx(
            math.sqrt(sum(min(v, 0.0) ** 2 for v in row)), rel=1e-12)


def test_signed_distance_d1_is_identity():
    z = np.random.default_rng(0).normal(size=(100, 1))
    np.testing.assert_array_equal(signed_distances(z), z[:, 0])


def test_distance_test_d1_matches_single_variable():
    z = np.random.default_rng(1).uniform(-1, 1, (2000, 1))
    ds = Dataset(z, centered=True)
    dt = distance_test(ds, 0.05)
    single = marginal_stat(ds, 0)
    assert dt.statistic == pytest.approx(abs(single.z), rel=1e-12)
    assert dt.method == "DT" and dt.per_variable == () and dt.df == 1


def test_sdt_scale_invariance_dt_not_required():
    ds = generate(model1(2), 2000, rep_stream(3, 0))
    scaled = Dataset(ds.data * np.array([1000.0, 1.0]), centered=True)
    sdt_a, sdt_b = distance_test(ds, 0.05, True), distance_test(scaled, 0.05, True)
    assert sdt_b.statistic == pytest.approx(sdt_a.statistic, rel=1e-9)
    assert sdt_a.reject == sdt_b.reject
    # DT on rescaled data is a different test; just check it runs
    assert distance_test(scaled, 0.05, False).method == "DT"


def test_standardized_distances_identical_after_rescaling():
    ds = generate(model1(3), 500, rep_stream(4, 0))
    s = np.array([1000.0, 0.01, 3.0])
    sd1 = ds.data / np.std(ds.data, axis=0, ddof=1)
    scaled = ds.data * s
    sd2 = scaled / np.std(scaled, axis=0, ddof=1)
    np.testing.assert_allclose(signed_distances(sd1), signed_distances(sd2), rtol=1e-9, atol=1e-12)


def test_sdt_zero_sd_column():
    data = np.column_stack([np.random.default_rng(0).uniform(-1, 1, 200), np.ones(200)])
    with pytest.raises(DegenerateSample):
        distance_test(Dataset(data, centered=True), 0.05, True)


def test_mt_scale_invariance_auto_bandwidth():
    ds = generate(model3(0.4), 2000, rep_stream(9, 0))
    base = mt_test(marginal_stats(ds)).statistic
    scaled = Dataset(ds.data * np.array([1000.0, 0.25]), centered=True)
    assert mt_test(marginal_stats(scaled)).statistic == pytest.approx(base, rel=1e-8)


def test_run_tests_all_methods():
    ds = generate(model1(2), 2000, rep_stream(10, 0))
    out = run_tests(ds)
    assert list(out) == ["MT", "MTMAX", "BCT", "DT", "SDT"]
    assert out["MT"].per_variable == out["BCT"].per_variable
    with pytest.raises(ConfigError):
        run_tests(ds, ["KS"])


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.floats(1e-4, 0.999))
def test_mtmax_not_above_bonferroni(d, alpha):
    assert (statdist.max_abs_normal_quantile(1 - alpha, d)
            <= statdist.normal_quantile(1 - alpha / (2 * d)) + 1e-9)
