import math

import numpy as np
import pytest
from scipy import stats

from hirschlab.circle import CircleMeasure, GFunction, compute_g_measure
from hirschlab.diffusion import DiffusionConfig
from hirschlab.errors import FamilyMismatch, InvalidConfig
from hirschlab.foliation import MetricFamily
from hirschlab.measures import (HarmonicMeasure, bootstrap_w1_band, distinctness_test,
                                fiber_mass, fiber_mass_quadrature, ks_statistic,
                                stationarity_test, transverse_label, w1_grid, w1_to_grid)
from oracles import cdf_transport_w1, empirical_w1_fine

CONST = MetricFamily(GFunction.constant2())
SINE5 = MetricFamily(GFunction.sine(0.5))
SINE3 = MetricFamily(GFunction.sine(0.3))


def test_fiber_mass_examples():
    assert fiber_mass(CONST, 0.1) == pytest.approx(math.log(2), abs=1e-15)
    expect = 0.75 * math.log(4 / 3) + 0.25 * math.log(4)
    assert fiber_mass(SINE5, 0.25) == pytest.approx(expect, abs=1e-15)


@pytest.mark.parametrize("z", [0.0, 0.1, 0.25, 0.6, 0.9])
def test_fiber_mass_quadrature(z):
    assert abs(fiber_mass_quadrature(SINE5, z) - fiber_mass(SINE5, z)) <= 1e-8


def test_sampling_const2_lebesgue_chi_square():
    hm = HarmonicMeasure(CONST, CircleMeasure.uniform(10))
    st = hm.sample(100_000, seed=5)
    for x in (st.z, st.u, st.v / np.where(st.chart == 0, math.log(2), math.log(2))):
        counts = np.histogram(x, bins=64, range=(0, 1))[0]
        assert stats.chisquare(counts).pvalue > 0.01
    assert stats.binomtest(int(st.chart.sum()), st.z.size, 0.5).pvalue > 0.01


def test_v_marginal_uniform_not_exponential():
    hm = HarmonicMeasure(SINE5, compute_g_measure(SINE5.g, 12).measure)
    st = hm.sample(100_000, seed=6)
    L1, L2 = SINE5.lengths(st.z)
    r = st.v / np.where(st.chart == 0, L1, L2)
    assert stats.kstest(r, "uniform").pvalue > 0.01


def test_cylinder_choice_probability():
    hm = HarmonicMeasure(SINE5, CircleMeasure.uniform(12))
    st = hm.sample(100_000, seed=7)
    L1, L2 = SINE5.lengths(st.z)
    p2 = L2 * np.exp(-L2) / (L1 * np.exp(-L1) + L2 * np.exp(-L2))
    z = (st.chart.sum() - p2.sum()) / math.sqrt(np.sum(p2 * (1 - p2)))
    assert abs(z) < 3.5


def test_transverse_sample_matches_marginal():
    hm = HarmonicMeasure(SINE3, compute_g_measure(SINE3.g, 12).measure)
    st = hm.sample(100_000, seed=8)
    target = hm.marginal()
    w1 = w1_to_grid(st.z, target)
    assert w1 <= bootstrap_w1_band(target, 100_000, 0.01, seed=8, replicates=100)
    assert ks_statistic(st.z, target) <= stats.kstwo.ppf(0.99, 100_000)


def test_sample_point_matches_batch():
    hm = HarmonicMeasure(SINE3, CircleMeasure.uniform(8))
    st = hm.sample(10, seed=3)
    p = hm.sample_point(3, index=4)
    assert p.z == st.z[4] and int(p.p.chart) == st.chart[4] and p.p.v == st.v[4]


def test_label_marginal_pushforward():
    hm = HarmonicMeasure(SINE3, compute_g_measure(SINE3.g, 10).measure)
    st = hm.sample(200_000, seed=9)
    lab = hm.label_marginal()
    assert lab.level == 9
    assert ks_statistic(transverse_label(st.z), lab) <= stats.kstwo.ppf(0.99, 200_000)


def test_ks_statistic_matches_scipy():
    x = np.random.default_rng(0).random(5000) ** 1.1
    ours = ks_statistic(x, CircleMeasure.uniform(6))
    assert ours == pytest.approx(stats.kstest(x, "uniform").statistic, abs=1e-14)


def test_w1_to_grid_matches_fine_quadrature():
    mu = compute_g_measure(GFunction.sine(0.4), 6).measure
    x = np.random.default_rng(1).random(3000)
    nodes = mu.cdf_nodes()

    def cdf(t):
        j = np.minimum((t * mu.size).astype(int), mu.size - 1)
        return nodes[j] + (t * mu.size - j) * mu.weights[j]
    assert w1_to_grid(x, mu) == pytest.approx(empirical_w1_fine(x, cdf), abs=2e-6)


def test_w1_grid_matches_cdf_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a = CircleMeasure.normalized(8, rng.random(256) ** 3)
        b = CircleMeasure.normalized(8, rng.random(256))
        assert abs(w1_grid(a, b) - cdf_transport_w1(a.weights, b.weights)) <= 1e-12


def test_w1_grid_mixed_levels():
    a = CircleMeasure.normalized(4, np.arange(1, 17, dtype=float))
    b = CircleMeasure.uniform(7)
    fine = np.repeat(a.weights, 8) / 8
    assert abs(w1_grid(a, b) - cdf_transport_w1(fine, b.weights)) <= 1e-12


def test_distinctness():
    mu = CircleMeasure.uniform(10)
    assert distinctness_test(HarmonicMeasure(SINE3, mu), HarmonicMeasure(SINE3, mu)) == 0.0
    w = np.full(1024, 1.0)
    w[100] += 50.0
    nu = CircleMeasure.normalized(10, w)
    h1, h2 = HarmonicMeasure(SINE3, mu), HarmonicMeasure(SINE3, nu)
    d = distinctness_test(h1, h2)
    assert d > 0
    assert abs(d - cdf_transport_w1(h1.marginal().weights, h2.marginal().weights)) <= 1e-10
    with pytest.raises(FamilyMismatch):
        distinctness_test(h1, HarmonicMeasure(SINE5, mu))


def test_stationarity_input_checks():
    hm = HarmonicMeasure(CONST, CircleMeasure.uniform(8))
    with pytest.raises(InvalidConfig):
        stationarity_test(hm, DiffusionConfig(1e-3, 1.0, 1), 0)
    with pytest.raises(InvalidConfig):
        stationarity_test(hm, DiffusionConfig(1e-3, 1.0, 1), 10, alpha=1.5)


def test_stationarity_small_run_smoke():
    hm = HarmonicMeasure(CONST, CircleMeasure.uniform(10))
    rep = stationarity_test(hm, DiffusionConfig(2e-3, 0.5, 3), 4000, 0.01, replicates=50)
    assert rep.passed
    assert rep.event_counts["outward"] > 0
    doc = rep.to_json()
    assert set(doc) >= {"ks_statistic", "ks_threshold", "wasserstein1", "bootstrap_band", "verdict"}
