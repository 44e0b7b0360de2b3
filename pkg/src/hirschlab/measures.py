"""Candidate harmonic measures m = phi vol(ds^2_z) (x) mu and their tests.

On cylinder C_i the density phi * sqrt(det g) = exp(-v) exp(v - L_i) is the
constant exp(-L_i), so the fiber over z has mass
M(z) = L1 exp(-L1) + L2 exp(-L2) and, given z and the cylinder, (u, v) is
uniform on [0, 1) x [0, L_i]. Sampling is exact up to the dyadic
resolution of mu (M is evaluated at arc midpoints).

The walkers live on the double cover, where z and z + 1/2 label the same
fiber. Stationarity is therefore judged on s = 2z mod 1, which does not
depend on the representative.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import kstwo

from .circle import CircleMeasure
from .diffusion import DiffusionConfig, EnsembleState, run_ensemble
from .errors import FamilyMismatch, InvalidConfig
from .foliation import FoliatedPoint, MetricFamily, pants_shape_at
from .pants import Chart, ChartPoint, phi_mass_quadrature
from .rng import STREAM_BOOTSTRAP, STREAM_SAMPLE, uniforms4_np


def fiber_mass(fam: MetricFamily, z):
    """L1 exp(-L1) + L2 exp(-L2) over z (accepts arrays)."""
    L1, L2 = fam.lengths(z)
    return L1 * np.exp(-L1) + L2 * np.exp(-L2)


def fiber_mass_quadrature(fam: MetricFamily, z: float, n: int = 256) -> float:
    return phi_mass_quadrature(pants_shape_at(fam, z), n)


@dataclass(frozen=True, eq=False)
class HarmonicMeasure:
    fam: MetricFamily
    mu: CircleMeasure
    arc_mass: np.ndarray = field(init=False, repr=False)   # M(mid_j) mu_j
    Z: float = field(init=False)

    def __post_init__(self):
        w = fiber_mass(self.fam, self.mu.midpoints()) * self.mu.weights
        Z = float(w.sum())
        if not Z > 0:
            raise InvalidConfig("normalisation constant must be positive")
        object.__setattr__(self, "arc_mass", w)
        object.__setattr__(self, "Z", Z)

    def marginal(self) -> CircleMeasure:
        """Transverse marginal M mu / Z on the grid of mu."""
        return CircleMeasure.normalized(self.mu.level, self.arc_mass)

    def label_marginal(self) -> CircleMeasure:
        """Law of s = 2z mod 1 under the marginal (one level coarser)."""
        w = self.marginal().weights
        half = w.size // 2
        return CircleMeasure.normalized(self.mu.level - 1, w[:half] + w[half:])

    def sample(self, n: int, seed: int, offset: int = 0) -> EnsembleState:
        """``n`` independent points; point i uses sample counter offset + i."""
        paths = offset + np.arange(n, dtype=np.uint64)
        a0, a1, a2, a3 = uniforms4_np(seed, STREAM_SAMPLE, paths, 0)
        b0 = uniforms4_np(seed, STREAM_SAMPLE, paths, 1)[0]
        cdf = np.cumsum(self.arc_mass)
        cdf /= cdf[-1]
        j = np.minimum(np.searchsorted(cdf, a0, side="right"), self.mu.size - 1)
        z = (j + a1) / self.mu.size
        L1, L2 = self.fam.lengths(z)
        m1 = L1 * np.exp(-L1)
        second = a2 * (m1 + L2 * np.exp(-L2)) >= m1
        chart = second.astype(np.int64)
        v = b0 * np.where(second, L2, L1)
        return EnsembleState.from_arrays(z, chart, a3, v)

    def sample_point(self, seed: int, index: int = 0) -> FoliatedPoint:
        st = self.sample(1, seed, index)
        return FoliatedPoint(float(st.z[0]), ChartPoint(Chart(int(st.chart[0])),
                                                        float(st.u[0]), float(st.v[0])))


# ---------------------------------------------------------------------------
# one-dimensional distances
# ---------------------------------------------------------------------------

def _abs_linear_integral(h, d0, d1):
    """sum_k int |f| over intervals of width h[k] where f runs linearly d0[k] -> d1[k]."""
    same = d0 * d1 >= 0
    denom = np.abs(d0) + np.abs(d1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cross = np.where(denom > 0, (d0 * d0 + d1 * d1) / (2.0 * denom), 0.0)
    return float(np.sum(h * np.where(same, 0.5 * np.abs(d0 + d1), cross)))


def _grid_cdf(mu: CircleMeasure, s):
    """CDF of the piecewise-uniform measure mu at points s in [0, 1]."""
    nodes = mu.cdf_nodes()
    x = np.asarray(s) * mu.size
    j = np.clip(np.floor(x).astype(np.int64), 0, mu.size - 1)
    return nodes[j] + (x - j) * mu.weights[j]


def ks_statistic(samples, mu: CircleMeasure) -> float:
    """One-sample Kolmogorov-Smirnov distance to the piecewise-uniform law mu."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    F = _grid_cdf(mu, s)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def w1_to_grid(samples, mu: CircleMeasure) -> float:
    """W1 on [0, 1] between an empirical law and mu: int |F_n - F|, exact."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    grid = np.arange(mu.size + 1) / mu.size
    x = np.union1d(grid, s)
    Fn = np.searchsorted(s, x, side="right") / n
    F = _grid_cdf(mu, x)
    # F_n is constant on [x_k, x_{k+1}); integrate |F - F_n(x_k)| piecewise.
    return _abs_linear_integral(np.diff(x), F[:-1] - Fn[:-1], F[1:] - Fn[:-1])


def _refine(mu: CircleMeasure, level: int) -> np.ndarray:
    return np.repeat(mu.weights, 2 ** (level - mu.level)) / 2 ** (level - mu.level)


def w1_grid(mu: CircleMeasure, nu: CircleMeasure) -> float:
    """W1 on [0, 1] between two piecewise-uniform laws via quantile functions."""
    level = max(mu.level, nu.level)
    p_all = []
    for m in (mu, nu):
        cum = np.concatenate(([0.0], np.cumsum(_refine(m, level))))
        cum[-1] = 1.0
        p_all.append(cum)
    p = np.union1d(p_all[0], p_all[1])
    x = np.arange(2 ** level + 1) / 2 ** level
    d = _quantile(p_all[0], x, p) - _quantile(p_all[1], x, p)
    return _abs_linear_integral(np.diff(p), d[:-1], d[1:])


def _quantile(cum, x, p):
    """Quantile function of a piecewise-uniform law with CDF values ``cum`` at ``x``."""
    # drop zero-mass arcs so the CDF is strictly increasing where interpolated
    keep = np.concatenate(([True], np.diff(cum) > 0))
    return np.interp(p, cum[keep], x[keep])


# ---------------------------------------------------------------------------
# stationarity and distinctness
# ---------------------------------------------------------------------------

@dataclass
class StationarityReport:
    n_paths: int
    t_end: float
    alpha: float
    ks_statistic: float
    ks_threshold: float
    wasserstein1: float
    bootstrap_band: float
    verdict: str
    v_ks_statistic: float = float("nan")
    event_counts: dict = field(default_factory=dict)

    @property
    def passed(self):
        return self.verdict == "pass"

    def to_json(self):
        return {"n_paths": self.n_paths, "t_end": self.t_end, "alpha": self.alpha,
                "ks_statistic": self.ks_statistic, "ks_threshold": self.ks_threshold,
                "wasserstein1": self.wasserstein1, "bootstrap_band": self.bootstrap_band,
                "verdict": self.verdict, "v_ks_statistic": self.v_ks_statistic,
                "event_counts": self.event_counts}


def bootstrap_w1_band(mu: CircleMeasure, n: int, alpha: float, seed: int,
                      replicates: int = 200) -> float:
    """(1 - alpha) quantile of W1(empirical_n, mu) for samples drawn from mu."""
    cum = mu.cdf_nodes()
    x = np.arange(mu.size + 1) / mu.size
    stats = np.empty(replicates)
    for r in range(replicates):
        p = uniforms4_np(seed, STREAM_BOOTSTRAP, np.arange(n, dtype=np.uint64), r)[0]
        stats[r] = w1_to_grid(_quantile(cum, x, p), mu)
    return float(np.quantile(stats, 1.0 - alpha))


def transverse_label(z):
    """Representative-free transverse coordinate s = 2z mod 1."""
    return np.mod(2.0 * np.asarray(z), 1.0)


def stationarity_test(hm: HarmonicMeasure, cfg: DiffusionConfig, n_paths: int,
                      alpha: float = 0.01, threads: int | None = None,
                      replicates: int = 200) -> StationarityReport:
    """Sample from hm, evolve to cfg.t_end, and compare the law of s = 2z mod 1
    with its value under hm (one-sample KS and W1 against a parametric
    bootstrap band)."""
    if n_paths < 1:
        raise InvalidConfig("n_paths must be positive")
    if not 0 < alpha < 1:
        raise InvalidConfig("alpha must lie in (0, 1)")
    start = hm.sample(n_paths, cfg.seed)
    res = run_ensemble(hm.fam, start, cfg, threads=threads)
    target = hm.label_marginal()
    s = transverse_label(res.state.z)
    ks = ks_statistic(s, target)
    ks_thr = float(kstwo.ppf(1.0 - alpha, n_paths))
    w1 = w1_to_grid(s, target)
    band = bootstrap_w1_band(target, n_paths, alpha, cfg.seed, replicates)
    # secondary statistic: v / L_c should be uniform on each cylinder
    L1, L2 = hm.fam.lengths(res.state.z)
    r = res.state.v / np.where(res.state.chart == 0, L1, L2)
    v_ks = ks_statistic(np.clip(r, 0.0, 1.0), CircleMeasure.uniform(1))
    verdict = "pass" if (ks <= ks_thr and w1 <= band) else "fail"
    return StationarityReport(n_paths, cfg.t_end, alpha, ks, ks_thr, w1, band, verdict,
                              v_ks, res.summary())


def distinctness_test(hm1: HarmonicMeasure, hm2: HarmonicMeasure) -> float:
    """W1 between the transverse marginals M mu_i / Z_i of two candidates."""
    if hm1.fam != hm2.fam:
        raise FamilyMismatch(f"families differ: {hm1.fam.spec} vs {hm2.fam.spec}")
    return w1_grid(hm1.marginal(), hm2.marginal())
