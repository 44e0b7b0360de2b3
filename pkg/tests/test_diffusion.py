import math

import numpy as np
import pytest

from hirschlab.circle import GFunction
from hirschlab.diffusion import (DiffusionConfig, EnsembleState, first_exit,
                                 from_halfplane, halfplane_coords, run_ensemble, simulate_path,
                                 step, step_many)
from hirschlab.errors import InvalidConfig, MaxEventsExceeded, StepUnderflow
from hirschlab.foliation import INWARD, OUTWARD, FoliatedPoint, MetricFamily
from hirschlab.pants import Boundary, Chart, ChartPoint, PantsShape
from hirschlab.rng import STREAM_WALK, normals2_uniforms2_np

LOG2 = PantsShape(math.log(2), math.log(2))
CONST = MetricFamily(GFunction.constant2())
SINE = MetricFamily(GFunction.sine(0.3))


def test_config_validation():
    with pytest.raises(InvalidConfig):
        DiffusionConfig(0.02, 1.0, 1)
    with pytest.raises(InvalidConfig):
        DiffusionConfig(1e-3, 1.0, 1, cone_guard=0.0)
    with pytest.raises(InvalidConfig):
        DiffusionConfig(1e-3, 1.0, -1)


def test_halfplane_coords():
    s = PantsShape(math.log(3), math.log(1.5))
    assert halfplane_coords(s, ChartPoint.cyl(1, 0.2, s.L1)) == (0.2, 1.0)
    assert halfplane_coords(s, ChartPoint.cyl(2, 0.2, 0.0))[1] == pytest.approx(1.5)
    p = ChartPoint.cyl(2, 0.7, 0.123)
    u, y = halfplane_coords(s, p)
    back = from_halfplane(s, Chart.CYL2, u, y)
    assert back.u == p.u and back.v == pytest.approx(p.v, abs=1e-15)


def test_step_dt_zero():
    p = ChartPoint.cyl(1, 0.4, 0.3)
    assert step(LOG2, p, 0.0, (1.0, -1.0)) == p


def test_step_rejection_and_underflow():
    p = ChartPoint.cyl(1, 0.4, 0.3)
    q = step(LOG2, p, 1e-2, (0.0, -50.0))   # 1 + sqrt(0.02) * (-50) < 0: halved until valid
    assert q.v > p.v
    with pytest.raises(StepUnderflow):
        step(LOG2, p, 1e-2, (0.0, -1e12))


def test_step_second_moment_at_y_equal_one():
    n, dt = 1_000_000, 1e-4
    n1, n2, _, _ = normals2_uniforms2_np(11, STREAM_WALK, np.arange(n, dtype=np.uint64), 0)
    u0 = np.full(n, 0.5)
    u1, _ = step_many(LOG2, Chart.CYL1, u0, np.full(n, LOG2.L1), dt, n1, n2)
    d2 = (u1 - u0) ** 2
    se = d2.std() / math.sqrt(n)
    assert abs(d2.mean() - 2e-4) <= 3 * se


def test_t_end_zero():
    start = FoliatedPoint(0.2, ChartPoint.cyl(1, 0.5, 0.3))
    tr = simulate_path(CONST, start, DiffusionConfig(1e-3, 0.0, 1))
    assert tr.samples == [(0.0, start)] and tr.events == []


def test_event_log_transverse_rules():
    start = FoliatedPoint(0.3, ChartPoint.cyl(1, 0.5, math.log(2) / 2))
    tr = simulate_path(SINE, start, DiffusionConfig(1e-3, 3.0, 4))
    hol = tr.holonomy_events
    assert len(hol) > 10
    for e in hol:
        if e.boundary == Boundary.D3:
            assert e.direction == OUTWARD and e.z_after == (2 * e.z_before) % 1.0
        elif e.boundary == Boundary.D1:
            assert e.direction == INWARD and e.z_after == e.z_before / 2
        else:
            assert e.z_after == ((e.z_before + 0.5) % 1.0) / 2
    for a, b in zip(hol, hol[1:]):
        assert b.z_before == a.z_after


def test_z_changes_only_at_holonomy_events():
    tr = simulate_path(SINE, FoliatedPoint(0.7, ChartPoint.cyl(2, 0.5, 0.2)),
                       DiffusionConfig(1e-3, 2.0, 8))
    times = [t for t, _ in tr.samples]
    assert all(b > a for a, b in zip(times, times[1:]))
    hol_times = {e.t for e in tr.holonomy_events}
    for (t0, a), (t1, b) in zip(tr.samples, tr.samples[1:]):
        if a.z != b.z:
            assert t1 in hol_times


def test_trajectory_csv():
    tr = simulate_path(CONST, FoliatedPoint(0.0, ChartPoint.cyl(1, 0.5, 0.3)),
                       DiffusionConfig(1e-2, 0.05, 1))
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,z_theta,chart,u,v,event_flag"
    assert len(lines) == 1 + len(tr.samples) == 7


def test_simulate_path_deterministic():
    start = FoliatedPoint(0.1, ChartPoint.cyl(1, 0.5, 0.3))
    cfg = DiffusionConfig(1e-3, 1.0, 99)
    a, b = simulate_path(SINE, start, cfg), simulate_path(SINE, start, cfg)
    assert a.to_csv() == b.to_csv()
    assert simulate_path(SINE, start, cfg, path=1).to_csv() != a.to_csv()


def test_max_events():
    with pytest.raises(MaxEventsExceeded):
        simulate_path(SINE, FoliatedPoint(0.1, ChartPoint.cyl(1, 0.5, 0.3)),
                      DiffusionConfig(1e-3, 2.0, 1, max_events=2))


def _ensemble(n, seed=3):
    rng = np.random.default_rng(seed)
    return EnsembleState.from_arrays(rng.random(n), rng.integers(0, 2, n),
                                     rng.random(n), rng.random(n) * 0.28)


def test_ensemble_matches_single_paths():
    st = _ensemble(50)
    cfg = DiffusionConfig(1e-3, 0.5, 21)
    res = run_ensemble(SINE, st, cfg)
    for i in (0, 17, 49):
        one = run_ensemble(SINE, EnsembleState.from_arrays(st.z[i:i + 1], st.chart[i:i + 1],
                                                           st.u[i:i + 1], st.v[i:i + 1]),
                           cfg, path_offset=i)
        assert one.state.z[0] == res.state.z[i] and one.state.u[0] == res.state.u[i]
        tr = simulate_path(SINE, FoliatedPoint(st.z[i], ChartPoint(Chart(int(st.chart[i])), st.u[i], st.v[i])),
                           cfg, path=i)
        final = tr.samples[-1][1]
        assert final.z == res.state.z[i] and final.p.v == res.state.v[i]


def test_backends_agree(monkeypatch):
    st = _ensemble(300)
    cfg = DiffusionConfig(1e-3, 0.5, 5)
    monkeypatch.setenv("HIRSCHLAB_BACKEND", "numba")
    a = run_ensemble(SINE, st, cfg)
    monkeypatch.setenv("HIRSCHLAB_BACKEND", "numpy")
    b = run_ensemble(SINE, st, cfg)
    assert a.backend == "numba" and b.backend == "numpy"
    close = (np.abs(a.state.z - b.state.z) < 1e-9) & (np.abs(a.state.v - b.state.v) < 1e-9)
    assert close.mean() >= 0.99
    assert np.array_equal(a.counts[close], b.counts[close])


def test_first_exit_backends_agree(monkeypatch):
    start = ChartPoint.cyl(1, 0.0, LOG2.L1 / 2)
    out = {}
    for name in ("numba", "numpy"):
        monkeypatch.setenv("HIRSCHLAB_BACKEND", name)
        out[name] = first_exit(LOG2, start, 2000, 1e-3, 4)
    same = out["numba"].code == out["numpy"].code
    assert same.mean() >= 0.99
    np.testing.assert_allclose(out["numba"].phi_exit[same], out["numpy"].phi_exit[same], atol=1e-9)


def test_exit_symmetry():
    res = first_exit(LOG2, ChartPoint.cyl(1, 0.0, LOG2.L1 / 2), 100_000, 1e-3, 17,
                     alternate_charts=True)
    h = res.histogram()
    n1, n2 = h["D1"], h["D2"]
    # difference of two multinomial counts: var = n (p1 + p2) - n (p1 - p2)^2
    sd = math.sqrt(n1 + n2 - (n1 - n2) ** 2 / res.n)
    assert abs(n1 - n2) <= 3 * sd


def test_optional_stopping_small_run():
    s = PantsShape(math.log(3), math.log(1.5))
    start = ChartPoint.cyl(2, 0.3, 0.2)
    res = first_exit(s, start, 20_000, 1e-3, 8)
    assert abs(res.mean_phi() - math.exp(-start.v)) <= 3 * res.stderr()
    bias, bias_se = res.bias()
    assert abs(bias) < 5e-3


def test_bridge_reduces_bias():
    start = ChartPoint.cyl(1, 0.0, LOG2.L1 / 2)
    plain = first_exit(LOG2, start, 20_000, 1e-3, 8, bridge=False).bias()[0]
    bridged = first_exit(LOG2, start, 20_000, 1e-3, 8, bridge=True).bias()[0]
    assert abs(bridged) < abs(plain)
