import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hirschlab.errors import AtConePoint, InvalidShape, SingularPoint
from hirschlab.pants import (Chart, ChartPoint, PantsShape, area, area_closed_form,
                             boundary_length, collar_circle_length, collar_curvature,
                             collar_curvature_audit, collar_laplace_residual, d3_locate,
                             d3_param, gauss_bonnet_audit, harmonic_phi, laplace_residual,
                             metric_at, phi_mass_quadrature, run_shape_audits, slit_crossing)
from oracles import fiber_mass_closed_form, pants_area_closed_form

SHAPES = [PantsShape(math.log(2), math.log(2)), PantsShape(math.log(3), math.log(1.5))]


def test_shape_invariant():
    with pytest.raises(InvalidShape):
        PantsShape(1.0, 1.0)
    with pytest.raises(InvalidShape):
        PantsShape(math.log(2), math.log(2), eps=1.0)
    s = PantsShape.from_L1(0.4)
    assert math.exp(-s.L1) + math.exp(-s.L2) == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("shape", SHAPES)
def test_area(shape):
    assert area_closed_form(shape) == pytest.approx(pants_area_closed_form(shape.L1, shape.L2), abs=1e-15)
    assert abs(area(shape, 256) - 1.0) <= 1e-6


@pytest.mark.parametrize("shape", SHAPES)
def test_phi_mass(shape):
    assert abs(phi_mass_quadrature(shape) - fiber_mass_closed_form(shape.L1, shape.L2)) <= 1e-8


@pytest.mark.parametrize("shape", SHAPES)
def test_boundary_lengths(shape):
    for b in ("D1", "D2", "D3"):
        assert boundary_length(shape, b) == pytest.approx(1.0, abs=1e-12)
    assert boundary_length(shape, "D3", part=Chart.CYL1) == pytest.approx(math.exp(-shape.L1))


@pytest.mark.parametrize("shape", SHAPES)
def test_gauss_bonnet(shape):
    assert gauss_bonnet_audit(shape).residual <= 1e-10
    assert gauss_bonnet_audit(shape, quadrature=True).residual <= 1e-4


def test_metric_and_phi():
    s = SHAPES[0]
    g = metric_at(s, ChartPoint.cyl(1, 0.3, s.L1))
    np.testing.assert_allclose(g, np.eye(2))
    assert harmonic_phi(s, ChartPoint.cyl(2, 0.1, 0.0)) == 1.0
    assert harmonic_phi(s, ChartPoint.collar(1.0)) == 1.0
    with pytest.raises(SingularPoint):
        metric_at(s, ChartPoint.cyl(1, 0.0, s.eps))


@settings(max_examples=60, deadline=None)
@given(st.floats(0.05, 3.0), st.floats(0, 1, exclude_max=True))
def test_d3_locate_inverts_param(L1, theta):
    s = PantsShape.from_L1(L1, eps=0.01)
    p = d3_locate(s, theta)
    assert p.v == 0.0
    d = abs(d3_param(s, p) - theta)
    assert min(d, 1.0 - d) <= 1e-12


@settings(max_examples=100, deadline=None)
@given(st.sampled_from([Chart.CYL1, Chart.CYL2]), st.sampled_from(["left", "right"]),
       st.floats(0, 0.05, exclude_max=True))
def test_slit_round_trip(chart, side, v):
    s = SHAPES[0]
    once = slit_crossing(s, chart, side, v)
    assert once[0] != chart and once[1] != side and once[2] == v
    assert slit_crossing(s, *once) == (chart, side, v)


def test_slit_at_cone():
    with pytest.raises(AtConePoint):
        slit_crossing(SHAPES[0], Chart.CYL1, "left", SHAPES[0].eps)


@pytest.mark.parametrize("shape", SHAPES)
def test_laplace_second_order(shape):
    res = [laplace_residual(shape, h) for h in (1 / 32, 1 / 64, 1 / 128)]
    for a, b in zip(res, res[1:]):
        assert 3.2 <= a / b <= 4.8


def test_divergence_form_is_exact_for_phi():
    assert laplace_residual(SHAPES[1], 1 / 32, form="divergence") < 1e-9


def test_non_harmonic_function_detected():
    def f(chart, u, v):
        return np.asarray(v, dtype=float) ** 2 + 0.0 * np.asarray(u)
    assert laplace_residual(SHAPES[0], 1 / 64, f=f) > 0.5


def test_collar_laplace_second_order():
    res = [collar_laplace_residual(h) for h in (1 / 32, 1 / 64, 1 / 128)]
    for a, b in zip(res, res[1:]):
        assert 3.2 <= a / b <= 4.8


def test_curvature_stencil_on_reference_metrics():
    r = np.linspace(0.1, 0.6, 8)
    disk = collar_curvature(r, lambda x, y: np.log(2.0 / (1.0 - x * x - y * y)))
    sphere = collar_curvature(r, lambda x, y: np.log(2.0 / (1.0 + x * x + y * y)))
    np.testing.assert_allclose(disk, -1.0, atol=1e-6)
    np.testing.assert_allclose(sphere, 1.0, atol=1e-6)


def test_collar_curvature_and_length():
    assert collar_curvature_audit(100).residual <= 1e-6
    assert abs(collar_circle_length() - 1.0) <= 1e-10


@pytest.mark.parametrize("shape", SHAPES)
def test_all_audits_pass(shape):
    failed = [r.check for r in run_shape_audits(shape) if not r.passed]
    assert failed == []
