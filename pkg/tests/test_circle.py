import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hirschlab.circle import (CircleMeasure, GFunction, antipode, compute_g_measure,
                              doubling_map, radon_nikodym_check, total_variation,
                              transfer_dual_step, validate_g)
from hirschlab.errors import ArcTooCoarse, InvalidGFunction, InvalidMeasure, NoConvergence
from oracles import dense_g_measure, recip_sine


def test_doubling_and_antipode():
    assert doubling_map(0.75) == 0.5
    assert antipode(0.75) == 0.25
    np.testing.assert_array_equal(doubling_map(np.array([0.125, 0.625])), [0.25, 0.25])


@pytest.mark.parametrize("spec,kind", [("const2", "const2"), ("sine:a=0.3", "sine")])
def test_parse_round_trip(spec, kind):
    g = GFunction.parse(spec)
    assert g.kind == kind
    assert GFunction.parse(g.spec) == g


def test_parse_table(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"values": [2.0] * 8}))
    g = GFunction.parse(f"table:{p}")
    assert g(0.3) == pytest.approx(2.0)


@pytest.mark.parametrize("spec,code", [
    ("sine:a=1.0", "NOT_GREATER_THAN_ONE"),
    ("banana", "BAD_SPEC"),
    ("sine:b=0.3", "BAD_SPEC"),
])
def test_invalid_g(spec, code):
    with pytest.raises(InvalidGFunction) as exc:
        validate_g(GFunction.parse(spec))
    assert exc.value.code == code


def test_identity_violation_is_named(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text(json.dumps({"values": [3.0, 3.0, 3.0, 3.0]}))
    with pytest.raises(InvalidGFunction) as exc:
        validate_g(GFunction.parse(f"table:{p}"))
    assert exc.value.code == "IDENTITY_VIOLATED"
    assert "1/g(z) + 1/g(-z) = 1" in str(exc.value)


def test_inf_log_g():
    assert validate_g(GFunction.sine(0.5)).inf_log_g == pytest.approx(math.log(4 / 3), abs=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(-0.95, 0.95), st.floats(0, 1, exclude_max=True))
def test_sine_identity(a, theta):
    g = GFunction.sine(a)
    assert 1 / g(theta) + 1 / g(antipode(theta)) == pytest.approx(1.0, abs=1e-14)


def test_const2_fixed_point_exact():
    res = compute_g_measure(GFunction.constant2(), 12)
    assert res.iterations == 1
    assert np.all(res.measure.weights == 2.0 ** -12)


def test_dual_step_preserves_positivity_and_mass():
    rng = np.random.default_rng(3)
    w = rng.random(2 ** 9)
    mu = CircleMeasure.normalized(9, w)
    out = transfer_dual_step(mu, GFunction.sine(0.7))
    assert np.all(out.weights > 0)
    assert abs(out.weights.sum() - 1) < 1e-14


def test_power_iteration_matches_dense_oracle():
    ours = compute_g_measure(GFunction.sine(0.3), 8).measure.weights
    ref, lam = dense_g_measure(lambda t: recip_sine(0.3, t), 8)
    assert abs(lam - 1) < 1e-12
    assert 0.5 * np.abs(ours - ref).sum() <= 1e-10


def test_radon_nikodym_small_for_g_measure_and_large_for_lebesgue():
    g = GFunction.sine(0.5)
    mu = compute_g_measure(g, 12).measure
    assert radon_nikodym_check(mu, g, 4) < 5e-5
    assert radon_nikodym_check(CircleMeasure.uniform(12), g, 4) > 0.05


def test_arc_too_coarse():
    mu = CircleMeasure.uniform(10)
    with pytest.raises(ArcTooCoarse):
        radon_nikodym_check(mu, GFunction.constant2(), 1)
    with pytest.raises(ArcTooCoarse):
        radon_nikodym_check(mu, GFunction.constant2(), 9)


def test_no_convergence_reported():
    with pytest.raises(NoConvergence):
        compute_g_measure(GFunction.sine(0.3), 10, tol=1e-15, max_iter=3)


def test_levels_agree_in_total_variation():
    g = GFunction.sine(0.3)
    a = compute_g_measure(g, 10).measure
    b = compute_g_measure(g, 13).measure
    assert total_variation(a, b) < 1e-3


def test_measure_json_round_trip(tmp_path):
    mu = compute_g_measure(GFunction.sine(0.3), 6).measure
    p = tmp_path / "mu.json"
    mu.save(p)
    back = CircleMeasure.load(p)
    assert back.level == 6 and np.array_equal(back.weights, mu.weights)


def test_measure_validation():
    with pytest.raises(InvalidMeasure):
        CircleMeasure(3, np.full(8, 0.2))
    with pytest.raises(InvalidMeasure):
        CircleMeasure(3, np.full(4, 0.25))
    with pytest.raises(InvalidMeasure):
        CircleMeasure.from_json({"level": 2})


def test_radon_nikodym_residual_shrinks_with_level():
    g = GFunction.sine(0.3)
    res = [radon_nikodym_check(compute_g_measure(g, k).measure, g, 8) for k in (10, 12, 14)]
    assert res[2] <= 1e-6 and res[1] <= 1e-6
    for a, b in zip(res, res[1:]):
        assert a / b >= 2.0
