import numpy as np
import pytest

from finslerpl.complex import Point
from finslerpl.errors import ConstructionError, InputError, OutOfRangeError
from finslerpl.gallery import (
    BUILDERS, belt_vertical_geodesic, build_belt, build_double_belt,
    build_glued_half_planes, build_russian_flag, fan_half_width, geodesic_fan,
    measure_asymptotics, measure_convexity_failure,
)
from finslerpl.paths import local_distance


# --- glued half-planes ------------------------------------------------------


def test_half_planes_refracted_distance(hp_instance):
    d, _ = local_distance(hp_instance.complex, Point.of(0, (0, 1)),
                          Point.of(1, (0, -1)))
    assert d == pytest.approx(2 * np.sqrt(0.75), abs=1e-9)


def test_convexity_failure_detected(hp_instance):
    rep = measure_convexity_failure(hp_instance)
    assert rep.worst_margin > 1e-6
    assert any(v.probe == "vertical-line" for v in rep.violations)
    blob = rep.to_json()
    assert blob["n_violations"] == len(rep.violations)
    csv = rep.curve_csv()
    assert csv.splitlines()[0].startswith("x0,t,")


def test_convexity_controls(hp_instance):
    # matching parameters on both sides give one normed plane: convex
    ctrl = build_glued_half_planes(0.3, 0.3)
    assert not measure_convexity_failure(ctrl).violations
    # each half on its own is a convex normed region
    one = measure_convexity_failure(hp_instance, side="up", n_triangles=0)
    assert not one.violations


def test_half_planes_input_checks():
    with pytest.raises(InputError):
        build_glued_half_planes(1.0, 0.0)       # degenerate quadratic form
    warned = build_glued_half_planes(0.999, -0.999)
    assert warned.notes                          # ill-conditioned warning


# --- belt -------------------------------------------------------------------


def test_belt_deviation_ratio_matches_factor(belt_instance):
    rep = measure_asymptotics(belt_instance, offsets=(0.0, 0.05), n_periods=10)
    assert all(rep.geodesic_verified)
    assert all(rep.non_increasing)
    assert rep.fitted_ratios[0] == pytest.approx(1.0, abs=1e-12)
    assert rep.fitted_ratios[1] == pytest.approx(1 / 1.01, abs=1e-9)
    assert rep.to_json()["factor"] == 1.01
    assert rep.curve_csv().splitlines()[0].startswith("offset,period,")


def test_flat_belt_has_no_contraction():
    flat = build_belt(1.0, n_periods=6)
    rep = measure_asymptotics(flat, offsets=(0.05,), n_periods=5)
    assert rep.fitted_ratios[0] == pytest.approx(1.0, abs=1e-6)
    assert all(rep.geodesic_verified)


def test_belt_shortening_agrees_with_staircase():
    small = build_belt(1.01, n_periods=4)
    rep = measure_asymptotics(small, offsets=(0.05,), n_periods=3,
                              t_infinity=True)
    assert rep.t_infinity_gap < 1e-4


def test_belt_construction_guards():
    with pytest.raises((ConstructionError, InputError)):
        build_belt(2.0, patch_angle=0.35)   # patch too deep to stay convex
    with pytest.raises(InputError):
        build_belt(0.5)                     # contraction factor must be >= 1


def test_belt_geodesic_window_bounds(belt_instance):
    with pytest.raises(OutOfRangeError):
        belt_vertical_geodesic(belt_instance, 0.05, n_periods=500)


# --- flag -------------------------------------------------------------------


def test_flag_fan_lengths_closed_form(flag_instance):
    fan = geodesic_fan(flag_instance, n_members=13)
    assert len(fan.offsets) == 13
    assert all(fan.verified)
    assert fan.spread > 1e-4
    assert fan.monotone
    for h, l in zip(fan.offsets, fan.lengths):
        assert l == pytest.approx(2 * np.sqrt(1 + h * h) + 2, abs=1e-12)
    blob = fan.to_json()
    assert len(blob["offsets"]) == 13
    assert fan.curve_csv().splitlines()[0].startswith("offset,length,")


def test_fan_width_scales_with_sharpness(flag_instance):
    c = 0.5
    assert fan_half_width(flag_instance) == pytest.approx(
        c / np.sqrt(1 - c * c), abs=1e-12)
    tiny = build_russian_flag(1e-3)
    assert fan_half_width(tiny) < 2e-3


def test_flag_refuses_smooth_only_operations(flag_instance):
    assert not flag_instance.smooth
    with pytest.raises(InputError):
        flag_instance.require_smooth("busemann probe")


# --- double belt and registry ----------------------------------------------


def test_double_belt_bridges_the_two_belts():
    db = build_double_belt(1.01, n_periods=3)
    assert db.complex.validate().valid
    d, path = local_distance(db.complex, Point.of(0, (0.5, -0.5)),
                             Point.of(100, (0.5, -0.5)))
    assert np.isfinite(d) and d > 0
    assert 999 in path.edge_faces   # route passes through the bridge face


def test_builder_registry():
    assert set(BUILDERS) == {"half-planes", "belt", "russian-flag",
                             "double-belt"}
    inst = BUILDERS["half-planes"](beta_up=0.4, beta_down=-0.4)
    assert inst.parameters["beta_up"] == 0.4
    blob = inst.to_json()
    assert blob["schema"] == "finsler-pl/1"
    assert blob["name"] == "glued-half-planes"
