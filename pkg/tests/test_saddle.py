from fractions import Fraction

import numpy as np
import pytest

from finslerpl.errors import InputError
from finslerpl.norms import EuclideanScaled, Lp
from finslerpl.oracle import Region, uniqueness_scan
from finslerpl.paths import VertexPath, local_distance
from finslerpl.saddle import (
    SaddleConeSurface, _rational_feasible, case_witness,
    cone_surface_from_heights, induced_complex, is_saddle_cone,
    is_saddle_surface, plane_point,
)

SQ4 = [[1, 0], [0, 1], [-1, 0], [0, -1]]


def saddle_graph():
    # the graph of z = |x| - |y| over the axis-aligned four-sector fan
    return cone_surface_from_heights(SQ4, [1.0, -1.0, 1.0, -1.0], Lp(3, 3.0))


def test_flat_plane_is_saddle():
    flat = SaddleConeSurface(2, EuclideanScaled(2), SQ4, [np.eye(2)] * 4)
    c = is_saddle_cone(flat)
    assert c.saddle
    assert c.residual < 1e-10


def test_graph_of_x_minus_y_is_saddle():
    c = is_saddle_cone(saddle_graph())
    assert c.saddle
    assert c.residual < 1e-10
    assert c.separating is None


def test_cap_fails_with_separating_functional():
    cap = cone_surface_from_heights(SQ4, [1.0, 1.0, 1.0, 1.0], Lp(3, 3.0))
    c = is_saddle_cone(cap)
    assert not c.saddle
    assert c.separating is not None
    # the functional strictly separates all edge directions from zero
    assert np.all(c.generators @ c.separating > 0)
    blob = c.to_json()
    assert blob["saddle"] is False


def test_rational_feasibility_solver():
    # convex combination of (1,0), (0,1), (-1,-1) hitting the origin: feasible
    a = [[1, 0, -1], [0, 1, -1], [1, 1, 1]]
    sol = _rational_feasible(a, [0, 0, 1])
    assert sol is not None
    assert sum(sol) == 1
    assert all(x >= 0 for x in sol)
    assert sol[0] * 1 + sol[2] * (-1) == Fraction(0)
    # generators in an open half-plane: no convex combination vanishes
    a = [[1, 0, 1], [0, 1, 1], [1, 1, 1]]
    assert _rational_feasible(a, [0, 0, 1]) is None


def test_induced_complex_metric(saddle_cone):
    surf = saddle_graph()
    p = plane_point(surf, [0.5, 0.5])
    q = plane_point(surf, [-0.5, 0.5])
    cone = induced_complex(surf)
    d, path = local_distance(cone, p, q)
    assert d > 0
    assert cone.radial_distance(p) == pytest.approx(
        surf.ambient_norm.eval(surf.evaluate([0.5, 0.5])), abs=1e-12)
    assert cone.validate().valid


def test_induced_saddle_cone_scan_is_clean():
    surf = saddle_graph()
    cone = induced_complex(surf)
    rep = uniqueness_scan(cone, Region.box(cone, [-1, -1], [1, 1]),
                          radius=0.4, n_pairs=15, seed=5)
    assert rep.n_ambiguous == 0


def test_case_witness_classification():
    surf = saddle_graph()
    cone = induced_complex(surf)
    p = plane_point(surf, [0.5, 0.5])
    q = plane_point(surf, [-0.5, 0.5])
    apex = cone.apex(p.face)
    g0 = VertexPath(cone, [p, cone.transition(apex, p.face), q],
                    [p.face, q.face])
    mid = plane_point(surf, [0.0, 0.8])
    g1 = VertexPath(cone, [p, cone.transition(mid, p.face),
                           cone.transition(mid, q.face), q],
                    [p.face, mid.face, q.face])
    w1 = case_witness(surf, cone, g0, g1)
    assert w1.case == 1
    assert w1.midpoint_margin > 0

    mid2 = plane_point(surf, [0.0, 0.6])
    g2 = VertexPath(cone, [p, cone.transition(mid2, p.face),
                           cone.transition(mid2, q.face), q],
                    [p.face, mid2.face, q.face])
    w2 = case_witness(surf, cone, g1, g2)
    assert w2.case == 2

    pts3 = [p, plane_point(surf, [0.9, 0.0]), plane_point(surf, [0.0, -0.9]),
            plane_point(surf, [-0.9, 0.0]), q]
    g3 = VertexPath(cone, pts3, [0, 3, 2, 1])
    w3 = case_witness(surf, cone, g1, g3)
    assert w3.case == 3
    assert w3.d0f_best >= -1e-12


def grid_mesh(height):
    xs = np.linspace(-1, 1, 7)
    vv = [[x, y, height(x, y)] for x in xs for y in xs]
    tt = []
    for i in range(6):
        for j in range(6):
            a = i * 7 + j
            tt.append([a, a + 1, a + 8])
            tt.append([a, a + 8, a + 7])
    return {"vertices": vv, "triangles": tt}


def test_mesh_saddle_verdicts():
    verdicts = is_saddle_surface(grid_mesh(lambda x, y: x * x - y * y))
    inner = [v for v in verdicts if v.interior]
    assert inner
    assert all(v.saddle for v in inner)


def test_mesh_cap_detected():
    cap_vv = [[0, 0, 0.5]] + [
        [np.cos(t), np.sin(t), 0.0]
        for t in np.linspace(0, 2 * np.pi, 9)[:-1]]
    cap_tt = [[0, 1 + k, 1 + (k + 1) % 8] for k in range(8)]
    verdicts = is_saddle_surface({"vertices": cap_vv, "triangles": cap_tt})
    assert verdicts[0].interior
    assert not verdicts[0].saddle


def test_surface_json_round_trip():
    surf = saddle_graph()
    clone = SaddleConeSurface.from_json(surf.to_json())
    assert clone.n_sectors == surf.n_sectors
    for xy in ([0.3, 0.7], [-0.5, -0.2]):
        assert np.allclose(clone.evaluate(xy), surf.evaluate(xy))


def test_bad_fan_rejected():
    with pytest.raises(InputError):
        cone_surface_from_heights([[1, 0], [0, 1]], [1.0, 1.0], Lp(3, 3.0))
