import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerpl.complex import (
    Complex, Cone, Face, Gluing, Point, Subface, face_from_vertices, sector_face,
    tangent_cone,
)
from finslerpl.errors import IncidenceError, InputError
from finslerpl.norms import Ellipsoidal, EuclideanScaled, Lp

from conftest import glued_half_planes

INF = math.inf


def test_half_planes_validate(half_planes):
    report = half_planes.validate()
    assert report.valid
    assert not report.failures


def test_non_isometric_gluing_detected():
    axis = lambda: Subface([0.0, 0.0], [[1.0, 0.0]], [-INF], [INF])
    up = Face(0, 2, EuclideanScaled(2, 1.0), [[0, -1]], [0], [axis()])
    down = Face(1, 2, EuclideanScaled(2, 1.01), [[0, 1]], [0], [axis()])
    cx = Complex([up, down], [Gluing(0, 0, 1, 0, [[1.0]], [0.0])])
    report = cx.validate()
    assert not report.valid
    assert any(f["reason"] == "gluing is not isometric" for f in report.failures)


def test_gluing_box_mismatch_detected():
    sq = face_from_vertices(0, [[0, 0], [1, 0], [1, 1], [0, 1]], EuclideanScaled(2))
    sq2 = face_from_vertices(1, [[0, 1], [2, 1], [2, 2], [0, 2]], EuclideanScaled(2))
    # top edge of the unit square (length 1) cannot cover the length-2 edge
    bad = Gluing(0, 2, 1, 0, [[1.0]], [0.0])
    report = Complex([sq, sq2], [bad]).validate()
    assert not report.valid


def test_representations_and_transition(half_planes):
    p = Point.of(0, (0.5, 0.0))
    reps = half_planes.representations(p)
    assert {r.face for r in reps} == {0, 1}
    q = half_planes.transition(p, 1)
    assert q.face == 1
    assert np.allclose(q.x, [0.5, 0.0])
    with pytest.raises(IncidenceError):
        half_planes.transition(Point.of(0, (0.0, 1.0)), 1)


def test_canonical_and_same_point(half_planes):
    a = Point.of(0, (0.3, 0.0))
    b = Point.of(1, (0.3, 0.0))
    assert half_planes.same_point(a, b)
    assert half_planes.canonical(a) == half_planes.canonical(b)
    assert not half_planes.same_point(a, Point.of(1, (0.3, -0.1)))


def test_star_and_common_faces(half_planes):
    assert set(half_planes.star(Point.of(0, (0.0, 0.0)))) == {0, 1}
    assert set(half_planes.star(Point.of(0, (0.0, 1.0)))) == {0}
    assert half_planes.common_faces(Point.of(0, (0.1, 0.0)),
                                    Point.of(1, (0.5, 0.0))) == [0, 1]


@settings(max_examples=40, deadline=None)
@given(u=st.floats(-5, 5))
def test_subface_param_round_trip(u):
    s = Subface([1.0, 2.0], [[0.6, 0.8]], [-INF], [INF])
    x = s.embed([u])
    v = s.params_of(x, 1e-9)
    assert v is not None
    assert v[0] == pytest.approx(u, abs=1e-9)
    # off-subface points are rejected
    assert s.params_of(x + np.array([0.8, -0.6]), 1e-9) is None


def test_face_from_vertices_geometry():
    face = face_from_vertices(7, [[0, 0], [2, 0], [2, 1], [0, 1]], EuclideanScaled(2))
    assert face.contains([1.0, 0.5])
    assert face.contains([0.0, 0.0])
    assert not face.contains([2.1, 0.5])
    assert face.interior_contains([1.0, 0.5], 1e-9)
    assert not face.interior_contains([0.0, 0.5], 1e-9)
    assert len(face.subfaces) == 4
    # each edge subface embeds onto the boundary
    for s in face.subfaces:
        mid = s.embed(0.5 * (s.lo + s.hi))
        assert face.contains(mid, 1e-12)
        assert not face.interior_contains(mid, 1e-9)


def test_cone_operations():
    f0 = sector_face(0, [1, 0], [0, 1], Ellipsoidal([[1, 0.3], [0.3, 1]]))
    f1 = sector_face(1, [0, 1], [-1, 0], Lp(2, 3.0))
    g = Gluing(0, 1, 1, 0, [[1.0]], [0.0])
    cone = Cone([f0, f1], [g])
    assert cone.validate().valid
    q = Point.of(0, (0.3, 0.4))
    assert cone.radial_distance(q) == pytest.approx(
        f0.norm.eval([0.3, 0.4]), rel=1e-14)
    half = cone.dilate(q, 0.5)
    assert np.allclose(half.x, [0.15, 0.2])
    with pytest.raises(InputError):
        cone.dilate(q, -1.0)
    tc, charts = tangent_cone(cone, cone.apex())
    assert set(tc.faces) == set(charts)


def test_sector_face_requires_ccw():
    with pytest.raises(InputError):
        sector_face(0, [0, 1], [1, 0], EuclideanScaled(2))


def test_json_round_trip(half_planes, flag_instance):
    for cx in (half_planes, flag_instance.complex):
        clone = Complex.from_json(cx.to_json())
        assert clone.validate().valid
        assert sorted(clone.faces) == sorted(cx.faces)
        assert len(clone.gluings) == len(cx.gluings)
        p = Point.of(min(cx.faces), next(iter(cx.faces.values())) and (0.25, 0.5))


def test_duplicate_face_ids_rejected():
    f = face_from_vertices(0, [[0, 0], [1, 0], [1, 1]], EuclideanScaled(2))
    g = face_from_vertices(0, [[0, 0], [1, 0], [0, 1]], EuclideanScaled(2))
    with pytest.raises(InputError):
        Complex([f, g], [])


def test_belt_periodic_contraction_map(belt_instance):
    cx = belt_instance.complex
    # the wrap gluing contracts horizontal offsets by the factor
    p = Point.of(0, (0.5, -2.0))
    reps = cx.representations(p)
    other = [r for r in reps if r.face == 3]
    assert other
    assert other[0].x[0] == pytest.approx(0.5 / 1.01, abs=1e-12)
