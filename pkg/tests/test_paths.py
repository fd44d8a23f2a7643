import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerpl.complex import Complex, Face, Point
from finslerpl.errors import IncidenceError, NonSmoothPointError, OutOfRangeError
from finslerpl.norms import Ellipsoidal, EuclideanScaled, MaxOfEllipsoidal
from finslerpl.paths import (
    SearchConfig, VertexPath, busemann_check, fan_slack, fast_midpoint,
    is_geodesic_sequence, is_local_geodesic_onesided, local_distance, midpoint,
    onesided_vertex_slack, orth_slice, path_distance, shortest_paths,
)

from conftest import chart_point

REFRACTED = 2 * np.sqrt(0.75)  # crossing distance between (0, 1) and (0, -1)


def endpoints(cx):
    return Point.of(0, (0.0, 1.0)), Point.of(1, (0.0, -1.0))


def test_refracted_distance_and_crossing(half_planes):
    a, b = endpoints(half_planes)
    d, path = local_distance(half_planes, a, b)
    assert d == pytest.approx(REFRACTED, abs=1e-9)
    cross = [p for p in path.points if abs(p.coords[1]) < 1e-9][0]
    assert cross.coords[0] == pytest.approx(0.5, abs=1e-6)
    assert is_geodesic_sequence(half_planes, path, 1e-9)
    assert is_local_geodesic_onesided(half_planes, path, 1e-9)
    assert fan_slack(half_planes, path) == 0.0


def test_straight_vertical_is_not_geodesic(half_planes):
    a, b = endpoints(half_planes)
    straight = VertexPath(half_planes, [a, Point.of(0, (0.0, 0.0)), b], [0, 1])
    assert straight.length() == pytest.approx(2.0, abs=1e-12)
    assert not is_geodesic_sequence(half_planes, straight, 1e-9)
    assert not is_local_geodesic_onesided(half_planes, straight, 1e-6)


@settings(max_examples=25, deadline=None)
@given(x=st.floats(-1.5, 1.5), ya=st.floats(0.1, 2.0), yb=st.floats(0.1, 2.0))
def test_distance_is_symmetric_and_beats_detours(x, ya, yb):
    from conftest import glued_half_planes
    cx = glued_half_planes()
    a, b = Point.of(0, (x, ya)), Point.of(1, (x, -yb))
    d1, _ = local_distance(cx, a, b)
    d2, _ = local_distance(cx, b, a)
    assert d1 == pytest.approx(d2, abs=1e-9)
    # any explicit broken line is at least as long
    via = VertexPath(cx, [a, Point.of(0, (x + 0.3, 0.0)), b], [0, 1])
    assert via.length() >= d1 - 1e-9


def test_midpoint_and_fast_midpoint(half_planes):
    a, b = endpoints(half_planes)
    m = midpoint(half_planes, a, b)
    assert m.coords[0] == pytest.approx(0.5, abs=1e-6)
    assert abs(m.coords[1]) < 1e-6
    deep = fast_midpoint(half_planes, Point.of(0, (0.0, 2.0)),
                         Point.of(0, (0.0, 3.0)), SearchConfig())
    assert np.allclose(deep.x, (0.0, 2.5))


def test_warm_start_is_reproducible(half_planes):
    a, b = endpoints(half_planes)
    warm = {}
    c1 = shortest_paths(half_planes, a, b, warm=warm)
    c2 = shortest_paths(half_planes, a, b, warm=warm)
    assert len(c1) == 1
    assert c1[0].length == pytest.approx(c2[0].length, abs=1e-14)


def test_vertex_path_normalization(half_planes):
    a = Point.of(0, (0.0, 2.0))
    b = Point.of(0, (0.0, 0.5))
    path = VertexPath(half_planes, [a, Point.of(0, (0.0, 1.25)),
                                    Point.of(0, (0.0, 1.25)), b], [0, 0, 0])
    slim = path.normalized()
    assert slim.n_edges == 1  # zero edge dropped, collinear vertex merged
    assert slim.length() == pytest.approx(path.length(), abs=1e-12)


def test_vertex_path_incidence_checked(half_planes):
    with pytest.raises(IncidenceError):
        VertexPath(half_planes, [Point.of(0, (0.0, 1.0)),
                                 Point.of(0, (0.0, -1.0))], [0])


def test_point_at_and_resample(half_planes):
    _, path = local_distance(half_planes, *endpoints(half_planes))
    assert np.allclose(path.point_at(0.0).x, path.points[0].x)
    L = path.length()
    end = path.point_at(L)
    assert half_planes.same_point(end, path.points[-1])
    pts = path.resample(5)
    assert len(pts) == 5


def test_path_serialization_round_trip(half_planes):
    _, path = local_distance(half_planes, *endpoints(half_planes))
    clone = VertexPath.from_json(half_planes, path.to_json())
    assert path_distance(path, clone) < 1e-12
    csv = path.to_csv()
    assert csv.splitlines()[0].startswith("index,face_id,")
    assert len(csv.splitlines()) == len(path.points) + 1


def test_no_chain_between_disconnected_faces():
    from finslerpl.complex import face_from_vertices
    f0 = face_from_vertices(0, [[0, 0], [1, 0], [1, 1]], EuclideanScaled(2))
    f1 = face_from_vertices(1, [[5, 5], [6, 5], [6, 6]], EuclideanScaled(2))
    cx = Complex([f0, f1], [])
    with pytest.raises(OutOfRangeError):
        shortest_paths(cx, Point.of(0, (0.5, 0.25)), Point.of(1, (5.5, 5.25)))


def test_corner_vertex_slack_interior_vs_constrained():
    mx = MaxOfEllipsoidal([[[1, 0.5], [0.5, 1]], [[1, -0.5], [-0.5, 1]]])
    plane = Face(0, 2, mx, np.zeros((0, 2)), np.zeros(0), [])
    cx = Complex([plane], [])
    vert = VertexPath(cx, [Point.of(0, (0, -1)), Point.of(0, (0, 0)),
                           Point.of(0, (0, 1))], [0, 0])
    worst, slack = onesided_vertex_slack(cx, vert, 1)
    assert worst > -1e-9          # still a local geodesic
    assert slack > 0.5            # the corner support is visible...
    assert fan_slack(cx, vert) == 0.0  # ...but free vertices never certify fans


def test_flag_crossing_carries_fan_slack(flag_instance):
    cx = flag_instance.complex
    path = VertexPath(cx, [Point.of(0, (0.0, 2.0)),
                           chart_point(cx, 1, 0.0, 1.0),
                           chart_point(cx, 1, 0.0, -1.0),
                           Point.of(2, (0.0, -2.0))], [0, 1, 2])
    assert is_local_geodesic_onesided(cx, path, 1e-9)
    assert fan_slack(cx, path) == pytest.approx(0.5, abs=1e-9)


def test_orth_slice_interior_point(half_planes):
    _, path = local_distance(half_planes, *endpoints(half_planes))
    sl = orth_slice(half_planes, path, 0, 0.5)
    assert len(sl.pieces) == 1
    piece = sl.pieces[0]
    # the slice hyperplane is the kernel of the norm derivative
    n = half_planes.faces[piece.face].norm
    v = path.edge_vector(0) / np.linalg.norm(path.edge_vector(0))
    assert abs(float(n.grad(v) @ sl.pieces[0].basis[0])) < 1e-9


def test_busemann_inequality_normed_plane():
    n = Ellipsoidal([[2.0, 0.3], [0.3, 1.0]])
    v = n.unit(np.array([1.0, 0.2]))
    g = n.grad(v)
    w = np.array([-g[1], g[0]])
    q = np.array([0.5, -0.5]) + 0.7 * w
    br = busemann_check(n, [0.5, -0.5], v, q)
    assert br.inequality_ok and br.strict_ok and br.decay_ok
    assert br.worst_margin >= -1e-12


def test_busemann_preconditions():
    n = Ellipsoidal([[2.0, 0.3], [0.3, 1.0]])
    with pytest.raises(Exception):
        busemann_check(n, [0, 0], [1.0, 0.0], [0.0, 1.0])  # v not unit
    mx = MaxOfEllipsoidal([[[1, 0.5], [0.5, 1]], [[1, -0.5], [-0.5, 1]]])
    with pytest.raises(NonSmoothPointError):
        busemann_check(mx, [0, 0], mx.unit([0.0, 1.0]), [1.0, 0.0])
