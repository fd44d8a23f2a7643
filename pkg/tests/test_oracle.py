import numpy as np
import pytest

from finslerpl.complex import Complex, Point, face_from_vertices
from finslerpl.errors import UnreachableError
from finslerpl.norms import EuclideanScaled
from finslerpl.oracle import (
    Region, build_graph, enumerate_geodesics, oracle_distance, uniqueness_scan,
)
from finslerpl.paths import local_distance


def test_square_lattice_is_exact_on_aligned_pairs():
    sq = face_from_vertices(0, [[0, 0], [1, 0], [1, 1], [0, 1]],
                            EuclideanScaled(2))
    cx = Complex([sq], [])
    g = build_graph(cx, Region.box(cx, [0, 0], [1, 1]), h=0.5)
    assert len(g.nodes) >= 9
    d, snap, hops = g.distance(Point.of(0, (0, 0)), Point.of(0, (1, 1)))
    assert snap < 1e-12
    assert d == pytest.approx(np.sqrt(2), abs=1e-12)
    assert hops


def test_oracle_converges_from_above(half_planes):
    a = Point.of(0, (0.0, 1.0))
    b = Point.of(1, (0.0, -1.0))
    true_d, _ = local_distance(half_planes, a, b)
    reg = Region.box(half_planes, [-1.6, -1.6], [1.6, 1.6])
    prev = np.inf
    for h in (0.2, 0.1, 0.05):
        g = build_graph(half_planes, reg, h=h)
        du = oracle_distance(g, a, b)
        assert du >= true_d - 1e-9      # graph paths overestimate
        assert du <= prev + 1e-12       # refinement never hurts
        prev = du
    assert (prev - true_d) / true_d < 0.01


def test_graph_crosses_the_gluing(half_planes):
    reg = Region.box(half_planes, [-1, -1], [1, 1])
    g = build_graph(half_planes, reg, h=0.25)
    faces = {n.face for n in g.nodes}
    assert faces == {0, 1}


def test_enumeration_finds_the_unique_geodesic(half_planes):
    a = Point.of(0, (0.0, 1.0))
    b = Point.of(1, (0.0, -1.0))
    paths = enumerate_geodesics(half_planes, a, b, max_faces=6, tol=1e-6)
    assert len(paths) == 1
    d, _ = local_distance(half_planes, a, b)
    assert paths[0].length() == pytest.approx(d, abs=1e-6)


def test_scan_clean_on_smooth_complex(half_planes):
    rep = uniqueness_scan(half_planes, Region.box(half_planes, [-1, -1], [1, 1]),
                          radius=0.5, n_pairs=20, seed=3)
    assert rep.n_ambiguous == 0
    assert rep.n_pairs == 20
    blob = rep.to_json()
    assert blob["schema"] == "finsler-pl/1"
    assert blob["n_ambiguous"] == 0


def test_scan_flags_the_corner_fan(flag_instance):
    cx = flag_instance.complex
    rep = uniqueness_scan(cx, Region.box(cx, [-3, -3], [3, 3]),
                          radius=4.0, n_pairs=30, seed=1)
    assert rep.n_ambiguous > 0
    bad = [p for p in rep.pairs if p.ambiguous]
    # every flagged pair carries a concrete witness
    for p in bad:
        assert p.n_minimizers > 1 or p.slack > 0
    assert any(p.witnesses for p in bad)


def test_unreachable_outside_covered_faces(half_planes):
    # graph restricted to the upper face: a point strictly in the lower face
    # has no representation inside the covered region
    reg = Region.box(half_planes, [-1, 0], [1, 1], faces=[0])
    g = build_graph(half_planes, reg, h=0.25)
    with pytest.raises(UnreachableError):
        g.distance(Point.of(0, (0.0, 0.5)), Point.of(1, (0.0, -0.5)))


def test_region_from_vertices_covers_bounded_faces(flag_instance):
    cx = flag_instance.complex
    reg = Region.from_vertices(cx, pad=0.5)
    assert set(reg.boxes) == set(cx.faces)
    for fid, (lo, hi) in reg.boxes.items():
        assert np.all(np.asarray(hi) > np.asarray(lo))
