"""Brute-force verification oracle.

Independent of the convex path machinery: a deterministic lattice graph per
chart with exact norm edge weights gives an upper bound on the true distance
(every graph edge is a genuine path), converging from above under refinement.
Also exhaustive chain enumeration of near-minimal broken lines and a random
uniqueness scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .complex import Complex, Point
from .config import pmap
from .errors import InputError, UnreachableError
from .paths import (
    SearchConfig,
    VertexPath,
    fan_slack,
    is_local_geodesic_onesided,
    onesided_vertex_slack,
    shortest_paths,
)


# ---------------------------------------------------------------------------
# region


@dataclass
class Region:
    """Bounded axis-aligned window per chart."""

    boxes: dict  # face id -> (lo, hi) arrays

    def __post_init__(self):
        for fid, (lo, hi) in self.boxes.items():
            lo = np.asarray(lo, dtype=float)
            hi = np.asarray(hi, dtype=float)
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise InputError(f"region box for face {fid} is unbounded")
            if np.any(hi <= lo):
                raise InputError(f"region box for face {fid} is empty")
            self.boxes[fid] = (lo, hi)

    @staticmethod
    def box(cx: Complex, lo, hi, faces=None) -> "Region":
        fids = sorted(cx.faces) if faces is None else list(faces)
        return Region({fid: (np.asarray(lo, float), np.asarray(hi, float)) for fid in fids})

    @staticmethod
    def from_vertices(cx: Complex, pad: float = 0.0) -> "Region":
        """Bounding boxes of the face vertex hulls (bounded complexes only)."""
        boxes = {}
        for fid, face in cx.faces.items():
            if face.vertices is None:
                raise InputError(f"face {fid} is unbounded; give an explicit region")
            v = np.asarray(face.vertices, float)
            boxes[fid] = (v.min(axis=0) - pad, v.max(axis=0) + pad)
        return Region(boxes)


# ---------------------------------------------------------------------------
# discretization graph


@dataclass
class DiscretizationGraph:
    cx: Complex
    h: float
    hop_radius: float
    nodes: list                  # canonical Points
    node_pos: dict               # face id -> (indices array, positions array)
    matrix: "coo_matrix"
    provenance: dict = field(default_factory=dict)

    def nearest_node(self, p: Point) -> tuple[int, float]:
        best, best_d = -1, math.inf
        for rep in self.cx.representations(p):
            entry = self._trees.get(rep.face)
            if entry is None:
                continue
            tree, idx = entry
            d, j = tree.query(rep.x)
            if d < best_d:
                best, best_d = int(idx[j]), float(d)
        if best < 0:
            raise UnreachableError("point has no representation inside the graph region")
        return best, best_d

    def __post_init__(self):
        self._trees = {}
        for fid, (idx, pos) in self.node_pos.items():
            if len(idx):
                self._trees[fid] = (cKDTree(pos), idx)
        self._csr = self.matrix.tocsr()

    def distance(self, p: Point, q: Point) -> tuple[float, float, list]:
        """(upper-bound distance, snap error, node index path)."""
        si, sd = self.nearest_node(p)
        ti, td = self.nearest_node(q)
        dist, pred = dijkstra(self._csr, directed=False, indices=si,
                              return_predecessors=True)
        if not np.isfinite(dist[ti]):
            raise UnreachableError("graph is disconnected between the snapped nodes")
        path = [ti]
        while path[-1] != si:
            path.append(int(pred[path[-1]]))
        path.reverse()
        return float(dist[ti]), max(sd, td), path

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "h": self.h,
            "hop_radius": self.hop_radius,
            "n_nodes": len(self.nodes),
            "n_edges": int(self.matrix.nnz // 2),
            "provenance": self.provenance,
        }


def _lattice_in_box(lo, hi, h):
    """Points of h * Z^k inside [lo, hi]; anchored at 0 so refining h -> h/2
    keeps every existing node (nesting gives refinement monotonicity)."""
    axes = []
    for a, b in zip(lo, hi):
        k0 = math.ceil(a / h - 1e-12)
        k1 = math.floor(b / h + 1e-12)
        axes.append(np.arange(k0, k1 + 1) * h)
    if not axes:                      # 0-dimensional subface: a single point
        return np.zeros((1, 0))
    if any(len(ax) == 0 for ax in axes):
        return np.zeros((0, len(axes)))
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def build_graph(cx: Complex, region: Region, h: float, hop_radius: float | None = None,
                parallelism: int = 1) -> DiscretizationGraph:
    """Deterministic lattice graph at resolution h (hop radius defaults to 4h)."""
    if h <= 0:
        raise InputError("h must be positive")
    hop = 4.0 * h if hop_radius is None else hop_radius

    def face_samples(fid):
        face = cx.faces[fid]
        lo, hi = region.boxes[fid]
        pts = [x for x in _lattice_in_box(lo, hi, h) if face.contains(x, 1e-12)]
        for sub in face.subfaces:
            # clamp unbounded subfaces to the region: any in-window point of
            # the subface has parameters within the box diameter of the origin
            corners = np.array([[lo[k] if bit & (1 << k) else hi[k] for k in range(len(lo))]
                                for bit in range(1 << len(lo))])
            if sub.dim:
                smin = np.linalg.svd(sub.basis, compute_uv=False).min()
                reach = np.linalg.norm(corners - sub.origin, axis=1).max() / max(smin, 1e-12) + h
            else:
                reach = 0.0
            slo = np.maximum(sub.lo, -reach)
            shi = np.minimum(sub.hi, reach)
            for u in _lattice_in_box(np.atleast_1d(slo), np.atleast_1d(shi), h):
                x = sub.embed(u)
                if face.contains(x, 1e-12) and np.all(x >= lo - 1e-12) and np.all(x <= hi + 1e-12):
                    pts.append(x)
        return fid, pts

    sampled = pmap(face_samples, sorted(region.boxes), parallelism)

    # canonical de-duplication so gluing-line nodes are shared between faces
    nodes: list[Point] = []
    index: dict = {}
    incidence: dict = {fid: [] for fid in region.boxes}
    for fid, pts in sampled:
        for x in pts:
            p = cx.canonical(Point.of(fid, x))
            key = (p.face, tuple(np.round(np.asarray(p.coords) / h * 4.0).astype(int)))
            i = index.get(key)
            if i is None:
                i = len(nodes)
                index[key] = i
                nodes.append(p)
    for i, p in enumerate(nodes):
        for rep in cx.representations(p):
            if rep.face in incidence:
                incidence[rep.face].append((i, rep.x))

    node_pos = {}
    weights: dict = {}
    for fid in sorted(incidence):
        items = incidence[fid]
        idx = np.array([i for i, _ in items], dtype=int)
        pos = np.array([x for _, x in items], dtype=float).reshape(len(items), -1)
        node_pos[fid] = (idx, pos)
        if len(items) < 2:
            continue
        norm = cx.faces[fid].norm
        tree = cKDTree(pos)
        for a, b in tree.query_pairs(hop + 1e-12):
            ia, ib = int(idx[a]), int(idx[b])
            if ia == ib:
                continue
            key = (ia, ib) if ia < ib else (ib, ia)
            w = norm.eval(pos[b] - pos[a])
            # the same pair can be seen from both sides of a gluing; the
            # cheaper chart segment wins
            if w < weights.get(key, math.inf):
                weights[key] = w
    n = len(nodes)
    rows, cols, vals = [], [], []
    for (ia, ib), w in weights.items():
        rows.extend((ia, ib))
        cols.extend((ib, ia))
        vals.extend((w, w))
    matrix = coo_matrix((vals, (rows, cols)), shape=(n, n))
    return DiscretizationGraph(cx, h, hop, nodes, node_pos, matrix,
                               provenance={"h": h, "hop_radius": hop,
                                           "faces": sorted(region.boxes)})


def oracle_distance(graph: DiscretizationGraph, p: Point, q: Point) -> float:
    return graph.distance(p, q)[0]


# ---------------------------------------------------------------------------
# exhaustive enumeration and uniqueness scanning


def enumerate_geodesics(cx: Complex, p: Point, q: Point, max_faces: int = 8,
                        tol: float = 1e-6, geo_tol: float = 1e-7,
                        cfg: SearchConfig | None = None) -> list[VertexPath]:
    """All locally geodesic broken lines within `tol` of the shortest, over
    chains of up to max_faces faces."""
    cfg = cfg or SearchConfig(max_faces=max_faces, cluster=tol)
    cand = shortest_paths(cx, p, q, cfg)
    out = []
    for c in cand:
        path = c.path
        if is_local_geodesic_onesided(cx, path, geo_tol):
            out.append(path)
    return out


@dataclass
class ScanPair:
    p: Point
    q: Point
    n_minimizers: int
    slack: float
    witnesses: list

    @property
    def ambiguous(self) -> bool:
        return self.n_minimizers > 1 or self.slack > 0


@dataclass
class ScanReport:
    n_pairs: int
    n_ambiguous: int
    pairs: list

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "n_pairs": self.n_pairs,
            "n_ambiguous": self.n_ambiguous,
            "ambiguous": [
                {
                    "from": {"face": s.p.face, "coords": list(s.p.coords)},
                    "to": {"face": s.q.face, "coords": list(s.q.coords)},
                    "n_minimizers": s.n_minimizers,
                    "fan_slack": s.slack,
                    "witnesses": [w.to_json() for w in s.witnesses],
                }
                for s in self.pairs if s.ambiguous
            ],
        }


def uniqueness_scan(cx: Complex, region: Region, radius: float, n_pairs: int,
                    seed: int = 0, cfg: SearchConfig | None = None,
                    slack_tol: float = 1e-9, parallelism: int = 1) -> ScanReport:
    """Sample nearby pairs and look for non-unique shortest paths or fans.

    A pair is ambiguous when several distinct minimizers exist, or when the
    minimizer carries strictly positive one-sided slack at a crossing vertex
    (the corner-norm signature of a geodesic fan).  Witness paths are attached.
    """
    cfg = cfg or SearchConfig()
    rng = np.random.default_rng(seed)
    fids = sorted(region.boxes)
    tasks = []
    while len(tasks) < n_pairs:
        fid = fids[rng.integers(len(fids))]
        lo, hi = region.boxes[fid]
        face = cx.faces[fid]
        x = rng.uniform(lo, hi)
        if not face.contains(x, 1e-12):
            continue
        d = rng.normal(size=face.dim)
        d *= radius * rng.uniform(0.3, 1.0) / max(face.norm.eval(d), 1e-12)
        y = x + d
        # place the displaced endpoint in whichever face of the shared chart
        # frame contains it (the sampling face first, then its peers in id
        # order), so pairs may straddle gluings
        for f2 in [fid] + [f for f in fids if f != fid]:
            lo2, hi2 = region.boxes[f2]
            if (cx.faces[f2].contains(y, 1e-12)
                    and np.all(y >= lo2) and np.all(y <= hi2)):
                tasks.append((Point.of(fid, x), Point.of(f2, y)))
                break

    def scan_one(pair):
        p, q = pair
        cand = shortest_paths(cx, p, q, cfg)
        witnesses = [c.path for c in cand]
        slack = fan_slack(cx, cand[0].path, slack_tol)
        if slack > slack_tol and len(cand) == 1:
            w = _fan_witness(cx, cand[0].path, slack_tol)
            if w is not None:
                witnesses.append(w)
        return ScanPair(p, q, len(cand), slack if slack > slack_tol else 0.0, witnesses)

    pairs = pmap(scan_one, tasks, parallelism)
    return ScanReport(n_pairs, sum(1 for s in pairs if s.ambiguous), pairs)


def _fan_witness(cx: Complex, path: VertexPath, tol: float,
                 offsets=(1e-2, 1e-3, 1e-4)) -> VertexPath | None:
    """Slide slack-carrying crossing vertices along their subface and return a
    perturbed broken line that is still locally geodesic."""
    path = path.normalized()
    for i in range(1, path.n_edges):
        if path.edge_faces[i - 1] == path.edge_faces[i]:
            continue
        worst, slack = onesided_vertex_slack(cx, path, i)
        if worst < -tol or slack <= tol:
            continue
        f_prev = path.edge_faces[i - 1]
        for g in cx.edge_between(f_prev, path.edge_faces[i]):
            forward = g.face_a == f_prev
            sub = cx.faces[f_prev].subfaces[g.sub_a if forward else g.sub_b]
            x = cx.transition(path.points[i], f_prev).x
            u = sub.params_of(x, 1e-8)
            if u is None or sub.dim == 0:
                continue
            for eps in offsets:
                for sign in (1.0, -1.0):
                    u2 = np.clip(u + sign * eps * np.ones(sub.dim), sub.lo, sub.hi)
                    pts = list(path.points)
                    pts[i] = cx.canonical(Point.of(f_prev, sub.embed(u2)))
                    try:
                        cand = VertexPath(cx, pts, list(path.edge_faces))
                    except Exception:
                        continue
                    if is_local_geodesic_onesided(cx, cand, tol * 10):
                        return cand
    return None
