"""Midpoint shortening of broken lines.

One step of the map T replaces an n-edge sequence x_0..x_n (endpoints pinned)
by x_0, x'_1..x'_{n-1}, x_n where

    y_i  = midpoint(x_{i-1}, x_i)          i = 1..n
    x'_i = midpoint(y_i, y_{i+1})          i = 1..n-1.

Each step is non-increasing in total length L, in the longest edge delta, and
in the energy E = sum of squared edge lengths; fixed points are exactly the
geodesics with equal edge lengths.  Iterating T from an admissible sequence
(2 delta < uniqueness radius of the region) converges to a geodesic with the
same endpoints in the same homotopy class.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex import Complex, Point
from .config import Tolerances
from .errors import InputError, NonConvergenceError
from .paths import (
    SearchConfig,
    VertexPath,
    fast_midpoint,
    local_distance,
    path_distance,
    shortest_paths,
)


def _midpoint_config(cfg: SearchConfig | None) -> SearchConfig:
    """Midpoints of admissible edges are local: keep the chain search shallow."""
    if cfg is not None:
        return cfg
    return SearchConfig(max_faces=3, max_chains=64)


# ---------------------------------------------------------------------------
# sequences and admissibility


def sequence_distances(cx: Complex, points: list[Point],
                       cfg: SearchConfig | None = None) -> np.ndarray:
    cfg = _midpoint_config(cfg)
    return np.array([
        local_distance(cx, points[i], points[i + 1], cfg)[0]
        for i in range(len(points) - 1)
    ])


def sequence_length(cx: Complex, points: list[Point], cfg=None) -> float:
    return float(sequence_distances(cx, points, cfg).sum())


def sequence_delta(cx: Complex, points: list[Point], cfg=None) -> float:
    return float(sequence_distances(cx, points, cfg).max())


def sequence_energy(cx: Complex, points: list[Point], cfg=None) -> float:
    return float((sequence_distances(cx, points, cfg) ** 2).sum())


@dataclass
class AdmissibleSequence:
    """A point sequence whose longest gap is under half the uniqueness radius."""

    cx: Complex
    points: list
    rho: float
    delta: float = field(init=False)

    def __post_init__(self):
        if len(self.points) < 2:
            raise InputError("need at least two points")
        self.delta = sequence_delta(self.cx, self.points)
        if 2.0 * self.delta >= self.rho:
            raise InputError(
                f"sequence not admissible: 2*delta = {2 * self.delta:.6g} "
                f">= rho = {self.rho:.6g}"
            )


# ---------------------------------------------------------------------------
# the shortening map


def shorten_points(cx: Complex, points: list[Point], cfg: SearchConfig | None = None,
                   warm: dict | None = None) -> list[Point]:
    """One application of T to the point sequence (endpoints pinned)."""
    cfg = _midpoint_config(cfg)
    n = len(points) - 1
    if n < 2:
        return list(points)

    def mid(key, a, b):
        if warm is None:
            return fast_midpoint(cx, a, b, cfg)
        w = warm.setdefault(key, {})
        return fast_midpoint(cx, a, b, cfg, warm=w)

    y = [mid(("y", i), points[i - 1], points[i]) for i in range(1, n + 1)]
    out = [points[0]]
    for i in range(1, n):
        out.append(mid(("x", i), y[i - 1], y[i]))
    out.append(points[n])
    return out


def materialize(cx: Complex, points: list[Point],
                cfg: SearchConfig | None = None) -> VertexPath:
    """Broken line through the sequence: concatenation of the shortest
    segments between consecutive points (crossing vertices included)."""
    cfg = _midpoint_config(cfg)
    pts: list[Point] = [points[0]]
    faces: list[int] = []
    for i in range(len(points) - 1):
        _, piece = local_distance(cx, points[i], points[i + 1], cfg)
        pts.extend(piece.points[1:])
        faces.extend(piece.edge_faces)
    return VertexPath(cx, pts, faces, check=False).normalized()


def shorten_step(cx: Complex, path: VertexPath,
                 cfg: SearchConfig | None = None) -> VertexPath:
    """T on a broken line (vertices taken as the sequence)."""
    return materialize(cx, shorten_points(cx, path.points, cfg), cfg)


def _displacement(cx: Complex, old: list[Point], new: list[Point]) -> float:
    worst = 0.0
    for a, b in zip(old, new):
        best = math.inf
        for f in cx.common_faces(a, b):
            pa = cx.transition(a, f).x
            pb = cx.transition(b, f).x
            best = min(best, float(np.linalg.norm(pa - pb)))
        worst = max(worst, best if math.isfinite(best) else 1.0)
    return worst


@dataclass
class ShorteningResult:
    points: list
    path: VertexPath
    iterations: int
    converged: bool
    displacement: float
    history: list  # (iteration, L, delta, E) samples

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "iterations": self.iterations,
            "converged": self.converged,
            "displacement": self.displacement,
            "history": [list(h) for h in self.history],
            "path": self.path.to_json(),
        }


def shorten_to_geodesic(cx: Complex, points_or_path, tol: float = 1e-9,
                        max_iter: int = 100_000, cfg: SearchConfig | None = None,
                        history_every: int = 50) -> ShorteningResult:
    """Iterate T until the maximal vertex displacement per step drops below
    tol.  Raises NonConvergenceError (with the trailing displacement history)
    if the budget runs out first."""
    cfg = _midpoint_config(cfg)
    if isinstance(points_or_path, VertexPath):
        points = list(points_or_path.points)
    else:
        points = list(points_or_path)
    warm: dict = {}
    history = []
    tail = []
    disp = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        new_points = shorten_points(cx, points, cfg, warm=warm)
        disp = _displacement(cx, points, new_points)
        points = new_points
        tail.append(disp)
        if len(tail) > 20:
            tail.pop(0)
        if it % history_every == 0 or disp < tol:
            d = sequence_distances(cx, points, cfg)
            history.append((it, float(d.sum()), float(d.max()), float((d * d).sum())))
        if disp < tol:
            break
    else:
        raise NonConvergenceError(
            f"shortening did not reach displacement {tol:g} in {max_iter} steps "
            f"(last: {disp:.3e})", trajectory_tail=tail)
    return ShorteningResult(points, materialize(cx, points, cfg), it, True, disp, history)


# ---------------------------------------------------------------------------
# uniqueness radius and homotopy


def _sample_chart_points(cx: Complex, count: int, rng, bounds: float = 4.0):
    """Random points in random faces (bounded faces via their vertex hull,
    unbounded faces via rejection in a [-bounds, bounds] box)."""
    fids = sorted(cx.faces)
    out = []
    guard = 0
    while len(out) < count and guard < 200 * count:
        guard += 1
        fid = fids[rng.integers(len(fids))]
        face = cx.faces[fid]
        if face.vertices is not None:
            w = rng.dirichlet(np.ones(len(face.vertices)))
            x = w @ face.vertices
        else:
            x = rng.uniform(-bounds, bounds, size=face.dim)
        if face.contains(x, 1e-12):
            out.append(Point.of(fid, x))
    return out


def uniqueness_radius(cx: Complex, seed: int = 0, samples: int = 30,
                      r_max: float = 1.0, bounds: float = 4.0,
                      cfg: SearchConfig | None = None) -> float:
    """Sampled, conservative radius under which shortest paths were unique.

    Binary search over r: for each trial radius, random nearby pairs are
    checked for multiple minimizers; the largest passing radius is halved for
    safety.  A Monte Carlo certificate, not a proof.
    """
    cfg = cfg or SearchConfig()
    rng = np.random.default_rng(seed)
    centers = _sample_chart_points(cx, samples, rng, bounds)

    def unique_at(r: float) -> bool:
        for p in centers:
            face = cx.faces[p.face]
            for _ in range(3):
                d = rng.normal(size=face.dim)
                d *= r / max(face.norm.eval(d), 1e-12)
                q_x = p.x + d
                if not face.contains(q_x, 1e-12):
                    continue
                try:
                    cand = shortest_paths(cx, p, Point.of(p.face, q_x), cfg)
                except Exception:
                    return False
                if len(cand) > 1:
                    return False
        return True

    lo_r, hi_r = 0.0, r_max
    if unique_at(r_max):
        return 0.5 * r_max
    for _ in range(20):
        mid_r = 0.5 * (lo_r + hi_r)
        if unique_at(mid_r):
            lo_r = mid_r
        else:
            hi_r = mid_r
    return 0.5 * lo_r


def subdivide(cx: Complex, path: VertexPath, pieces: int) -> list[Point]:
    """Equal-arclength point sequence along the broken line."""
    total = path.length()
    return [cx.canonical(path.point_at(total * k / pieces)) for k in range(pieces + 1)]


def homotopy_unique(cx: Complex, path_a: VertexPath, path_b: VertexPath,
                    rho: float, tol: float = 1e-9, match_tol: float = 1e-6,
                    max_iter: int = 100_000) -> tuple[bool, ShorteningResult, ShorteningResult]:
    """Shorten two paths with common endpoints and compare the limits.

    Both are subdivided into more than 2 L / rho pieces so the sequences are
    admissible throughout, then driven to their limit geodesics; they are
    homotopic through short paths iff the limits coincide (within match_tol).
    """
    l_max = max(path_a.length(), path_b.length())
    pieces = max(2, int(math.ceil(2.0 * l_max / rho)) + 1)
    res_a = shorten_to_geodesic(cx, subdivide(cx, path_a, pieces), tol, max_iter)
    res_b = shorten_to_geodesic(cx, subdivide(cx, path_b, pieces), tol, max_iter)
    same = path_distance(res_a.path, res_b.path, 33) <= match_tol
    return same, res_a, res_b
