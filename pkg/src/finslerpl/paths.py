"""Broken lines and local distance computation.

The workhorse is `shortest_paths`: enumerate the combinatorial types a path
between two nearby points can have (which gluings it crosses, in what order),
then minimize length over the crossing coordinates for each type.  For a fixed
type the length is a convex function of the crossings, because every term is a
norm of an affine function of them; the minimizer is found by projected
gradient descent with backtracking plus a derivative-free polish that copes
with the corner loci of non-smooth norms.

Midpoints, the geodesic predicate, orthogonal slices and the flat-strip
Busemann inequalities all build on this.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .complex import Complex, Gluing, Point, Subface
from .config import Tolerances
from .errors import (
    IncidenceError,
    InputError,
    NonSmoothPointError,
    NonUniqueMidpointError,
    OutOfRangeError,
)
from .norms import Norm

# ---------------------------------------------------------------------------
# vertex paths


class VertexPath:
    """A broken line: vertices x_0..x_n with a face assignment per edge."""

    def __init__(self, cx: Complex, points: list[Point], edge_faces: list[int],
                 check: bool = True):
        if len(points) < 2 or len(edge_faces) != len(points) - 1:
            raise InputError("need n+1 vertices and n edge faces")
        self.cx = cx
        self.points = list(points)
        self.edge_faces = list(edge_faces)
        if check:
            for p in points:
                if not cx.faces[p.face].contains(p.x, cx.tol.structural * 10):
                    raise IncidenceError(f"{p} lies outside its own face")
            for i, f in enumerate(self.edge_faces):
                cx.transition(points[i], f)
                cx.transition(points[i + 1], f)
        self._lengths: np.ndarray | None = None

    # -- functionals -----------------------------------------------------

    def edge_vector(self, i: int) -> np.ndarray:
        f = self.edge_faces[i]
        p = self.cx.transition(self.points[i], f)
        q = self.cx.transition(self.points[i + 1], f)
        return q.x - p.x

    def edge_lengths(self) -> np.ndarray:
        if self._lengths is None:
            self._lengths = np.array([
                self.cx.faces[self.edge_faces[i]].norm.eval(self.edge_vector(i))
                for i in range(len(self.edge_faces))
            ])
        return self._lengths

    def length(self) -> float:
        return float(self.edge_lengths().sum())

    def max_edge(self) -> float:
        return float(self.edge_lengths().max())

    def energy(self) -> float:
        return float((self.edge_lengths() ** 2).sum())

    @property
    def n_edges(self) -> int:
        return len(self.edge_faces)

    # -- geometry --------------------------------------------------------

    def normalized(self, zero_tol: float = 1e-12) -> "VertexPath":
        """Drop zero-length edges and straight interior vertices.

        The shortening map and degenerate chain minimizers both produce
        vertices that carry no geometry (zero edges, or a vertex on the
        straight segment between its neighbors inside one face); removing them
        gives a canonical broken line for comparisons.
        """
        pts = [self.points[0]]
        faces = []
        for i in range(self.n_edges):
            if self.edge_lengths()[i] <= zero_tol:
                continue
            pts.append(self.points[i + 1])
            faces.append(self.edge_faces[i])
        if not faces:  # fully degenerate path
            return VertexPath(self.cx, [self.points[0], self.points[-1]],
                              [self.edge_faces[0]], check=False)
        out_pts = [pts[0]]
        out_faces = []
        for i in range(len(faces)):
            if out_faces and out_faces[-1] == faces[i]:
                f = faces[i]
                u = self.cx.transition(out_pts[-1], f).x - self.cx.transition(out_pts[-2], f).x
                v = self.cx.transition(pts[i + 1], f).x - self.cx.transition(out_pts[-1], f).x
                nu, nv = np.linalg.norm(u), np.linalg.norm(v)
                if nu > 0 and nv > 0:
                    cross = u / nu - v / nv
                    if np.linalg.norm(cross) <= 1e-12:
                        out_pts[-1] = pts[i + 1]  # merge the straight vertex
                        continue
            out_pts.append(pts[i + 1])
            out_faces.append(faces[i])
        return VertexPath(self.cx, out_pts, out_faces, check=False)

    def point_at(self, arclength: float) -> Point:
        """Point at the given arc length from the start (norm-linear per edge)."""
        lens = self.edge_lengths()
        total = lens.sum()
        s = min(max(arclength, 0.0), float(total))
        acc = 0.0
        for i, li in enumerate(lens):
            if s <= acc + li or i == len(lens) - 1:
                t = 0.0 if li == 0 else (s - acc) / li
                f = self.edge_faces[i]
                p = self.cx.transition(self.points[i], f)
                q = self.cx.transition(self.points[i + 1], f)
                return Point.of(f, (1 - t) * p.x + t * q.x)
            acc += li
        return self.points[-1]

    def resample(self, count: int) -> list[Point]:
        total = self.length()
        return [self.point_at(total * k / (count - 1)) for k in range(count)]

    # -- export ----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "vertices": [{"face": p.face, "coords": list(p.coords)} for p in self.points],
            "edge_faces": self.edge_faces,
            "length": self.length(),
            "max_edge": self.max_edge(),
            "energy": self.energy(),
        }

    @staticmethod
    def from_json(cx: Complex, d: dict) -> "VertexPath":
        pts = [Point.of(v["face"], v["coords"]) for v in d["vertices"]]
        return VertexPath(cx, pts, list(d["edge_faces"]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        dim = len(self.points[0].coords)
        w.writerow(["index", "face_id"] + [f"x{k}" for k in range(dim)] + ["cumulative_length"])
        cum = np.concatenate([[0.0], np.cumsum(self.edge_lengths())])
        for i, p in enumerate(self.points):
            w.writerow([i, p.face] + [repr(c) for c in p.coords] + [repr(float(cum[i]))])
        return buf.getvalue()


def path_distance(p1: VertexPath, p2: VertexPath, samples: int = 33) -> float:
    """Max chart distance between same-fraction samples (arc-length parameterized)."""
    cx = p1.cx
    worst = 0.0
    for a, b in zip(p1.resample(samples), p2.resample(samples)):
        best = math.inf
        for ra in cx.representations(a):
            for rb in cx.representations(b):
                if ra.face == rb.face:
                    best = min(best, float(np.linalg.norm(ra.x - rb.x)))
        if math.isinf(best):
            return math.inf
        worst = max(worst, best)
    return worst


# ---------------------------------------------------------------------------
# chains: combinatorial path types


@dataclass(frozen=True)
class Chain:
    faces: tuple          # f_0 .. f_k
    steps: tuple          # k items: (gluing index, forward flag)


@dataclass
class SearchConfig:
    max_faces: int = 8
    max_chains: int = 4000
    max_visits: int = 2
    cluster: float = 1e-6       # near-minimal band reported by shortest_paths
    dedup: float = 1e-5         # geometric identity threshold for paths
    pgd_max_iter: int = 500
    pgd_tol: float = 1e-13
    param_bound: float = 1e3    # replaces infinite subface boxes
    polish: bool = True


def enumerate_chains(cx: Complex, a: Point, b: Point, cfg: SearchConfig) -> list[Chain]:
    start_faces = sorted(cx.star(a))
    end_faces = set(cx.star(b))
    chains: list[Chain] = []
    for f0 in start_faces:
        if f0 in end_faces:
            chains.append(Chain((f0,), ()))

    gl = cx.gluings

    def dfs(face, faces, steps, visits):
        if len(chains) >= cfg.max_chains or len(faces) >= cfg.max_faces:
            return
        for gi, g in enumerate(gl):
            for forward in (True, False):
                src = g.face_a if forward else g.face_b
                dst = g.face_b if forward else g.face_a
                if src != face:
                    continue
                if steps and steps[-1] == (gi, not forward):
                    continue  # immediately undoing the previous crossing
                if visits.get(dst, 0) >= cfg.max_visits:
                    continue
                faces2 = faces + (dst,)
                steps2 = steps + ((gi, forward),)
                if dst in end_faces:
                    chains.append(Chain(faces2, steps2))
                visits[dst] = visits.get(dst, 0) + 1
                dfs(dst, faces2, steps2, visits)
                visits[dst] -= 1

    for f0 in start_faces:
        dfs(f0, (f0,), (), {f0: 1})
    return chains


# ---------------------------------------------------------------------------
# convex minimization over crossing coordinates


class _ChainProblem:
    """Length of a broken line with fixed combinatorial type, as a function of
    the crossing coordinates (concatenated subface parameters)."""

    def __init__(self, cx: Complex, chain: Chain, a: Point, b: Point,
                 cfg: SearchConfig):
        self.cx = cx
        self.chain = chain
        self.cfg = cfg
        self.ax = cx.transition(a, chain.faces[0]).x
        self.bx = cx.transition(b, chain.faces[-1]).x
        self.norms: list[Norm] = [cx.faces[f].norm for f in chain.faces]
        self.all_smooth = all(n.smooth for n in self.norms)
        self.crossings = []
        lo, hi = [], []
        for (gi, forward), f_prev in zip(chain.steps, chain.faces[:-1]):
            g = cx.gluings[gi]
            if forward:
                sub_prev = cx.faces[g.face_a].subfaces[g.sub_a]
                sub_next = cx.faces[g.face_b].subfaces[g.sub_b]
                m, c = g.matrix, g.offset
            else:
                sub_prev = cx.faces[g.face_b].subfaces[g.sub_b]
                sub_next = cx.faces[g.face_a].subfaces[g.sub_a]
                m = np.linalg.inv(g.matrix) if g.matrix.size else g.matrix
                c = -(m @ g.offset) if g.matrix.size else np.zeros(0)
            self.crossings.append((sub_prev, sub_next, m, c))
            lo.append(np.where(np.isfinite(sub_prev.lo), sub_prev.lo, -cfg.param_bound))
            hi.append(np.where(np.isfinite(sub_prev.hi), sub_prev.hi, cfg.param_bound))
        self.m_dims = [s[0].dim for s in self.crossings]
        self.offsets = np.concatenate([[0], np.cumsum(self.m_dims)]).astype(int)
        self.lo = np.concatenate(lo) if lo else np.zeros(0)
        self.hi = np.concatenate(hi) if hi else np.zeros(0)
        self.nvar = int(self.offsets[-1])

    def split(self, u: np.ndarray) -> list[np.ndarray]:
        return [u[self.offsets[i]:self.offsets[i + 1]] for i in range(len(self.m_dims))]

    def segment_points(self, u: np.ndarray):
        """Chart endpoints of every segment; segment i lives in chain.faces[i]."""
        pts_prev, pts_next = [], []
        for ui, (sp, sn, m, c) in zip(self.split(u), self.crossings):
            pts_prev.append(sp.embed(ui))
            pts_next.append(sn.embed(m @ ui + c if ui.size else c))
        starts = [self.ax] + pts_next
        ends = pts_prev + [self.bx]
        return starts, ends

    def value(self, u: np.ndarray) -> float:
        starts, ends = self.segment_points(u)
        total = 0.0
        for n, s, e in zip(self.norms, starts, ends):
            total += n.eval(e - s)
        return total

    def value_grad(self, u: np.ndarray):
        starts, ends = self.segment_points(u)
        segs = [e - s for s, e in zip(starts, ends)]
        grads = []
        total = 0.0
        for n, v in zip(self.norms, segs):
            l = n.eval(v)
            total += l
            if l < 1e-14:
                grads.append(np.zeros_like(v))
            else:
                try:
                    grads.append(n.grad(v))
                except NonSmoothPointError:
                    # subgradient at a corner: finite one-sided slopes per axis
                    dim = v.shape[0]
                    grads.append(np.array([
                        n.dir_deriv(v, np.eye(dim)[k], "plus") for k in range(dim)
                    ]))
        g = np.zeros(self.nvar)
        for i, (sp, sn, m, c) in enumerate(self.crossings):
            sl = slice(self.offsets[i], self.offsets[i + 1])
            jac_prev = sp.basis            # (m, k): d x_prev / d u is its transpose
            # x_next(u) = o + B_n^T (M u + c)  =>  Jacobian B_n^T M
            jac_next = sn.basis.T @ m if m.size else sn.basis.T
            g[sl] += jac_prev @ grads[i]            # end of segment i
            g[sl] -= (jac_next.T @ grads[i + 1]) if m.size else np.zeros(self.m_dims[i])
        return total, g

    def clip(self, u: np.ndarray) -> np.ndarray:
        return np.minimum(np.maximum(u, self.lo), self.hi)

    def init_params(self) -> np.ndarray:
        """Foot of the start point on each crossing line, clipped to its box."""
        out = np.zeros(self.nvar)
        ref = self.ax
        for i, (sp, sn, m, c) in enumerate(self.crossings):
            sl = slice(self.offsets[i], self.offsets[i + 1])
            if sp.dim:
                bt = sp.basis  # (m, k)
                u, *_ = np.linalg.lstsq(bt.T, ref - sp.origin, rcond=None)
                out[sl] = u
            ref = sn.embed(m @ out[sl] + c if out[sl].size else c)
        return self.clip(out)

    # -- solvers ---------------------------------------------------------

    def solve(self, warm: tuple | None = None):
        if self.nvar == 0:
            return self.value(np.zeros(0)), np.zeros(0), 1.0
        if warm is not None:
            u = self.clip(warm[0].copy())
            step = warm[1]
        else:
            u = self.init_params()
            step = 1.0
        f, g = self.value_grad(u)
        scale = max(f, 1e-12)
        for _ in range(self.cfg.pgd_max_iter):
            d = self.clip(u - step * g) - u
            gd = float(g @ d)
            if np.linalg.norm(d) < 1e-15:
                step *= 0.5
                if step < 1e-14:
                    break
                continue
            # backtracking on the projected-arc step
            accepted = False
            for _ in range(40):
                u_new = self.clip(u - step * g)
                f_new = self.value(u_new)
                d = u_new - u
                if f_new <= f + 1e-4 * float(g @ d):
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
            improvement = f - f_new
            u, f = u_new, f_new
            _, g = self.value_grad(u)
            step = min(step * 1.5, 1e6)
            if improvement < self.cfg.pgd_tol * scale:
                break
        # the derivative-free polish only earns its cost on corner loci, which
        # smooth chains do not have
        if self.cfg.polish and not self.all_smooth:
            u, f = self._polish(u, f)
        return f, u, step

    def _polish(self, u, f):
        """Derivative-free 1-D refinements; exact on corner loci of the objective."""
        dirs = [np.eye(self.nvar)[k] for k in range(self.nvar)]
        if self.nvar > 1:
            dirs.append(np.ones(self.nvar) / math.sqrt(self.nvar))
        for _ in range(3):
            improved = False
            for d in dirs:
                u2, f2 = self._line_min(u, d, f)
                if f2 < f - 1e-15:
                    improved = True
                u, f = u2, f2
            if not improved:
                break
        return u, f

    def _line_min(self, u, d, f0):
        # bracket within the box
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hi = np.where(d > 0, (self.hi - u) / d, np.where(d < 0, (self.lo - u) / d, np.inf))
            t_lo = np.where(d > 0, (self.lo - u) / d, np.where(d < 0, (self.hi - u) / d, -np.inf))
        hi = float(np.min(t_hi))
        lo = float(np.max(t_lo))
        span = max(abs(hi), abs(lo), 1.0)
        hi = min(hi, span)
        lo = max(lo, -span)
        if hi - lo < 1e-15:
            return u, f0

        phi = lambda t: self.value(self.clip(u + t * d))
        # golden-section on the convex section function
        gr = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        c1 = b - gr * (b - a)
        c2 = a + gr * (b - a)
        f1, f2 = phi(c1), phi(c2)
        for _ in range(90):
            if f1 <= f2:
                b, c2, f2 = c2, c1, f1
                c1 = b - gr * (b - a)
                f1 = phi(c1)
            else:
                a, c1, f1 = c1, c2, f2
                c2 = a + gr * (b - a)
                f2 = phi(c2)
            if b - a < 1e-14 * max(1.0, abs(a) + abs(b)):
                break
        t = 0.5 * (a + b)
        ft = phi(t)
        if ft < f0:
            return self.clip(u + t * d), ft
        return u, f0

    def to_path(self, u: np.ndarray) -> VertexPath:
        starts, ends = self.segment_points(u)
        pts = [Point.of(self.chain.faces[0], self.ax)]
        for i in range(len(self.crossings)):
            pts.append(Point.of(self.chain.faces[i], ends[i]))
        pts.append(Point.of(self.chain.faces[-1], self.bx))
        return VertexPath(self.cx, pts, list(self.chain.faces), check=False).normalized()


# ---------------------------------------------------------------------------
# local distances and midpoints


class PathCandidate:
    """Solved chain; the broken line itself is materialized on first access."""

    def __init__(self, length: float, chain: Chain, params: np.ndarray, prob: "_ChainProblem"):
        self.length = length
        self.chain = chain
        self.params = params
        self._prob = prob
        self._path: VertexPath | None = None

    @property
    def path(self) -> VertexPath:
        if self._path is None:
            self._path = self._prob.to_path(self.params)
        return self._path


def shortest_paths(cx: Complex, a: Point, b: Point, cfg: SearchConfig | None = None,
                   warm: dict | None = None) -> list[PathCandidate]:
    """All near-minimal paths between a and b over enumerated chain types.

    Returns candidates within `cfg.cluster` (relative) of the minimum length,
    de-duplicated geometrically, sorted by length.
    """
    cfg = cfg or SearchConfig()
    chains = enumerate_chains(cx, a, b, cfg)
    if not chains:
        raise OutOfRangeError("no covering face chain between the points within the search bound")
    results: list[PathCandidate] = []
    for chain in chains:
        prob = _ChainProblem(cx, chain, a, b, cfg)
        w = warm.get(chain) if warm is not None else None
        length, u, step = prob.solve(w)
        if warm is not None:
            warm[chain] = (u, step)
        results.append(PathCandidate(length, chain, u, prob))
    results.sort(key=lambda r: r.length)
    best = results[0].length
    band = [r for r in results if r.length <= best + cfg.cluster * max(best, 1.0)]
    # geometric de-duplication (solver jitter and chains degenerating onto one
    # another must not inflate minimizer counts); try the cheap vertex-list
    # comparison first, fall back to sampled Hausdorff distance
    kept: list[PathCandidate] = []
    for r in band:
        if all(not _same_path(cx, r.path, k.path, cfg.dedup) for k in kept):
            kept.append(r)
    return kept


def _same_path(cx: Complex, p1: VertexPath, p2: VertexPath, tol: float) -> bool:
    if len(p1.points) == len(p2.points):
        ok = True
        for a, b in zip(p1.points, p2.points):
            if a.face == b.face:
                if np.linalg.norm(a.x - b.x) > tol:
                    ok = False
                    break
            else:
                ok = False
                break
        if ok:
            return True
    return path_distance(p1, p2, 17) <= tol


def local_distance(cx: Complex, a: Point, b: Point,
                   cfg: SearchConfig | None = None) -> tuple[float, VertexPath]:
    cand = shortest_paths(cx, a, b, cfg)
    return cand[0].length, cand[0].path


def midpoint(cx: Complex, a: Point, b: Point, cfg: SearchConfig | None = None,
             warm: dict | None = None) -> Point:
    """The point halfway along the (unique) shortest path from a to b."""
    cfg = cfg or SearchConfig()
    cand = shortest_paths(cx, a, b, cfg, warm=warm)
    if len(cand) > 1:
        raise NonUniqueMidpointError(
            f"{len(cand)} distinct minimizers within tolerance between {a} and {b}"
        )
    path = cand[0].path
    return cx.canonical(path.point_at(0.5 * path.length()))


def fast_midpoint(cx: Complex, a: Point, b: Point, cfg: SearchConfig,
                  warm: dict | None = None) -> Point:
    """Midpoint with a single-face shortcut.

    If both points lie in one face and the straight segment stays farther from
    the face boundary than its own length, no competing chain can beat it (a
    detour would cost more than the direct norm length); the midpoint is then
    the affine midpoint.  Otherwise fall back to the full search.
    """
    common = cx.common_faces(a, b)
    for f in common:
        face = cx.faces[f]
        pa = cx.transition(a, f).x
        pb = cx.transition(b, f).x
        seg_len = face.norm.eval(pb - pa)
        if face.ineq_a.shape[0] == 0:
            return Point.of(f, 0.5 * (pa + pb))
        margin = face.ineq_b - np.maximum(face.ineq_a @ pa, face.ineq_a @ pb)
        row_scale = np.linalg.norm(face.ineq_a, axis=1)
        if np.all(margin >= seg_len * row_scale):
            return Point.of(f, 0.5 * (pa + pb))
    return midpoint(cx, a, b, cfg, warm=warm)


# ---------------------------------------------------------------------------
# geodesic predicates


def is_geodesic_sequence(cx: Complex, s: VertexPath, tol: float = 1e-9,
                         cfg: SearchConfig | None = None) -> bool:
    """True iff every consecutive triple satisfies |x_{i-1}x_i| + |x_i x_{i+1}|
    = d(x_{i-1}, x_{i+1}) within tol."""
    lens = s.edge_lengths()
    for i in range(1, s.n_edges):
        d, _ = local_distance(cx, s.points[i - 1], s.points[i + 1], cfg)
        if lens[i - 1] + lens[i] > d + tol:
            return False
    return True


def onesided_vertex_slack(cx: Complex, s: VertexPath, i: int,
                          n_free_dirs: int = 8) -> tuple[float, float]:
    """One-sided first-variation data at interior vertex i.

    Returns (worst, slack): `worst` is the minimum over admissible motions v of
    the one-sided derivative of length; the vertex passes the local geodesic
    test when worst >= -tol.  `slack` is the maximum over +/- motion pairs of
    min(D+(w), D+(-w)); for a smooth norm stationarity forces D+(w) = -D+(-w)
    so the slack is never positive, while a strictly positive slack certifies
    that the vertex sits on a corner of the norm and the geodesic belongs to a
    fan of broken-line geodesics.
    """
    f_prev, f_next = s.edge_faces[i - 1], s.edge_faces[i]
    n_prev = cx.faces[f_prev].norm
    n_next = cx.faces[f_next].norm
    x_prev = cx.transition(s.points[i - 1], f_prev).x
    x_here_prev = cx.transition(s.points[i], f_prev).x
    x_here_next = cx.transition(s.points[i], f_next).x
    x_next = cx.transition(s.points[i + 1], f_next).x
    v_in = x_here_prev - x_prev    # in f_prev chart
    v_out = x_next - x_here_next   # in f_next chart

    def deriv(w_prev, w_next):
        # d/dt^+ [ N_prev(v_in + t w_prev) + N_next(v_out - t w_next) ]
        return (n_prev.dir_deriv(v_in, w_prev, "plus")
                + n_next.dir_deriv(v_out, -np.asarray(w_next), "plus"))

    if f_prev == f_next:
        dirs = [np.array([math.cos(2 * math.pi * k / n_free_dirs),
                          math.sin(2 * math.pi * k / n_free_dirs)])
                for k in range(n_free_dirs)] if cx.faces[f_prev].dim == 2 else []
        if not dirs:
            dim = cx.faces[f_prev].dim
            dirs = [e for k in range(dim) for e in (np.eye(dim)[k], -np.eye(dim)[k])]
        vals = [deriv(w, w) for w in dirs]
        worst = min(vals)
        slack = max(min(vals[k], vals[(k + len(dirs) // 2) % len(dirs)])
                    for k in range(len(dirs) // 2))
        return worst, slack

    # vertex constrained to the shared subface: motions along its directions
    worst = math.inf
    slack = -math.inf
    moved = False
    for g in cx.edge_between(f_prev, f_next):
        forward = g.face_a == f_prev
        sub_p = cx.faces[f_prev].subfaces[g.sub_a if forward else g.sub_b]
        sub_n = cx.faces[f_next].subfaces[g.sub_b if forward else g.sub_a]
        if sub_p.params_of(x_here_prev, 1e-8) is None:
            continue
        m = g.matrix if forward else (np.linalg.inv(g.matrix) if g.matrix.size else g.matrix)
        for k in range(sub_p.dim):
            e = np.eye(sub_p.dim)[k]
            w_prev = sub_p.basis.T @ e
            w_next = sub_n.basis.T @ (m @ e) if m.size else sub_n.basis.T @ e
            d_plus = deriv(w_prev, w_next)
            d_minus = deriv(-w_prev, -w_next)
            worst = min(worst, d_plus, d_minus)
            slack = max(slack, min(d_plus, d_minus))
            moved = True
    if not moved:
        return 0.0, 0.0
    return worst, slack


def is_local_geodesic_onesided(cx: Complex, s: VertexPath, tol: float = 1e-9) -> bool:
    """Local geodesic test using one-sided derivatives (valid at norm corners)."""
    s = s.normalized()
    for i in range(1, s.n_edges):
        worst, _ = onesided_vertex_slack(cx, s, i)
        if worst < -tol:
            return False
    return True


def fan_slack(cx: Complex, s: VertexPath, tol: float = 1e-9) -> float:
    """Strict one-sided slack at vertices constrained to a gluing subface.

    Only constrained vertices count: for a smooth norm, stationarity along the
    subface forces D+(w) = -D+(-w), so a positive value certifies that the
    geodesic is supported on a corner of the norm -- the mechanism that lets a
    continuum of broken geodesics (a fan) share the same endpoints.  Interior
    vertices are skipped because a straight line through a corner direction has
    two-sided slack without any fan.
    """
    s = s.normalized()
    best = 0.0
    for i in range(1, s.n_edges):
        if s.edge_faces[i - 1] == s.edge_faces[i]:
            continue
        worst, slack = onesided_vertex_slack(cx, s, i)
        if worst >= -tol and slack > tol:
            best = max(best, slack)
    return best


# ---------------------------------------------------------------------------
# orthogonal slices


@dataclass
class SlicePiece:
    face: int
    base: np.ndarray       # chart point on the slice
    normal: np.ndarray     # norm gradient at the direction (slice = kernel)
    basis: np.ndarray      # (k-1, k) hyperplane directions


@dataclass
class LocalSlice:
    pieces: list
    agreement_error: float

    def side(self, cx_point_face: int, x: np.ndarray) -> float:
        for p in self.pieces:
            if p.face == cx_point_face:
                return float(p.normal @ (x - p.base))
        raise InputError("point's face has no slice piece")


def orth_slice(cx: Complex, path: VertexPath, edge: int, t: float) -> LocalSlice:
    """Orthogonal slice through the interior point of an edge at fraction t.

    Each piece is the intersection of a face of the star with the affine
    hyperplane through the point parallel to the orthogonal complement of the
    edge direction; pieces agree on shared subfaces.
    """
    if not (0.0 < t < 1.0):
        raise InputError("t must be interior to the edge")
    f = path.edge_faces[edge]
    p = cx.transition(path.points[edge], f)
    q = cx.transition(path.points[edge + 1], f)
    x = (1 - t) * p.x + t * q.x
    v = q.x - p.x
    center = Point.of(f, x)
    star = cx.star(center)
    pieces = []
    for fid, rep in sorted(star.items()):
        face = cx.faces[fid]
        # direction of the segment seen from this face: transport via a nearby
        # point on the segment that still lies in the face, else skip direction
        if fid == f:
            v_here = v
        else:
            v_here = _transport_direction(cx, f, fid, x, v)
            if v_here is None:
                continue
        norm = face.norm
        if not norm.is_smooth_at(v_here):
            raise NonSmoothPointError("norm not smooth along the slice direction")
        g = norm.grad(v_here)
        _, _, vt = np.linalg.svd(g.reshape(1, -1))
        pieces.append(SlicePiece(fid, rep.x, g, vt[1:]))
    # agreement on shared subface directions
    err = 0.0
    for i in range(len(pieces)):
        for j in range(i + 1, len(pieces)):
            err = max(err, _slice_agreement(cx, pieces[i], pieces[j]))
    return LocalSlice(pieces, err)


def _transport_direction(cx: Complex, f_from: int, f_to: int, x: np.ndarray, v: np.ndarray):
    """Push a direction at x through the gluing shared by the two faces."""
    for g in cx.edge_between(f_from, f_to):
        forward = g.face_a == f_from
        sub_a = cx.faces[f_from].subfaces[g.sub_a if forward else g.sub_b]
        sub_b = cx.faces[f_to].subfaces[g.sub_b if forward else g.sub_a]
        if sub_a.params_of(x, 1e-8) is None:
            continue
        # direction must be tangent to the subface for an exact transport
        w, *_ = np.linalg.lstsq(sub_a.basis.T, v, rcond=None)
        if np.linalg.norm(sub_a.basis.T @ w - v) > 1e-9 * max(1.0, np.linalg.norm(v)):
            continue
        m = g.matrix if forward else (np.linalg.inv(g.matrix) if g.matrix.size else g.matrix)
        return sub_b.basis.T @ (m @ w) if m.size else sub_b.basis.T @ w
    return None


def _slice_agreement(cx: Complex, pa: SlicePiece, pb: SlicePiece) -> float:
    """Check the two hyperplane pieces agree on shared subface directions."""
    worst = 0.0
    for g in cx.edge_between(pa.face, pb.face):
        forward = g.face_a == pa.face
        sub_a = cx.faces[pa.face].subfaces[g.sub_a if forward else g.sub_b]
        sub_b = cx.faces[pb.face].subfaces[g.sub_b if forward else g.sub_a]
        if sub_a.params_of(pa.base, 1e-8) is None:
            continue
        m = g.matrix if forward else (np.linalg.inv(g.matrix) if g.matrix.size else g.matrix)
        for k in range(sub_a.dim):
            e = np.eye(sub_a.dim)[k]
            wa = sub_a.basis.T @ e
            wb = sub_b.basis.T @ (m @ e) if m.size else sub_b.basis.T @ e
            # w tangent to slice in A iff tangent in B
            da = float(pa.normal @ wa)
            db = float(pb.normal @ wb)
            worst = max(worst, abs(da - db) / max(1.0, abs(da), abs(db)))
    return worst


# ---------------------------------------------------------------------------
# Busemann inequalities for a straight line in a single normed space


@dataclass
class BusemannReport:
    inequality_ok: bool
    worst_margin: float
    strict_ok: bool
    decay_ok: bool
    gaps: list

    def to_json(self) -> dict:
        return {
            "inequality_ok": self.inequality_ok,
            "worst_margin": self.worst_margin,
            "strict_ok": self.strict_ok,
            "decay_ok": self.decay_ok,
            "gaps": self.gaps,
        }


def busemann_check(norm: Norm, a, v, q, t0: float = 0.0,
                   t_values=None, tol: float = 1e-12) -> BusemannReport:
    """Check ||q - gamma(t)|| >= |t - t0| along gamma(t) = a + v t, and that the
    gap decays to zero for large |t - t0|.

    Requires ||v|| = 1 and q on the orthogonal slice at t0 (q - gamma(t0) in
    the kernel of the norm derivative at v).
    """
    a = np.asarray(a, dtype=float)
    v = np.asarray(v, dtype=float)
    q = np.asarray(q, dtype=float)
    if abs(norm.eval(v) - 1.0) > 1e-9:
        raise InputError("direction must have norm 1")
    if not norm.is_smooth_at(v):
        raise NonSmoothPointError("norm must be smooth at the line direction")
    w = q - (a + v * t0)
    if abs(float(norm.grad(v) @ w)) > 1e-8 * max(1.0, np.linalg.norm(w)):
        raise InputError("q is not on the orthogonal slice at t0")
    if t_values is None:
        t_values = t0 + np.concatenate([-np.geomspace(1e-2, 1e3, 40)[::-1],
                                        np.geomspace(1e-2, 1e3, 40)])
    off = float(np.linalg.norm(w))
    worst = math.inf
    gaps = []
    ok = True
    strict_ok = True
    for t in t_values:
        d = norm.eval(q - (a + v * t))
        gap = d - abs(t - t0)
        worst = min(worst, gap)
        gaps.append([float(t), float(gap)])
        if gap < -tol:
            ok = False
        if off > 1e-6 and abs(t - t0) > 1e-9 and gap <= 0.0:
            strict_ok = False
    # decay: gap at the largest |t - t0| should be far below the gap near t0
    near = max(g for t, g in gaps if abs(t - t0) <= 1.0)
    far = max(g for t, g in gaps if abs(t - t0) >= 0.9 * max(abs(np.asarray(t_values) - t0)))
    decay_ok = (off <= 1e-12) or (far <= max(1e-3, 0.05 * near))
    return BusemannReport(ok, float(worst), strict_ok, decay_ok, gaps)
