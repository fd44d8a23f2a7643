"""Saddle piecewise-linear cone surfaces in normed spaces.

A cone surface is a positively homogeneous PL map of the plane into an ambient
normed space: a fan of radial rays splits the plane into sectors, and each
sector is mapped by a rank-2 linear map, continuously across shared rays.  The
surface is a saddle exactly when the origin of the ambient space lies in the
convex hull of the image of the punctured plane; that is a linear feasibility
question over the ray images, answered with a certificate (convex combination
summing to zero) or a separating functional.  Saddle cone surfaces induce
non-focusing Finsler PL structures on the plane, which `induced_complex`
materializes with pullback norms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .complex import Complex, Cone, Gluing, Point, Subface, sector_face
from .errors import ConstructionError, InputError, ValidationError
from .norms import Norm, Pullback, norm_from_json, verify_norm
from .paths import VertexPath, local_distance


def _cross2(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


# ---------------------------------------------------------------------------
# surface type


@dataclass
class SaddleConeSurface:
    ambient_dim: int
    ambient_norm: Norm
    fan: np.ndarray        # (n, 2) cyclically ordered unit directions (ccw)
    sector_maps: list      # n matrices (ambient_dim, 2); sector i spans fan[i] -> fan[i+1]

    def __post_init__(self):
        self.fan = np.asarray(self.fan, dtype=float)
        if self.fan.ndim != 2 or self.fan.shape[1] != 2 or self.fan.shape[0] < 3:
            raise InputError("fan must be at least 3 unit directions in the plane")
        self.fan = self.fan / np.linalg.norm(self.fan, axis=1, keepdims=True)
        self.sector_maps = [np.asarray(m, dtype=float).reshape(self.ambient_dim, 2)
                            for m in self.sector_maps]
        if len(self.sector_maps) != len(self.fan):
            raise InputError("need one sector map per fan ray")
        if self.ambient_norm.dim != self.ambient_dim:
            raise InputError("ambient norm dimension mismatch")
        angles = np.arctan2(self.fan[:, 1], self.fan[:, 0])
        if np.any(np.diff(np.unwrap(angles)) <= 0):
            raise InputError("fan directions must be strictly counterclockwise")

    @property
    def n_sectors(self) -> int:
        return len(self.fan)

    def validate(self):
        """Continuity across shared rays and nondegeneracy of every sector."""
        n = self.n_sectors
        for i in range(n):
            a, b = self.sector_maps[i], self.sector_maps[(i + 1) % n]
            ray = self.fan[(i + 1) % n]
            if np.linalg.norm((a - b) @ ray) > 1e-10:
                raise ValidationError(
                    f"sector maps {i} and {(i + 1) % n} disagree on their shared ray")
            if np.linalg.matrix_rank(self.sector_maps[i], tol=1e-10) < 2:
                raise ValidationError(f"sector map {i} is degenerate (rank < 2)")

    def evaluate(self, xy) -> np.ndarray:
        """Image of a plane point under the PL map."""
        xy = np.asarray(xy, dtype=float)
        return self.sector_maps[self.sector_of(xy)] @ xy

    def sector_of(self, xy) -> int:
        xy = np.asarray(xy, dtype=float)
        n = self.n_sectors
        for i in range(n):
            r0, r1 = self.fan[i], self.fan[(i + 1) % n]
            if _cross2(r0, xy) >= -1e-12 and _cross2(xy, r1) >= -1e-12:
                if _cross2(r0, r1) > 0 or _cross2(r0, xy) >= -1e-12:
                    return i
        return 0  # origin or numerical corner: any sector is fine by continuity

    def generators(self) -> np.ndarray:
        """Images of edge rays and one interior ray per sector, normalized."""
        vs = []
        n = self.n_sectors
        for i in range(n):
            r0, r1 = self.fan[i], self.fan[(i + 1) % n]
            mid = r0 + r1
            if np.linalg.norm(mid) < 1e-9:  # half-plane sector
                mid = np.array([-r0[1], r0[0]])
            for ray in (r0, mid):
                v = self.sector_maps[i] @ ray
                vs.append(v / np.linalg.norm(v))
        return np.array(vs)

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "ambient_dim": self.ambient_dim,
            "ambient_norm": self.ambient_norm.to_json(),
            "fan": self.fan.tolist(),
            "sector_maps": [m.tolist() for m in self.sector_maps],
        }

    @staticmethod
    def from_json(d: dict) -> "SaddleConeSurface":
        return SaddleConeSurface(d["ambient_dim"], norm_from_json(d["ambient_norm"]),
                                 d["fan"], d["sector_maps"])


def cone_surface_from_heights(fan, heights, ambient_norm: Norm) -> SaddleConeSurface:
    """Graph-type surface in R^3: the plane mapped to (x, y, g(x, y)) where g
    is linear on each sector and takes the given value on each unit ray."""
    fan = np.asarray(fan, dtype=float)
    fan = fan / np.linalg.norm(fan, axis=1, keepdims=True)
    heights = np.asarray(heights, dtype=float)
    n = len(fan)
    maps = []
    for i in range(n):
        r0, r1 = fan[i], fan[(i + 1) % n]
        h0, h1 = heights[i], heights[(i + 1) % n]
        basis = np.column_stack([r0, r1])
        grad = np.linalg.solve(basis.T, np.array([h0, h1]))
        maps.append(np.vstack([np.eye(2), grad]))
    return SaddleConeSurface(3, ambient_norm, fan, maps)


# ---------------------------------------------------------------------------
# exact rational phase-I simplex (feasibility of A x = b, x >= 0)


def _rational_feasible(a_rows, b_col):
    """Exact feasibility of A x = b, x >= 0 over the rationals (Bland's rule).

    Returns a solution list of Fractions, or None if infeasible.  The inputs
    are float matrices, interpreted exactly.
    """
    m = len(a_rows)
    n = len(a_rows[0]) if m else 0
    a = [[Fraction(x) for x in row] for row in a_rows]
    b = [Fraction(x) for x in b_col]
    for i in range(m):  # make b nonnegative
        if b[i] < 0:
            a[i] = [-x for x in a[i]]
            b[i] = -b[i]
    # tableau with artificial variables; minimize their sum
    t = [row + [Fraction(int(i == j)) for j in range(m)] + [b[i]]
         for i, row in enumerate(a)]
    basis = [n + i for i in range(m)]

    def pivot(pi, pj):
        piv = t[pi][pj]
        t[pi] = [x / piv for x in t[pi]]
        for i in range(m):
            if i != pi and t[i][pj] != 0:
                f = t[i][pj]
                t[i] = [x - f * y for x, y in zip(t[i], t[pi])]
        basis[pi] = pj

    while True:
        # phase-I reduced costs over the original columns (artificials never
        # re-enter once they leave, which Bland's rule keeps finite)
        red = [Fraction(0)] * n
        for i in range(m):
            if basis[i] >= n:
                for j in range(n):
                    red[j] -= t[i][j]
        enter = next((j for j in range(n) if red[j] < 0), None)
        if enter is None:
            break
        ratios = [(t[i][n + m] / t[i][enter], i) for i in range(m) if t[i][enter] > 0]
        if not ratios:
            break  # unbounded cannot happen in phase I, defensive
        _, leave = min(ratios, key=lambda z: (z[0], basis[z[1]]))
        pivot(leave, enter)
    resid = sum(t[i][n + m] for i in range(m) if basis[i] >= n)
    if resid != 0:
        return None
    x = [Fraction(0)] * n
    for i in range(m):
        if basis[i] < n:
            x[basis[i]] = t[i][n + m]
    return x


# ---------------------------------------------------------------------------
# saddle tests


@dataclass
class SaddleCertificate:
    saddle: bool
    coefficients: np.ndarray | None      # convex combination, when saddle
    residual: float                       # |sum lambda_i v_i| (saddle) or min margin slack
    separating: np.ndarray | None         # functional with <w, v_i> > 0, when not saddle
    generators: np.ndarray = None
    exact_fallback: bool = False

    def to_json(self) -> dict:
        return {
            "saddle": self.saddle,
            "coefficients": None if self.coefficients is None else self.coefficients.tolist(),
            "residual": self.residual,
            "separating": None if self.separating is None else self.separating.tolist(),
            "exact_fallback": self.exact_fallback,
        }


def is_saddle_cone(surface: SaddleConeSurface) -> SaddleCertificate:
    """Decide whether the apex is a saddle point, with a certificate.

    Saddle: nonnegative lambda with sum lambda = 1 and sum lambda_i v_i = 0
    over the ray-image generators.  Otherwise a functional w with <w, v_i> > 0
    for all generators (the hyperplane that cuts off a cap).
    """
    surface.validate()
    vs = surface.generators()
    n, d = vs.shape
    a_eq = np.vstack([vs.T, np.ones(n)])
    b_eq = np.concatenate([np.zeros(d), [1.0]])
    res = linprog(np.zeros(n), A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * n,
                  method="highs")
    exact = False
    if res.status == 0:
        lam = np.maximum(res.x, 0.0)
        lam = lam / lam.sum()
        residual = float(np.linalg.norm(vs.T @ lam))
        if residual >= 1e-10:
            exact = True  # marginal: re-decide exactly
        else:
            return SaddleCertificate(True, lam, residual, None, vs)
    if res.status != 0 or exact:
        sol = _rational_feasible(a_eq.tolist(), b_eq.tolist())
        if sol is not None:
            lam = np.array([float(x) for x in sol])
            lam = np.maximum(lam, 0.0)
            lam = lam / lam.sum()
            residual = float(np.linalg.norm(vs.T @ lam))
            return SaddleCertificate(True, lam, residual, None, vs, exact_fallback=True)
    # not saddle: find the best separating functional  max t, <w, v_i> >= t, |w|_inf <= 1
    c = np.zeros(d + 1)
    c[-1] = -1.0
    a_ub = np.hstack([-vs, np.ones((n, 1))])
    res2 = linprog(c, A_ub=a_ub, b_ub=np.zeros(n),
                   bounds=[(-1, 1)] * d + [(None, None)], method="highs")
    if res2.status != 0 or res2.x[-1] <= 0:
        raise ConstructionError("saddle test inconclusive: neither certificate found")
    w = res2.x[:d]
    margin = float(np.min(vs @ w))
    return SaddleCertificate(False, None, max(0.0, -min(margin, 0.0)), w, vs,
                             exact_fallback=exact)


@dataclass
class VertexVerdict:
    vertex: int
    interior: bool
    saddle: bool | None
    certificate: SaddleCertificate | None


def is_saddle_surface(mesh: dict) -> list:
    """Per-vertex saddle test of a triangulated surface.

    mesh: {"vertices": (m, d) list, "triangles": (t, 3) index list}.  At each
    interior vertex the cone feasibility test runs on the normalized link
    directions; boundary vertices are skipped with a notice.
    """
    verts = np.asarray(mesh["vertices"], dtype=float)
    tris = np.asarray(mesh["triangles"], dtype=int)
    n = len(verts)
    edge_count: dict = {}
    neighbors: dict = {i: set() for i in range(n)}
    for t in tris:
        for a, b in ((t[0], t[1]), (t[1], t[2]), (t[2], t[0])):
            key = (min(a, b), max(a, b))
            edge_count[key] = edge_count.get(key, 0) + 1
            neighbors[a].add(b)
            neighbors[b].add(a)
    out = []
    for i in range(n):
        if not neighbors[i]:
            continue
        interior = all(edge_count[(min(i, j), max(i, j))] == 2 for j in neighbors[i])
        if not interior:
            out.append(VertexVerdict(i, False, None, None))
            continue
        dirs = []
        for j in sorted(neighbors[i]):
            v = verts[j] - verts[i]
            dirs.append(v / np.linalg.norm(v))
        vs = np.array(dirs)
        m, d = vs.shape
        a_eq = np.vstack([vs.T, np.ones(m)])
        b_eq = np.concatenate([np.zeros(d), [1.0]])
        sol = _rational_feasible(a_eq.tolist(), b_eq.tolist())
        if sol is not None:
            lam = np.array([float(x) for x in sol])
            cert = SaddleCertificate(True, lam / lam.sum(),
                                     float(np.linalg.norm(vs.T @ lam)), None, vs,
                                     exact_fallback=True)
        else:
            c = np.zeros(d + 1)
            c[-1] = -1.0
            res2 = linprog(c, A_ub=np.hstack([-vs, np.ones((m, 1))]), b_ub=np.zeros(m),
                           bounds=[(-1, 1)] * d + [(None, None)], method="highs")
            w = res2.x[:d]
            cert = SaddleCertificate(False, None, 0.0, w, vs)
        out.append(VertexVerdict(i, True, cert.saddle, cert))
    return out


# ---------------------------------------------------------------------------
# induced Finsler PL structure


def induced_complex(surface: SaddleConeSurface, verify_samples: int = 200,
                    seed: int = 0) -> Cone:
    """The plane with the metric pulled back through the sector maps."""
    surface.validate()
    n = surface.n_sectors
    faces = []
    for i in range(n):
        norm = Pullback(surface.ambient_norm, surface.sector_maps[i])
        rep = verify_norm(norm, sample_count=verify_samples, seed=seed)
        if not rep.strictly_convex:
            raise ConstructionError(
                f"pullback norm of sector {i} failed strict-convexity verification "
                f"(margin {rep.worst_convexity_margin:.3e})")
        faces.append(sector_face(i, surface.fan[i], surface.fan[(i + 1) % n], norm))
    gluings = []
    for i in range(n):
        j = (i + 1) % n
        # subface 1 of sector i is its ccw ray = subface 0 of sector j
        gluings.append(Gluing(i, 1, j, 0, [[1.0]], [0.0]))
    cone = Cone(faces, gluings)
    report = cone.validate()
    if not report.valid:
        raise ConstructionError(f"induced complex failed validation: {report.failures}")
    return cone


def plane_point(surface: SaddleConeSurface, xy) -> Point:
    """Plane coordinates -> Point of the induced complex."""
    return Point.of(surface.sector_of(xy), np.asarray(xy, dtype=float))


# ---------------------------------------------------------------------------
# the three-case uniqueness argument, numerically


def _loop_winding(points_xy: np.ndarray) -> int:
    total = 0.0
    n = len(points_xy)
    for i in range(n):
        a = points_xy[i]
        b = points_xy[(i + 1) % n]
        total += math.atan2(_cross2(a, b), float(a @ b))
    return int(round(total / (2 * math.pi)))


@dataclass
class CaseWitnessReport:
    case: int
    samples: list                      # (t, length) for cases 1-2
    midpoint_margin: float | None      # len(g0)/2 + len(g1)/2 - len(g_half)
    second_diff_min: float | None
    d0f_values: list | None            # case 3
    d0f_best: float | None
    reduction: tuple | None            # (len(gamma0), len through apex)

    def to_json(self) -> dict:
        return {
            "case": self.case,
            "samples": [list(s) for s in self.samples],
            "midpoint_margin": self.midpoint_margin,
            "second_diff_min": self.second_diff_min,
            "d0f_values": self.d0f_values,
            "d0f_best": self.d0f_best,
            "reduction": None if self.reduction is None else list(self.reduction),
        }


def _polyline_length(cx: Complex, pts: list, cfg=None) -> float:
    return sum(local_distance(cx, pts[i], pts[i + 1], cfg)[0] for i in range(len(pts) - 1))


def case_witness(surface: SaddleConeSurface, cone: Cone, g0: VertexPath,
                 g1: VertexPath, n_samples: int = 33,
                 margin_rel: float = 1e-8) -> CaseWitnessReport:
    """Classify a pair of distinct paths with common endpoints and verify the
    corresponding strict-shortening mechanism.

    Case 1: one path runs through the apex; radially scaling its partner gives
    a family whose length is strictly convex in the scale.  Case 2: the region
    bounded by the two paths misses the apex; straight-line interpolation of
    matched vertices gives a strictly convex length family.  Case 3: the
    region winds around the apex; the saddle certificate produces a direction
    along which the endpoint-distance-sum function does not decrease, and the
    path through the apex is no longer than either path.
    """
    p0 = g0.points[0]
    p1 = g0.points[-1]
    if not (cone.same_point(p0, g1.points[0]) and cone.same_point(p1, g1.points[-1])):
        raise InputError("paths must share both endpoints")
    mid0 = [q.x for q in g0.points[1:-1]]
    mid1 = [q.x for q in g1.points[1:-1]]
    for a in mid0:
        for b in mid1:
            if np.linalg.norm(np.asarray(a) - np.asarray(b)) < 1e-12:
                raise InputError(
                    "paths share an interior point; split the pair at the last "
                    "common point and classify each piece separately")

    apex_on_0 = any(np.linalg.norm(q.x) < 1e-12 for q in g0.points)
    apex_on_1 = any(np.linalg.norm(q.x) < 1e-12 for q in g1.points)
    ts = np.linspace(0.0, 1.0, n_samples)

    def plane_pt(xy):
        return plane_point(surface, xy)

    if apex_on_0 or apex_on_1:
        through, other = (g0, g1) if apex_on_0 else (g1, g0)
        interior = [q.x for q in other.points[1:-1]]
        if not interior:
            interior = [0.5 * (other.points[0].x + other.points[-1].x)]
        samples = []
        for t in ts:
            pts = [other.points[0]] + [plane_pt(t * x) for x in interior] + [other.points[-1]]
            samples.append((float(t), _polyline_length(cone, pts)))
        lengths = np.array([s[1] for s in samples])
        scale = max(lengths.max(), 1.0)
        second = np.diff(lengths, 2)
        mid = lengths[n_samples // 2]
        margin = 0.5 * (lengths[0] + lengths[-1]) - mid
        return CaseWitnessReport(1, samples, float(margin), float(second.min() / scale),
                                 None, None, None)

    # region between the paths: does it wind around the apex?
    loop = np.vstack([np.array([q.x for q in g0.points]),
                      np.array([q.x for q in g1.points])[::-1][1:-1]])
    winding = _loop_winding(loop)

    if winding == 0:
        k = max(len(g0.points), len(g1.points), 6)
        a_pts = np.array([q.x for q in (g0.resample(k))])
        b_pts = np.array([q.x for q in (g1.resample(k))])
        samples = []
        for t in ts:
            mids = (1 - t) * a_pts[1:-1] + t * b_pts[1:-1]
            pts = [g0.points[0]] + [plane_pt(x) for x in mids] + [g0.points[-1]]
            samples.append((float(t), _polyline_length(cone, pts)))
        lengths = np.array([s[1] for s in samples])
        scale = max(lengths.max(), 1.0)
        second = np.diff(lengths, 2)
        mid = lengths[n_samples // 2]
        margin = 0.5 * (lengths[0] + lengths[-1]) - mid
        return CaseWitnessReport(2, samples, float(margin), float(second.min() / scale),
                                 None, None, None)

    # case 3: f(x) = |x - r(p)| + |x - r(q)| in the ambient space
    cert = is_saddle_cone(surface)
    if not cert.saddle:
        raise InputError("case 3 analysis needs a saddle certificate")
    rp = surface.evaluate(p0.x)
    rq = surface.evaluate(cone.transition(p1, p1.face).x)
    norm = surface.ambient_norm
    gp = norm.grad(-rp)
    gq = norm.grad(-rq)
    vals = [float((gp + gq) @ v) for v in cert.generators]
    best = max(vals)
    apex = cone.apex(p0.face)
    through_len = (local_distance(cone, p0, apex)[0]
                   + local_distance(cone, cone.apex(p1.face), p1)[0])
    return CaseWitnessReport(3, [], None, None, vals, float(best),
                             (g0.length(), float(through_len)))
