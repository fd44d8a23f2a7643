"""Finsler PL complexes: faces in charts, gluings, stars and tangent cones.

A Face is a convex polyhedron in its own chart (row constraints A x <= b, so
half-planes, strips, sectors and cones are first-class).  A Gluing identifies a
subface of one face with a subface of another through an affine map of subface
coordinates; validation checks that every gluing is an isometry for the two
chart norms and that chained identifications are globally consistent.

A point of the quotient space is (face id, chart coordinates).  Point equality
across charts is resolved by canonicalization to the lowest incident face id.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import Tolerances
from .errors import IncidenceError, InputError, ValidationError
from .norms import Norm, norm_from_json


@dataclass(frozen=True)
class Point:
    face: int
    coords: tuple

    @staticmethod
    def of(face: int, coords) -> "Point":
        return Point(face, tuple(float(c) for c in np.atleast_1d(coords)))

    @property
    def x(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    def __repr__(self):
        return f"Point(face={self.face}, {np.round(self.x, 9).tolist()})"


@dataclass
class Subface:
    """An affine piece of the face boundary, in its own coordinates.

    Chart embedding: u -> origin + basis.T @ u  with  lo <= u <= hi
    (entries of lo/hi may be +/-inf for rays and lines).
    A 0-dimensional subface (a vertex) has an empty basis.
    """

    origin: np.ndarray
    basis: np.ndarray  # (m, k): rows are chart directions of the subface
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.basis = np.asarray(self.basis, dtype=float).reshape(-1, self.origin.shape[0])
        self.lo = np.asarray(self.lo, dtype=float).reshape(self.basis.shape[0])
        self.hi = np.asarray(self.hi, dtype=float).reshape(self.basis.shape[0])
        self._pinv = np.linalg.pinv(self.basis.T) if self.dim else None

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def embed(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return self.origin + self.basis.T @ u

    def params_of(self, x, tol: float = 1e-9):
        """Subface coordinates of chart point x, or None if x is off the subface."""
        x = np.asarray(x, dtype=float)
        d = x - self.origin
        if self.dim == 0:
            return np.zeros(0) if np.linalg.norm(d) <= tol else None
        u = self._pinv @ d
        if np.linalg.norm(self.basis.T @ u - d) > tol:
            return None
        if np.any(u < self.lo - tol) or np.any(u > self.hi + tol):
            return None
        return np.clip(u, self.lo, self.hi)

    def to_json(self) -> dict:
        def enc(a):
            return [None if math.isinf(v) else v for v in a]

        return {
            "origin": self.origin.tolist(),
            "basis": self.basis.tolist(),
            "lo": enc(self.lo),
            "hi": enc(self.hi),
        }

    @staticmethod
    def from_json(d: dict) -> "Subface":
        def dec(a, sign):
            return [sign * math.inf if v is None else v for v in a]

        return Subface(
            d["origin"], d["basis"], dec(d["lo"], -1), dec(d["hi"], +1)
        )


@dataclass
class Face:
    """A convex polyhedral set in its own chart with an attached norm."""

    id: int
    dim: int
    norm: Norm
    ineq_a: np.ndarray  # (r, k)
    ineq_b: np.ndarray  # (r,)
    subfaces: list = field(default_factory=list)
    vertices: np.ndarray | None = None  # populated for bounded faces

    def __post_init__(self):
        self.ineq_a = np.asarray(self.ineq_a, dtype=float).reshape(-1, self.dim)
        self.ineq_b = np.asarray(self.ineq_b, dtype=float).reshape(-1)
        if self.norm.dim != self.dim:
            raise InputError(f"face {self.id}: norm dimension mismatch")

    def contains(self, x, tol: float = 1e-12) -> bool:
        x = np.asarray(x, dtype=float)
        if self.ineq_a.shape[0] == 0:
            return True
        return bool(np.all(self.ineq_a @ x <= self.ineq_b + tol))

    def interior_contains(self, x, margin: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if self.ineq_a.shape[0] == 0:
            return True
        return bool(np.all(self.ineq_a @ x <= self.ineq_b - margin))

    def subfaces_containing(self, x, tol: float = 1e-9) -> list[int]:
        return [i for i, s in enumerate(self.subfaces) if s.params_of(x, tol) is not None]

    def to_json(self) -> dict:
        d = {
            "id": self.id,
            "dim": self.dim,
            "norm": self.norm.to_json(),
            "halfspaces": {"a": self.ineq_a.tolist(), "b": self.ineq_b.tolist()},
            "subfaces": [s.to_json() for s in self.subfaces],
        }
        if self.vertices is not None:
            d["vertices"] = np.asarray(self.vertices).tolist()
        return d

    @staticmethod
    def from_json(d: dict) -> "Face":
        norm = norm_from_json(d["norm"])
        if "halfspaces" in d:
            a = d["halfspaces"]["a"]
            b = d["halfspaces"]["b"]
            face = Face(d["id"], d["dim"], norm, a, b,
                        [Subface.from_json(s) for s in d.get("subfaces", [])])
            if "vertices" in d:
                face.vertices = np.asarray(d["vertices"], dtype=float)
            return face
        if "vertices" in d:
            face = face_from_vertices(d["id"], d["vertices"], norm)
            face.subfaces = [Subface.from_json(s) for s in d.get("subfaces", [])]
            return face
        raise InputError("face needs 'halfspaces' or 'vertices'")


def face_from_vertices(fid: int, verts, norm: Norm, auto_subfaces: bool = True) -> Face:
    """Bounded 2D face from a vertex list (any order); edges become subfaces."""
    verts = np.asarray(verts, dtype=float)
    if verts.shape[1] != 2:
        raise InputError("face_from_vertices supports 2D charts")
    c = verts.mean(axis=0)
    order = np.argsort(np.arctan2(verts[:, 1] - c[1], verts[:, 0] - c[0]))
    verts = verts[order]
    n = len(verts)
    rows, rhs, subs = [], [], []
    for i in range(n):
        p, q = verts[i], verts[(i + 1) % n]
        e = q - p
        normal = np.array([e[1], -e[0]])  # outward for ccw ordering
        normal /= np.linalg.norm(normal)
        rows.append(normal)
        rhs.append(float(normal @ p))
        if auto_subfaces:
            length = np.linalg.norm(e)
            subs.append(Subface(p, (e / length).reshape(1, -1), [0.0], [length]))
    face = Face(fid, 2, norm, np.array(rows), np.array(rhs), subs)
    face.vertices = verts
    return face


@dataclass
class Gluing:
    """Affine identification of subface `sub_a` of `face_a` with `sub_b` of `face_b`.

    Subface-a coordinates u map to subface-b coordinates  matrix @ u + offset.
    """

    face_a: int
    sub_a: int
    face_b: int
    sub_b: int
    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        self.matrix = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        self.offset = np.atleast_1d(np.asarray(self.offset, dtype=float))

    def map_params(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if u.size == 0:
            return self.offset.copy()
        return self.matrix @ u + self.offset

    def inverse_params(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self.matrix.size == 0:
            return np.zeros(0)
        return np.linalg.solve(self.matrix, u - self.offset)

    def to_json(self) -> dict:
        return {
            "faceA": self.face_a, "subA": self.sub_a,
            "faceB": self.face_b, "subB": self.sub_b,
            "matrix": self.matrix.tolist(), "offset": self.offset.tolist(),
        }

    @staticmethod
    def from_json(d: dict) -> "Gluing":
        return Gluing(d["faceA"], d["subA"], d["faceB"], d["subB"],
                      d["matrix"], d["offset"])


@dataclass
class ValidationReport:
    valid: bool
    failures: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"valid": self.valid, "failures": self.failures, "warnings": self.warnings}


class Complex:
    """Faces + gluings with an adjacency index over the quotient space."""

    def __init__(self, faces, gluings, tol: Tolerances | None = None, is_cone: bool = False):
        self.faces: dict[int, Face] = {f.id: f for f in faces}
        if len(self.faces) != len(faces):
            raise InputError("duplicate face ids")
        self.gluings: list[Gluing] = list(gluings)
        self.tol = tol or Tolerances()
        self.is_cone = is_cone
        self.validation: ValidationReport | None = None
        self._rep_cache: dict = {}
        # adjacency: (face, subface index) -> [(gluing, forward?)]
        self._adj: dict[tuple, list] = {}
        for g in self.gluings:
            self._adj.setdefault((g.face_a, g.sub_a), []).append((g, True))
            self._adj.setdefault((g.face_b, g.sub_b), []).append((g, False))

    # -- validation ------------------------------------------------------

    def validate(self, isometry_samples: int = 16, seed: int = 0) -> ValidationReport:
        failures, warnings = [], []
        rng = np.random.default_rng(seed)
        tol = self.tol.structural

        for gi, g in enumerate(self.gluings):
            try:
                fa, fb = self.faces[g.face_a], self.faces[g.face_b]
                sa, sb = fa.subfaces[g.sub_a], fb.subfaces[g.sub_b]
            except (KeyError, IndexError):
                failures.append({"gluing": gi, "reason": "dangling face or subface reference"})
                continue
            if sa.dim != sb.dim:
                failures.append({"gluing": gi, "reason": "subface dimension mismatch"})
                continue
            # bijection between parameter boxes
            if not _boxes_match(sa, sb, g, tol):
                failures.append({"gluing": gi, "reason": "gluing is not a bijection of the subfaces"})
            # isometry on the subface direction space: spanning set + samples
            worst = 0.0
            worst_dir = None
            if sa.dim > 0:
                dirs = [np.eye(sa.dim)[k] for k in range(sa.dim)]
                dirs += [rng.normal(size=sa.dim) for _ in range(isometry_samples)]
                for w in dirs:
                    nw = np.linalg.norm(w)
                    if nw < 1e-12:
                        continue
                    w = w / nw
                    la = fa.norm.eval(sa.basis.T @ w)
                    lb = fb.norm.eval(sb.basis.T @ (g.matrix @ w))
                    err = abs(la - lb) / max(la, 1e-30)
                    if err > worst:
                        worst, worst_dir = err, w.tolist()
                if worst > tol:
                    failures.append({
                        "gluing": gi,
                        "reason": "gluing is not isometric",
                        "worst_direction": worst_dir,
                        "relative_error": worst,
                    })
            cond = getattr(fa.norm, "condition_number", 1.0)
            if cond > 100.0:
                warnings.append({"face": g.face_a, "reason": f"ill-conditioned norm (cond {cond:.3g})"})

        failures += self._check_cycles()

        for f in self.faces.values():
            if f.vertices is None and not self.is_cone and f.ineq_a.shape[0] < f.dim + 1:
                warnings.append({"face": f.id, "reason": "unbounded face (no cone flag)"})

        report = ValidationReport(valid=not failures, failures=failures, warnings=warnings)
        self.validation = report
        return report

    def _check_cycles(self) -> list:
        """Composite transitions around any cycle of identified subfaces must be identity."""
        failures = []
        # build graph over (face, sub) nodes; edge labels are affine maps on params
        seen: dict[tuple, tuple] = {}  # node -> (matrix, offset) to class rep
        for start in self._adj:
            if start in seen:
                continue
            m0 = np.eye(self.faces[start[0]].subfaces[start[1]].dim)
            seen[start] = (m0, np.zeros(m0.shape[0]))
            stack = [start]
            while stack:
                node = stack.pop()
                m_n, c_n = seen[node]
                for g, forward in self._adj.get(node, []):
                    other = (g.face_b, g.sub_b) if forward else (g.face_a, g.sub_a)
                    if forward:
                        gm, gc = g.matrix, g.offset
                    else:
                        gm = np.linalg.inv(g.matrix) if g.matrix.size else g.matrix
                        gc = -(gm @ g.offset) if g.matrix.size else g.offset * 0.0
                    m_o = gm @ m_n if m_n.size else gm
                    c_o = gm @ c_n + gc if m_n.size else gc
                    if other not in seen:
                        seen[other] = (m_o, c_o)
                        stack.append(other)
                    else:
                        m_e, c_e = seen[other]
                        if (np.abs(m_o - m_e).max(initial=0.0) > self.tol.structural
                                or np.abs(c_o - c_e).max(initial=0.0) > self.tol.structural):
                            failures.append({
                                "reason": "inconsistent transition cycle",
                                "subface": list(other),
                            })
        return failures

    def require_valid(self):
        if self.validation is None:
            self.validate()
        if not self.validation.valid:
            raise ValidationError(f"complex invalid: {self.validation.failures}")

    # -- point queries ---------------------------------------------------

    def norm_of(self, face: int) -> Norm:
        return self.faces[face].norm

    def check_point(self, p: Point, slack: float = 1e-9):
        f = self.faces[p.face]
        if not f.contains(p.x, slack):
            raise InputError(f"{p} lies outside its face polyhedron")

    def representations(self, p: Point, tol: float | None = None) -> list[Point]:
        """All (face, coords) charts representing the same quotient point."""
        tol = tol if tol is not None else self.tol.structural * 100
        cached = self._rep_cache.get((p, tol))
        if cached is not None:
            return cached
        out = {p.face: p}
        stack = [p]
        while stack:
            q = stack.pop()
            fq = self.faces[q.face]
            for si in fq.subfaces_containing(q.x, tol):
                for g, forward in self._adj.get((q.face, si), []):
                    sub = fq.subfaces[si]
                    u = sub.params_of(q.x, tol)
                    if u is None:
                        continue
                    if forward:
                        other_face, other_sub = g.face_b, g.sub_b
                        u2 = g.map_params(u)
                    else:
                        other_face, other_sub = g.face_a, g.sub_a
                        u2 = g.inverse_params(u)
                    x2 = self.faces[other_face].subfaces[other_sub].embed(u2)
                    q2 = Point.of(other_face, x2)
                    if other_face not in out:
                        out[other_face] = q2
                        stack.append(q2)
        reps = [out[k] for k in sorted(out)]
        if len(self._rep_cache) > 200_000:
            self._rep_cache.clear()
        self._rep_cache[(p, tol)] = reps
        return reps

    def transition(self, p: Point, target_face: int) -> Point:
        if p.face == target_face:
            return p
        for r in self.representations(p):
            if r.face == target_face:
                return r
        raise IncidenceError(f"{p} is not incident to face {target_face}")

    def canonical(self, p: Point) -> Point:
        return self.representations(p)[0]

    def star(self, p: Point) -> dict[int, Point]:
        """Face id -> representation of p in that face, over all incident faces."""
        return {r.face: r for r in self.representations(p)}

    def same_point(self, p: Point, q: Point, tol: float = 1e-9) -> bool:
        for r in self.representations(p):
            if r.face == q.face and np.linalg.norm(r.x - q.x) <= tol:
                return True
        return False

    def common_faces(self, p: Point, q: Point) -> list[int]:
        sp = self.star(p)
        sq = self.star(q)
        return sorted(set(sp) & set(sq))

    def neighbors(self, face: int) -> list[int]:
        out = set()
        for g in self.gluings:
            if g.face_a == face:
                out.add(g.face_b)
            if g.face_b == face:
                out.add(g.face_a)
        out.discard(face)
        return sorted(out)

    def edge_between(self, fa: int, fb: int) -> list[Gluing]:
        return [g for g in self.gluings
                if (g.face_a == fa and g.face_b == fb) or (g.face_a == fb and g.face_b == fa)]

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "faces": [self.faces[k].to_json() for k in sorted(self.faces)],
            "gluings": [g.to_json() for g in self.gluings],
            "is_cone": self.is_cone,
        }

    @staticmethod
    def from_json(d: dict) -> "Complex":
        faces = [Face.from_json(f) for f in d["faces"]]
        gluings = [Gluing.from_json(g) for g in d["gluings"]]
        return Complex(faces, gluings, is_cone=d.get("is_cone", False))

    def save(self, path: str):
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @staticmethod
    def load(path: str) -> "Complex":
        with open(path) as fh:
            return Complex.from_json(json.load(fh))


def _boxes_match(sa: Subface, sb: Subface, g: Gluing, tol: float) -> bool:
    """Check the affine parameter map sends box(sa) onto box(sb)."""
    if sa.dim == 0:
        return True
    if sa.dim == 1:
        lo, hi = float(sa.lo[0]), float(sa.hi[0])
        m = float(g.matrix[0, 0])
        c = float(g.offset[0])
        img = sorted([m * lo + c if math.isfinite(lo) else math.copysign(math.inf, m * lo),
                      m * hi + c if math.isfinite(hi) else math.copysign(math.inf, m * hi)])
        tgt = [float(sb.lo[0]), float(sb.hi[0])]
        for u, v in zip(img, tgt):
            if math.isinf(u) != math.isinf(v):
                return False
            if math.isfinite(u) and abs(u - v) > max(tol, 1e-9):
                return False
        return True
    # higher-dimensional subfaces: sample corners
    corners = itertools.product(*[(sa.lo[i], sa.hi[i]) for i in range(sa.dim)])
    for cc in corners:
        if any(math.isinf(c) for c in cc):
            continue
        u2 = g.map_params(np.array(cc))
        if np.any(u2 < sb.lo - 1e-9) or np.any(u2 > sb.hi + 1e-9):
            return False
    return True


# ---------------------------------------------------------------------------
# cones


class Cone(Complex):
    """A complex whose faces are polyhedral cones with a common apex at the
    chart origin of every face."""

    def __init__(self, faces, gluings, tol: Tolerances | None = None):
        super().__init__(faces, gluings, tol=tol, is_cone=True)
        for f in self.faces.values():
            if not f.contains(np.zeros(f.dim), 1e-9):
                raise InputError(f"cone face {f.id} does not contain the apex")

    def apex(self, face: int | None = None) -> Point:
        fid = face if face is not None else min(self.faces)
        return Point.of(fid, np.zeros(self.faces[fid].dim))

    def dilate(self, q: Point, t: float) -> Point:
        if t < 0:
            raise InputError("dilatation factor must be nonnegative")
        return Point.of(q.face, t * q.x)

    def radial_distance(self, q: Point) -> float:
        return self.faces[q.face].norm.eval(q.x)


def sector_face(fid: int, ray0, ray1, norm: Norm) -> Face:
    """2D cone face spanned by two boundary rays (counterclockwise ray0->ray1)."""
    r0 = np.asarray(ray0, dtype=float)
    r1 = np.asarray(ray1, dtype=float)
    if r0[0] * r1[1] - r0[1] * r1[0] <= 0:
        raise InputError("rays must be counterclockwise and span a proper sector")
    # inside: cross(r0, x) >= 0 and cross(x, r1) >= 0
    a = np.array([[r0[1], -r0[0]], [-r1[1], r1[0]]])
    b = np.zeros(2)
    subs = [
        Subface(np.zeros(2), (r0 / np.linalg.norm(r0)).reshape(1, 2), [0.0], [math.inf]),
        Subface(np.zeros(2), (r1 / np.linalg.norm(r1)).reshape(1, 2), [0.0], [math.inf]),
        Subface(np.zeros(2), np.zeros((0, 2)), [], []),  # the apex
    ]
    return Face(fid, 2, norm, a, b, subs)


def tangent_cone(cx: Complex, p: Point, chart_radius: float | None = None):
    """Local cone model of `cx` at p plus per-face chart shift maps.

    Returns (cone, charts) where charts maps cone face id -> (source face id,
    base point x0); cone coordinates d correspond to chart points x0 + d.
    Faces of the cone are the local cones of the faces at p with the same
    norms; the correspondence is an arc-wise isometry on a small radius.
    """
    reps = cx.star(p)
    faces = []
    charts = {}
    sub_map: dict[tuple, int] = {}  # (face id, original subface index) -> local index
    for fid, rep in sorted(reps.items()):
        f = cx.faces[fid]
        x = rep.x
        act = np.where(f.ineq_a @ x >= f.ineq_b - 1e-9)[0] if f.ineq_a.size else []
        a = f.ineq_a[act] if len(act) else np.zeros((0, f.dim))
        b = np.zeros(len(act))
        subs = []
        for i, s in enumerate(f.subfaces):
            u = s.params_of(x, 1e-9)
            if u is None:
                continue
            sub_map[(fid, i)] = len(subs)
            if s.dim == 0:
                subs.append(Subface(np.zeros(f.dim), np.zeros((0, f.dim)), [], []))
            else:
                subs.append(Subface(np.zeros(f.dim), s.basis, s.lo - u, s.hi - u))
        faces.append(Face(fid, f.dim, f.norm, a, b, subs))
        charts[fid] = (fid, x)
    gluings = []
    for g in cx.gluings:
        key_a, key_b = (g.face_a, g.sub_a), (g.face_b, g.sub_b)
        if key_a in sub_map and key_b in sub_map:
            # both localized subfaces are re-based at p, so offsets vanish
            gluings.append(Gluing(g.face_a, sub_map[key_a], g.face_b, sub_map[key_b],
                                  g.matrix, np.zeros(g.offset.shape)))
    cone = Cone(faces, gluings, tol=cx.tol)
    return cone, charts
