"""Named example spaces and the measurements that make them interesting.

Three families of glued-norm complexes, each a small laboratory for one
failure mode of classical comparison geometry in the piecewise-flat Finsler
setting:

* ``build_glued_half_planes`` -- two half-planes carrying different
  ellipsoidal norms that agree on horizontal vectors, glued along the x-axis.
  Distances restricted to the vertical line through the origin develop a
  concave kink at the crossing (``measure_convexity_failure``).
* ``build_belt`` -- a vertical strip assembled from copies of the rectangle
  [-1,1] x [-2,2] cut by the diagonal y = x, with a slightly scaled norm above
  the cut and a stretch in the periodic gluing.  Vertical chart lines are
  geodesics whose horizontal offset contracts by the stretch factor once per
  period (``measure_asymptotics``).
* ``build_russian_flag`` -- three horizontal strips whose middle strip
  carries a non-smooth max-of-ellipsoids norm with a corner at the vertical
  direction.  Vertical segments through the middle strip absorb a whole fan
  of broken geodesics with non-constant length (``geodesic_fan``).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .complex import Complex, Face, Gluing, Point, Subface, face_from_vertices
from .config import RunConfig, pmap
from .errors import (
    ConstructionError, InputError, NonUniqueMidpointError, OutOfRangeError,
)
from .norms import ConePatched, Ellipsoidal, EuclideanScaled, MaxOfEllipsoidal, verify_norm
from .paths import (
    SearchConfig, VertexPath, is_local_geodesic_onesided, local_distance, midpoint,
    path_distance,
)
from .shortening import shorten_to_geodesic, subdivide

INF = math.inf


@dataclass
class GalleryInstance:
    """A built example space plus the parameters and caveats that define it."""

    name: str
    parameters: dict
    complex: Complex
    smooth: bool
    notes: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "name": self.name,
            "parameters": self.parameters,
            "smooth": self.smooth,
            "notes": list(self.notes),
            "complex": self.complex.to_json(),
        }

    def require_smooth(self, operation: str) -> None:
        if not self.smooth:
            raise InputError(
                f"{operation} requires smooth norms; instance {self.name!r} is non-smooth"
            )


def _validated(instance: GalleryInstance) -> GalleryInstance:
    report = instance.complex.validate()
    if not report.valid:
        raise ConstructionError(
            f"instance {instance.name!r} failed validation: {report.failures}"
        )
    instance.notes.extend(str(w) for w in report.warnings)
    return instance


# ---------------------------------------------------------------------------
# glued half-planes


def build_glued_half_planes(beta_up: float, beta_down: float) -> GalleryInstance:
    """Two half-planes with norms (x^2 + 2 b xy + y^2)^(1/2), glued on the x-axis.

    Both norms restrict to |x| on horizontal vectors, so the gluing is
    isometric for any pair of parameters; with ``beta_up != beta_down`` the
    norm gradients at (1, 0) have different vertical components, which is the
    entire source of the convexity failures measured below.
    """
    for b in (beta_up, beta_down):
        if not 1.0 - b * b > 0.0:
            raise InputError(f"parameter {b} gives a non-positive-definite form")
    axis = lambda: Subface([0.0, 0.0], [[1.0, 0.0]], [-INF], [INF])
    up = Face(0, 2, Ellipsoidal([[1.0, beta_up], [beta_up, 1.0]]),
              [[0.0, -1.0]], [0.0], [axis()])
    down = Face(1, 2, Ellipsoidal([[1.0, beta_down], [beta_down, 1.0]]),
                [[0.0, 1.0]], [0.0], [axis()])
    cx = Complex([up, down], [Gluing(0, 0, 1, 0, [[1.0]], [0.0])])
    notes = []
    cond = max((1 + abs(b)) / (1 - abs(b)) for b in (beta_up, beta_down))
    if cond > 100.0:
        notes.append(f"ill-conditioned norms: condition number {cond:.3g}")
    inst = GalleryInstance(
        name="glued-half-planes",
        parameters={"beta_up": beta_up, "beta_down": beta_down},
        complex=cx,
        smooth=True,
        notes=notes,
    )
    return _validated(inst)


@dataclass
class ConvexityViolation:
    probe: str
    where: dict
    margin: float

    def to_json(self) -> dict:
        return {"probe": self.probe, "where": self.where, "margin": self.margin}


@dataclass
class ConvexityReport:
    """Midpoint-convexity audit of distance functions on glued half-planes."""

    parameters: dict
    curves: list  # per base point: {"x0", "t", "distance"}
    triangles: list  # {"points", "half_base", "mid_distance", "defect"}
    violations: list
    threshold: float

    @property
    def worst_margin(self) -> float:
        return max((v.margin for v in self.violations), default=0.0)

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "kind": "convexity-failure",
            "parameters": self.parameters,
            "threshold": self.threshold,
            "n_violations": len(self.violations),
            "worst_margin": self.worst_margin,
            "violations": [v.to_json() for v in self.violations],
            "curves": self.curves,
            "triangles": self.triangles,
        }

    def curve_csv(self) -> str:
        lines = ["x0,t,distance"]
        for c in self.curves:
            for t, d in zip(c["t"], c["distance"]):
                lines.append(f"{c['x0']!r},{t!r},{d!r}")
        return "\n".join(lines) + "\n"


def _point_near_axis(cx: Complex, x: float, y: float) -> Point:
    return cx.canonical(Point.of(0 if y >= 0 else 1, (x, y)))


def measure_convexity_failure(instance: GalleryInstance,
                              base_points=(0.5, 1.0),
                              t_span: float = 0.4,
                              t_count: int = 17,
                              n_triangles: int = 8,
                              seed: int = 0,
                              threshold: float = 1e-6,
                              side: str | None = None,
                              run: RunConfig | None = None) -> ConvexityReport:
    """Hunt for midpoint-convexity violations of distance functions.

    Probe (a): for base points p = (x0, 0) on the gluing line, sample the
    distance to points (0, t) of the vertical line through the origin and
    test midpoint convexity in t.  When the two norms have different
    horizontal tangents, the first variation of the two straight competitors
    meeting at the origin gives this function a concave kink at t = 0.

    Probe (b): random geodesic triangles; the distance between the midpoints
    of two sides is compared against half the third side (the comparison
    inequality that holds with equality in any single normed plane).

    ``side`` restricts probe (a) to t >= 0 ("up") or t <= 0 ("down"); with
    all samples in one chart the function is a norm section and convex, so
    the restricted probe is a sanity control.
    """
    cx = instance.complex
    run = run or RunConfig()
    cfg = SearchConfig(max_faces=3, max_chains=64)
    if t_count < 5 or t_count % 2 == 0:
        raise InputError("t_count must be odd and at least 5")
    violations: list[ConvexityViolation] = []

    ts = np.linspace(-t_span, t_span, t_count)
    if side == "up":
        ts = ts[ts >= 0.0]
    elif side == "down":
        ts = ts[ts <= 0.0]
    elif side is not None:
        raise InputError("side must be 'up', 'down' or None")

    def curve_for(x0: float) -> dict:
        p = _point_near_axis(cx, x0, 0.0)
        dist = [local_distance(cx, p, _point_near_axis(cx, 0.0, t), cfg)[0]
                for t in ts]
        return {"x0": float(x0), "t": [float(t) for t in ts], "distance": dist}

    curves = list(pmap(curve_for, [float(x) for x in base_points],
                       run.parallelism))
    for c in curves:
        d = c["distance"]
        for i in range(1, len(d) - 1):
            margin = d[i] - 0.5 * (d[i - 1] + d[i + 1])
            if margin > threshold:
                violations.append(ConvexityViolation(
                    probe="vertical-line",
                    where={"x0": c["x0"], "t": c["t"][i]},
                    margin=float(margin),
                ))

    rng = np.random.default_rng(seed)
    triangles = []
    for _ in range(n_triangles):
        pts = [_point_near_axis(cx, x, y)
               for x, y in rng.uniform(-1.0, 1.0, size=(3, 2))]
        try:
            m1 = midpoint(cx, pts[0], pts[1], cfg)
            m2 = midpoint(cx, pts[0], pts[2], cfg)
        except NonUniqueMidpointError:
            continue
        half_base = 0.5 * local_distance(cx, pts[1], pts[2], cfg)[0]
        mid_d = local_distance(cx, m1, m2, cfg)[0]
        defect = mid_d - half_base
        triangles.append({
            "points": [[float(v) for v in p.x] for p in pts],
            "half_base": float(half_base),
            "mid_distance": float(mid_d),
            "defect": float(defect),
        })
        if defect > threshold:
            violations.append(ConvexityViolation(
                probe="triangle-midpoints",
                where={"points": triangles[-1]["points"]},
                margin=float(defect),
            ))

    return ConvexityReport(
        parameters=dict(instance.parameters),
        curves=curves,
        triangles=triangles,
        violations=violations,
        threshold=threshold,
    )


# ---------------------------------------------------------------------------
# the belt


def _belt_top_norm(factor: float, patch_angle: float):
    """Scaled Euclidean norm re-profiled to value 1 on the diagonal and vertical.

    The diagonal patch makes the cut gluing along y = x isometric; the
    vertical patch restores unit speed and a vertical gradient on vertical
    vectors, so vertical chart lines refract straight through the cut.
    """
    if not 0.0 < patch_angle < math.pi / 4:
        raise InputError("patch_angle must lie in (0, pi/4)")
    if 2.0 * patch_angle >= math.pi / 4:
        raise ConstructionError(
            "patch cones around the diagonal and vertical directions overlap; "
            "choose patch_angle < pi/8"
        )
    base = EuclideanScaled(2, factor)
    s = 1.0 / math.sqrt(2.0)
    patched = ConePatched(base, (s, s), patch_angle, 1.0)
    patched = ConePatched(patched, (0.0, 1.0), patch_angle, 1.0)
    rep = verify_norm(patched, sample_count=300, seed=7)
    if not rep.strictly_convex:
        raise ConstructionError(
            "patched norm lost strict convexity "
            f"(worst margin {rep.worst_convexity_margin:.3g}); "
            "use a smaller patch_angle or a factor closer to 1"
        )
    return patched


def build_belt(factor: float = 1.01, patch_angle: float = 0.3,
               n_periods: int = 12) -> GalleryInstance:
    """Periodic vertical strip with a per-period horizontal contraction.

    One period is the rectangle [-1,1] x [-2,2] cut by the diagonal y = x:
    Euclidean norm below the cut, a ``factor``-scaled (and patched, see
    ``_belt_top_norm``) norm above it.  The bottom edge of each period is
    glued to the top edge of the next with the inverse ``factor`` stretch,
    which keeps the gluing isometric.  The instance materializes
    ``n_periods`` fundamental domains of the universal cover; face 2k is the
    below-cut quad of period k, face 2k+1 the above-cut quad.
    """
    if factor < 1.0:
        raise InputError("factor must be at least 1")
    if n_periods < 1:
        raise InputError("n_periods must be positive")
    top_norm = _belt_top_norm(factor, patch_angle) if factor > 1.0 \
        else EuclideanScaled(2, 1.0)
    lower = EuclideanScaled(2, 1.0)
    rt2 = math.sqrt(2.0)

    def diagonal() -> Subface:
        return Subface([0.0, 0.0], [[1.0 / rt2, 1.0 / rt2]], [-rt2], [rt2])

    faces, gluings = [], []
    for k in range(n_periods):
        below = face_from_vertices(
            2 * k, [[-1, -2], [1, -2], [1, 1], [-1, -1]], lower,
            auto_subfaces=False)
        below.subfaces = [diagonal(),
                          Subface([0.0, -2.0], [[1.0, 0.0]], [-1.0], [1.0])]
        above = face_from_vertices(
            2 * k + 1, [[-1, -1], [1, 1], [1, 2], [-1, 2]], top_norm,
            auto_subfaces=False)
        above.subfaces = [diagonal(),
                          Subface([0.0, 2.0], [[1.0, 0.0]],
                                  [-1.0 / factor], [1.0 / factor])]
        faces += [below, above]
        gluings.append(Gluing(2 * k, 0, 2 * k + 1, 0, [[1.0]], [0.0]))
        if k + 1 < n_periods:
            gluings.append(Gluing(2 * k, 1, 2 * (k + 1) + 1, 1,
                                  [[1.0 / factor]], [0.0]))
    cx = Complex(faces, gluings)
    inst = GalleryInstance(
        name="belt",
        parameters={"factor": factor, "patch_angle": patch_angle,
                    "n_periods": n_periods},
        complex=cx,
        smooth=True,
    )
    return _validated(inst)


@dataclass
class AsymptoticsReport:
    """Per-period horizontal deviations of tracked vertical geodesics."""

    factor: float
    offsets: list
    deviations: list  # one list per offset, one entry per period
    fitted_ratios: list
    non_increasing: list
    geodesic_verified: list
    t_infinity_gap: float | None = None

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "kind": "belt-asymptotics",
            "factor": self.factor,
            "offsets": self.offsets,
            "deviations": self.deviations,
            "fitted_ratios": self.fitted_ratios,
            "non_increasing": self.non_increasing,
            "geodesic_verified": self.geodesic_verified,
            "t_infinity_gap": self.t_infinity_gap,
        }

    def curve_csv(self) -> str:
        lines = ["offset,period,deviation"]
        for eps, devs in zip(self.offsets, self.deviations):
            for k, d in enumerate(devs):
                lines.append(f"{eps!r},{k},{d!r}")
        return "\n".join(lines) + "\n"


def belt_vertical_geodesic(instance: GalleryInstance, offset: float,
                           n_periods: int) -> VertexPath:
    """The broken line descending the cover along chart-vertical segments.

    Within each period the path is the chart line x = x_k (straight through
    the diagonal cut because the patched norm has a vertical gradient on
    vertical vectors); at the periodic gluing the offset contracts to
    x_{k+1} = x_k / factor.
    """
    cx = instance.complex
    factor = instance.parameters["factor"]
    built = instance.parameters["n_periods"]
    if n_periods > built:
        raise OutOfRangeError(
            f"window of {n_periods} periods exceeds the materialized cover "
            f"({built} periods); rebuild with a larger n_periods"
        )
    if not abs(offset) < 1.0:
        raise InputError("offset must lie in (-1, 1)")
    points, edge_faces = [], []
    x = offset
    points.append(Point.of(1, (x, 2.0)))
    for k in range(n_periods):
        below, above = 2 * k, 2 * k + 1
        points.append(cx.canonical(Point.of(above, (x, x))))
        edge_faces.append(above)
        points.append(cx.canonical(Point.of(below, (x, -2.0))))
        edge_faces.append(below)
        x /= factor
    return VertexPath(cx, points, edge_faces)


def measure_asymptotics(instance: GalleryInstance,
                        offsets=(0.0, 0.05),
                        n_periods: int = 10,
                        verify: bool = True,
                        t_infinity: bool = False,
                        run: RunConfig | None = None) -> AsymptoticsReport:
    """Track vertical geodesics of the belt and fit their contraction ratio.

    For each launch offset the tracked geodesic is built in closed form
    (``belt_vertical_geodesic``) and, when ``verify`` is set, certified by
    the one-sided first-variation test at every interior vertex.  Deviation
    per period is the horizontal chart distance from the line x = 0 at the
    period entry.  With ``t_infinity`` an equal-arclength subdivision of the
    tracked path is relaxed by midpoint shortening and compared against the
    closed form, confirming the construction is the actual distance minimizer
    between its endpoints.
    """
    cx = instance.complex
    run = run or RunConfig()
    factor = instance.parameters["factor"]

    def track(eps: float):
        path = belt_vertical_geodesic(instance, eps, n_periods)
        devs = [abs(eps) / factor ** k for k in range(n_periods + 1)]
        ok = is_local_geodesic_onesided(cx, path, tol=1e-9) if verify else True
        return path, devs, ok

    tracked = list(pmap(track, list(offsets), run.parallelism))
    deviations = [devs for _, devs, _ in tracked]
    verified = [ok for _, _, ok in tracked]
    fitted = []
    for devs in deviations:
        if max(devs) < 1e-15:
            fitted.append(1.0)
            continue
        ks = np.arange(len(devs))
        slope = np.polyfit(ks, np.log(devs), 1)[0]
        fitted.append(float(math.exp(slope)))
    non_inc = [bool(all(b <= a + 1e-12 for a, b in zip(d, d[1:])))
               for d in deviations]

    gap = None
    if t_infinity:
        path = tracked[-1][0]
        pieces = max(4, 2 * n_periods + 2)
        res = shorten_to_geodesic(cx, subdivide(cx, path, pieces),
                                  tol=1e-7, max_iter=20000)
        gap = float(path_distance(res.path, path))
    return AsymptoticsReport(
        factor=factor,
        offsets=[float(e) for e in offsets],
        deviations=deviations,
        fitted_ratios=fitted,
        non_increasing=non_inc,
        geodesic_verified=verified,
        t_infinity_gap=gap,
    )


# ---------------------------------------------------------------------------
# the russian flag


def _edge_index(face: Face, a, b, tol: float = 1e-9) -> int:
    """Index of the bounded edge subface with the given endpoints."""
    target = {tuple(np.round(np.asarray(a, dtype=float), 9)),
              tuple(np.round(np.asarray(b, dtype=float), 9))}
    for i, s in enumerate(face.subfaces):
        if s.dim != 1 or not np.all(np.isfinite(s.lo)) or not np.all(np.isfinite(s.hi)):
            continue
        ends = {tuple(np.round(s.embed(s.lo), 9)), tuple(np.round(s.embed(s.hi), 9))}
        if ends == target:
            return i
    raise ConstructionError(f"face {face.id} has no edge {a}-{b}")


def _glue_shared_edge(fa: Face, fb: Face, a, b) -> Gluing:
    """Identity gluing of a common chart edge present in both faces."""
    ia, ib = _edge_index(fa, a, b), _edge_index(fb, a, b)
    sa, sb = fa.subfaces[ia], fb.subfaces[ib]
    u0, u1 = float(sa.lo[0]), float(sa.hi[0])
    v0 = float(sb.params_of(sa.embed([u0]))[0])
    v1 = float(sb.params_of(sa.embed([u1]))[0])
    m = (v1 - v0) / (u1 - u0)
    return Gluing(fa.id, ia, fb.id, ib, [[m]], [v0 - m * u0])


def build_russian_flag(corner_sharpness: float = 0.5,
                       half_width: float = 4.0) -> GalleryInstance:
    """Three horizontal strips with a corner-normed middle.

    Top strip y in [1, 3] and bottom strip y in [-3, -1] are Euclidean; the
    middle strip y in [-1, 1] carries the maximum of the two ellipsoidal
    norms with cross terms +/- ``corner_sharpness``, which is strictly convex,
    symmetric about the vertical axis, has a corner exactly at the vertical
    direction, and evaluates to 1 on (1, 0) so the strip gluings are
    isometric.  All charts share coordinates; faces are clipped to
    |x| <= ``half_width``.
    """
    c = corner_sharpness
    if not 0.0 < c < 1.0:
        raise InputError("corner_sharpness must lie in (0, 1)")
    if half_width <= 0.0:
        raise InputError("half_width must be positive")
    w = half_width
    middle_norm = MaxOfEllipsoidal([[[1.0, c], [c, 1.0]],
                                    [[1.0, -c], [-c, 1.0]]])
    if abs(middle_norm.eval((1.0, 0.0)) - 1.0) > 1e-12:
        raise ConstructionError("middle norm does not restrict to |x| on horizontals")
    top = face_from_vertices(0, [[-w, 1], [w, 1], [w, 3], [-w, 3]],
                             EuclideanScaled(2, 1.0))
    mid = face_from_vertices(1, [[-w, -1], [w, -1], [w, 1], [-w, 1]],
                             middle_norm)
    bot = face_from_vertices(2, [[-w, -3], [w, -3], [w, -1], [-w, -1]],
                             EuclideanScaled(2, 1.0))
    gluings = [_glue_shared_edge(top, mid, (-w, 1.0), (w, 1.0)),
               _glue_shared_edge(mid, bot, (-w, -1.0), (w, -1.0))]
    cx = Complex([top, mid, bot], gluings)
    half = c / math.sqrt(1.0 - c * c)
    inst = GalleryInstance(
        name="russian-flag",
        parameters={"corner_sharpness": c, "half_width": w},
        complex=cx,
        smooth=False,
        notes=[f"fan half-width {half!r} in horizontal offset"],
    )
    return _validated(inst)


def fan_half_width(instance: GalleryInstance) -> float:
    """Largest |h| for which [p, (x0+h, 1), (x0+h, -1), q] stays a geodesic.

    At the crossing the one-sided derivative of the corner norm in a
    horizontal direction is +corner_sharpness, which absorbs the first
    variation of the Euclidean legs as long as their horizontal slope
    h / sqrt(1 + h^2) does not exceed it.
    """
    c = instance.parameters["corner_sharpness"]
    return c / math.sqrt(1.0 - c * c)


@dataclass
class FanReport:
    """A family of broken-line geodesics through the corner-normed strip."""

    offsets: list
    lengths: list
    verified: list
    half_width: float
    base_pair: list

    @property
    def spread(self) -> float:
        return max(self.lengths) - min(self.lengths)

    @property
    def monotone(self) -> bool:
        pairs = sorted(zip(self.offsets, self.lengths))
        left = [l for h, l in pairs if h <= 0.0]
        right = [l for h, l in pairs if h >= 0.0]
        dec = all(b < a - 1e-15 for a, b in zip(left, left[1:]))
        inc = all(b > a + 1e-15 for a, b in zip(right, right[1:]))
        return dec and inc

    def to_json(self) -> dict:
        return {
            "schema": "finsler-pl/1",
            "kind": "geodesic-fan",
            "base_pair": self.base_pair,
            "half_width": self.half_width,
            "offsets": self.offsets,
            "lengths": self.lengths,
            "verified": self.verified,
            "spread": self.spread,
            "monotone_in_abs_offset": self.monotone,
        }

    def curve_csv(self) -> str:
        lines = ["offset,length,verified"]
        for h, l, v in zip(self.offsets, self.lengths, self.verified):
            lines.append(f"{h!r},{l!r},{int(v)}")
        return "\n".join(lines) + "\n"


def geodesic_fan(instance: GalleryInstance, p: Point | None = None,
                 q: Point | None = None, n_members: int = 13,
                 safety: float = 0.95,
                 run: RunConfig | None = None) -> FanReport:
    """Enumerate and certify the fan of broken geodesics between p and q.

    p must lie in the top strip and q in the bottom strip on a common
    vertical line.  Each member descends straight to (x0 + h, 1), runs
    vertically through the middle strip to (x0 + h, -1) and continues
    straight to q; every member is checked with the one-sided
    first-variation test at both crossings.
    """
    cx = instance.complex
    run = run or RunConfig()
    if instance.name != "russian-flag":
        raise InputError("geodesic_fan expects a russian-flag instance")
    if n_members < 3 or n_members % 2 == 0:
        raise InputError("n_members must be odd and at least 3")
    p = p or Point.of(0, (0.0, 2.0))
    q = q or Point.of(2, (0.0, -2.0))
    p, q = cx.canonical(p), cx.canonical(q)
    if p.face != 0 or q.face != 2:
        raise InputError("p must lie in the top strip and q in the bottom strip")
    x0 = float(p.x[0])
    if abs(x0 - q.x[0]) > 1e-9:
        raise InputError("p and q must lie on a common vertical line")
    w = instance.parameters["half_width"]
    hmax = safety * min(fan_half_width(instance),
                        w - abs(x0) - 1e-9)
    if hmax <= 0.0:
        raise InputError("base pair leaves no room for the fan")
    offsets = np.linspace(-hmax, hmax, n_members)

    def member(h: float):
        path = VertexPath(cx, [
            p,
            cx.canonical(Point.of(1, (x0 + h, 1.0))),
            cx.canonical(Point.of(1, (x0 + h, -1.0))),
            q,
        ], [0, 1, 2])
        return float(path.length()), bool(is_local_geodesic_onesided(cx, path, tol=1e-9))

    results = list(pmap(member, [float(h) for h in offsets], run.parallelism))
    return FanReport(
        offsets=[float(h) for h in offsets],
        lengths=[r[0] for r in results],
        verified=[r[1] for r in results],
        half_width=fan_half_width(instance),
        base_pair=[[float(v) for v in p.x], [float(v) for v in q.x]],
    )


# ---------------------------------------------------------------------------
# double belt (best effort)


def build_double_belt(factor: float = 1.01, patch_angle: float = 0.3,
                      n_periods: int = 3,
                      bridge=(0.25, 0.75, 0.5)) -> GalleryInstance:
    """Two belts joined by a Euclidean rectangle along an x-axis segment.

    Each belt period is split into four faces along y = 0 so that the
    attachment segment is an actual subface; the bridge rectangle is glued
    to belt 0 along its bottom edge and to belt 1 along its top edge.  The
    attachment line then has three incident sheets, which the path machinery
    treats like any other branching: chains may enter whichever sheet they
    like.  This construction is exploratory; only validation and basic
    distance queries are exercised by the tests.
    """
    x1, x2, width = bridge
    if not 0.0 < x1 < x2 < 1.0 or width <= 0.0:
        raise InputError("bridge must satisfy 0 < x1 < x2 < 1 with positive width")
    top_norm = _belt_top_norm(factor, patch_angle) if factor > 1.0 \
        else EuclideanScaled(2, 1.0)
    lower = EuclideanScaled(2, 1.0)
    rt2 = math.sqrt(2.0)
    faces, gluings = [], []

    def belt_faces(base: int, with_bridge_port: bool):
        for k in range(n_periods):
            ids = [base + 4 * k + j for j in range(4)]
            bm = face_from_vertices(
                ids[0], [[-1, -2], [1, -2], [1, 0], [0, 0], [-1, -1]], lower,
                auto_subfaces=False)
            bm.subfaces = [
                Subface([0.0, 0.0], [[1.0 / rt2, 1.0 / rt2]], [-rt2], [0.0]),
                Subface([0.0, 0.0], [[1.0, 0.0]], [0.0], [1.0]),
                Subface([0.0, -2.0], [[1.0, 0.0]], [-1.0], [1.0]),
            ]
            bp = face_from_vertices(ids[1], [[0, 0], [1, 0], [1, 1]], lower,
                                    auto_subfaces=False)
            bp.subfaces = [
                Subface([0.0, 0.0], [[1.0 / rt2, 1.0 / rt2]], [0.0], [rt2]),
                Subface([0.0, 0.0], [[1.0, 0.0]], [0.0], [1.0]),
            ]
            tm = face_from_vertices(ids[2], [[-1, 0], [-1, -1], [0, 0]], top_norm,
                                    auto_subfaces=False)
            tm.subfaces = [
                Subface([0.0, 0.0], [[1.0 / rt2, 1.0 / rt2]], [-rt2], [0.0]),
                Subface([0.0, 0.0], [[1.0, 0.0]], [-1.0], [0.0]),
            ]
            tp = face_from_vertices(
                ids[3], [[-1, 0], [0, 0], [1, 1], [1, 2], [-1, 2]], top_norm,
                auto_subfaces=False)
            tp.subfaces = [
                Subface([0.0, 0.0], [[1.0 / rt2, 1.0 / rt2]], [0.0], [rt2]),
                Subface([0.0, 0.0], [[1.0, 0.0]], [-1.0], [0.0]),
                Subface([0.0, 2.0], [[1.0, 0.0]],
                        [-1.0 / factor], [1.0 / factor]),
            ]
            if k == 0 and with_bridge_port:
                bm.subfaces.append(Subface([0.0, 0.0], [[1.0, 0.0]], [x1], [x2]))
            faces.extend([bm, bp, tm, tp])
            gluings.extend([
                Gluing(ids[0], 0, ids[2], 0, [[1.0]], [0.0]),  # lower diagonal
                Gluing(ids[1], 0, ids[3], 0, [[1.0]], [0.0]),  # upper diagonal
                Gluing(ids[0], 1, ids[1], 1, [[1.0]], [0.0]),  # axis x in [0,1]
                Gluing(ids[2], 1, ids[3], 1, [[1.0]], [0.0]),  # axis x in [-1,0]
            ])
            if k + 1 < n_periods:
                gluings.append(Gluing(ids[0], 2, base + 4 * (k + 1) + 3, 2,
                                      [[1.0 / factor]], [0.0]))

    belt_faces(0, True)
    belt_faces(100, True)
    bridge_id = 999
    br = face_from_vertices(bridge_id,
                            [[x1, 0], [x2, 0], [x2, width], [x1, width]], lower,
                            auto_subfaces=False)
    br.subfaces = [Subface([0.0, 0.0], [[1.0, 0.0]], [x1], [x2]),
                   Subface([0.0, width], [[1.0, 0.0]], [x1], [x2])]
    faces.append(br)
    gluings.append(Gluing(bridge_id, 0, 0, 3, [[1.0]], [0.0]))
    gluings.append(Gluing(bridge_id, 1, 100, 3, [[1.0]], [0.0]))
    cx = Complex(faces, gluings)
    inst = GalleryInstance(
        name="double-belt",
        parameters={"factor": factor, "patch_angle": patch_angle,
                    "n_periods": n_periods, "bridge": list(bridge)},
        complex=cx,
        smooth=True,
        notes=["exploratory construction; branching along the bridge ports"],
    )
    return _validated(inst)


# ---------------------------------------------------------------------------
# registry for the CLI


BUILDERS = {
    "half-planes": build_glued_half_planes,
    "belt": build_belt,
    "russian-flag": build_russian_flag,
    "double-belt": build_double_belt,
}
