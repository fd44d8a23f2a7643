"""Norm families on finite-dimensional charts.

Every norm here is positively homogeneous and strictly convex.  The smooth
families (euclidean-scaled, ellipsoidal, lp, cone-patched over a smooth base,
pullback of a smooth norm) expose an analytic gradient; the max-of-ellipsoidal
family is strictly convex but has corners, and gradient queries at a corner
raise NonSmoothPointError so callers are forced to use one-sided derivatives.

The "orthogonal complement" of a unit vector v is the kernel of the derivative
of the norm at v; it is the hyperplane that orthogonal slices are parallel to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    InputError,
    NonSmoothPointError,
    UndefinedDerivativeError,
)

_TIE_REL = 1e-12  # relative tie width that counts as a corner locus


def _as_vec(v, dim: int) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (dim,):
        raise DimensionMismatchError(f"expected vector of dim {dim}, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise InputError("vector has non-finite entries")
    return v


class Norm:
    """Base class.  Subclasses set `dim` and `smooth` and implement eval/grad."""

    dim: int
    smooth: bool

    # -- core interface -------------------------------------------------

    def eval(self, v) -> float:
        raise NotImplementedError

    def grad(self, v) -> np.ndarray:
        raise NotImplementedError

    def is_smooth_at(self, v) -> bool:
        return self.smooth

    def dir_deriv(self, v, w, side: str = "plus") -> float:
        """One-sided derivative t -> eval(v + t w) at t=0 from the given side."""
        if side not in ("plus", "minus"):
            raise InputError(f"side must be 'plus' or 'minus', got {side!r}")
        v = _as_vec(v, self.dim)
        w = _as_vec(w, self.dim)
        if np.all(v == 0.0):
            raise UndefinedDerivativeError("directional derivative undefined at the origin")
        if self.is_smooth_at(v):
            return float(self.grad(v) @ w)
        return self._dir_deriv_corner(v, w, side)

    def _dir_deriv_corner(self, v, w, side):  # pragma: no cover - overridden
        raise NonSmoothPointError("norm is not smooth at this direction")

    def orth_complement_basis(self, v) -> np.ndarray:
        """Basis of the kernel of the norm derivative at unit vector v.

        Returns a (dim-1, dim) array of row vectors w with grad(v) @ w = 0.
        """
        v = _as_vec(v, self.dim)
        g = self.grad(v)
        # kernel of a single covector via SVD (deterministic)
        _, _, vt = np.linalg.svd(g.reshape(1, -1))
        return vt[1:]

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        raise NotImplementedError

    # -- conveniences ----------------------------------------------------

    def unit(self, v) -> np.ndarray:
        """v rescaled to norm 1."""
        n = self.eval(v)
        if n == 0.0:
            raise UndefinedDerivativeError("cannot normalize the zero vector")
        return np.asarray(v, dtype=float) / n

    def __call__(self, v) -> float:
        return self.eval(v)


class EuclideanScaled(Norm):
    def __init__(self, dim: int, scale: float = 1.0):
        if scale <= 0:
            raise InputError("scale must be positive")
        self.dim = int(dim)
        self.scale = float(scale)
        self.smooth = True

    def eval(self, v) -> float:
        v = _as_vec(v, self.dim)
        return self.scale * float(np.linalg.norm(v))

    def grad(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        n = np.linalg.norm(v)
        if n == 0.0:
            raise UndefinedDerivativeError("gradient undefined at the origin")
        return self.scale * v / n

    def to_json(self) -> dict:
        return {"type": "euclidean-scaled", "dim": self.dim, "scale": self.scale}

    def __repr__(self):
        return f"EuclideanScaled(dim={self.dim}, scale={self.scale})"


class Ellipsoidal(Norm):
    """sqrt(v^T Q v) for symmetric positive-definite Q."""

    def __init__(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise InputError("Q must be a square matrix")
        if not np.allclose(q, q.T, atol=1e-12):
            raise InputError("Q must be symmetric")
        eigs = np.linalg.eigvalsh(q)
        if eigs[0] <= 0:
            raise InputError("Q must be positive definite")
        self.q = q
        self.dim = q.shape[0]
        self.smooth = True
        self.condition_number = float(eigs[-1] / eigs[0])

    def eval(self, v) -> float:
        v = _as_vec(v, self.dim)
        return math.sqrt(max(float(v @ self.q @ v), 0.0))

    def grad(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        n = self.eval(v)
        if n == 0.0:
            raise UndefinedDerivativeError("gradient undefined at the origin")
        return (self.q @ v) / n

    def to_json(self) -> dict:
        return {"type": "ellipsoidal", "q": self.q.tolist()}

    def __repr__(self):
        return f"Ellipsoidal(q={self.q.tolist()})"


class Lp(Norm):
    def __init__(self, dim: int, p: float):
        if not (1.0 < p < math.inf):
            raise InputError("p must lie in (1, inf)")
        self.dim = int(dim)
        self.p = float(p)
        self.smooth = True

    def eval(self, v) -> float:
        v = _as_vec(v, self.dim)
        return float(np.sum(np.abs(v) ** self.p) ** (1.0 / self.p))

    def grad(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        n = self.eval(v)
        if n == 0.0:
            raise UndefinedDerivativeError("gradient undefined at the origin")
        return np.sign(v) * np.abs(v) ** (self.p - 1.0) / n ** (self.p - 1.0)

    def to_json(self) -> dict:
        return {"type": "lp", "dim": self.dim, "p": self.p}

    def __repr__(self):
        return f"Lp(dim={self.dim}, p={self.p})"


class MaxOfEllipsoidal(Norm):
    """Pointwise maximum of >=2 ellipsoidal norms.

    Strictly convex (intersection of strictly convex balls) but non-smooth on
    the loci where the active component switches.
    """

    def __init__(self, components):
        comps = [c if isinstance(c, Ellipsoidal) else Ellipsoidal(c) for c in components]
        if len(comps) < 2:
            raise InputError("need at least two component ellipsoids")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise InputError("component dimensions disagree")
        self.components = comps
        self.dim = comps[0].dim
        self.smooth = False

    def _values(self, v) -> np.ndarray:
        return np.array([c.eval(v) for c in self.components])

    def _active(self, v) -> list[int]:
        vals = self._values(v)
        top = vals.max()
        return [i for i, x in enumerate(vals) if x >= top * (1.0 - _TIE_REL)]

    def eval(self, v) -> float:
        _as_vec(v, self.dim)
        return float(self._values(v).max())

    def is_smooth_at(self, v) -> bool:
        v = _as_vec(v, self.dim)
        if np.all(v == 0.0):
            return False
        return len(self._active(v)) == 1

    def grad(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        if np.all(v == 0.0):
            raise UndefinedDerivativeError("gradient undefined at the origin")
        active = self._active(v)
        if len(active) > 1:
            raise NonSmoothPointError(
                "corner of max-of-ellipsoidal norm; use dir_deriv"
            )
        return self.components[active[0]].grad(v)

    def _dir_deriv_corner(self, v, w, side) -> float:
        slopes = [self.components[i].grad(v) @ w for i in self._active(v)]
        # right derivative of a max is the max of active slopes, left the min
        return float(max(slopes) if side == "plus" else min(slopes))

    def to_json(self) -> dict:
        return {
            "type": "max-of-ellipsoidal",
            "components": [c.q.tolist() for c in self.components],
        }

    def __repr__(self):
        return f"MaxOfEllipsoidal({len(self.components)} components, dim={self.dim})"


def _smoothstep5(x: float) -> float:
    """Quintic smoothstep: 0 at 0, 1 at 1, C^2 flat at both ends."""
    x = min(max(x, 0.0), 1.0)
    return x * x * x * (10.0 + x * (-15.0 + 6.0 * x))


def _smoothstep5_d(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return 30.0 * x * x * (1.0 - x) * (1.0 - x)


class ConePatched(Norm):
    """A smooth base norm re-profiled inside a cone of directions.

    Within Euclidean angle `half_angle` of the axis (+/- u, so the patched norm
    stays symmetric when the base is), the value is blended radially so that on
    the axis itself eval(u_hat) equals `target`.  Outside the cone the norm
    equals its base exactly.  The blend is a quintic bump in angular distance,
    so the patched norm stays C^1; strict convexity must be re-verified
    (verify_norm) because a deep or narrow patch can flatten the unit sphere.
    """

    def __init__(self, base: Norm, axis, half_angle: float, target: float):
        if not base.smooth:
            raise InputError("cone patch requires a smooth base norm")
        axis = np.asarray(axis, dtype=float)
        if axis.shape != (base.dim,):
            raise DimensionMismatchError("axis dimension mismatch")
        na = np.linalg.norm(axis)
        if na == 0:
            raise InputError("axis must be nonzero")
        if not (0.0 < half_angle < math.pi / 2):
            raise InputError("half_angle must lie in (0, pi/2)")
        if target <= 0:
            raise InputError("target must be positive")
        self.base = base
        self.axis = axis / na
        self.half_angle = float(half_angle)
        self.target = float(target)
        self.dim = base.dim
        self.smooth = True
        self._base_on_axis = base.eval(self.axis)
        self._amp = 1.0 - self.target / self._base_on_axis

    # angular distance of the direction of v from the axis line {+/- u}
    def _angle(self, v: np.ndarray) -> float:
        c = abs(float(v @ self.axis)) / float(np.linalg.norm(v))
        return math.acos(min(1.0, max(-1.0, c)))

    def _gain(self, v: np.ndarray) -> float:
        phi = self._angle(v)
        if phi >= self.half_angle:
            return 1.0
        bump = 1.0 - _smoothstep5(phi / self.half_angle)
        return 1.0 - self._amp * bump

    def eval(self, v) -> float:
        v = _as_vec(v, self.dim)
        if np.all(v == 0.0):
            return 0.0
        return self.base.eval(v) * self._gain(v)

    def grad(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        nv = np.linalg.norm(v)
        if nv == 0.0:
            raise UndefinedDerivativeError("gradient undefined at the origin")
        phi = self._angle(v)
        gb = self.base.grad(v)
        if phi >= self.half_angle:
            return gb
        x = phi / self.half_angle
        gain = 1.0 - self._amp * (1.0 - _smoothstep5(x))
        # d gain / d v = amp * S'(x)/half_angle * d phi / d v
        s = float(v @ self.axis)
        c = abs(s) / nv
        sin_phi = math.sqrt(max(1.0 - c * c, 0.0))
        if sin_phi < 1e-12:
            # on the axis the bump is flat (S' -> 0 quadratically), gain grad -> 0
            dgain = np.zeros(self.dim)
        else:
            dc = (math.copysign(1.0, s) * self.axis / nv) - (abs(s) / nv**3) * v
            dphi = -dc / sin_phi
            dgain = self._amp * (_smoothstep5_d(x) / self.half_angle) * dphi
        return gain * gb + self.base.eval(v) * dgain

    def to_json(self) -> dict:
        return {
            "type": "cone-patched",
            "base": self.base.to_json(),
            "axis": self.axis.tolist(),
            "half_angle": self.half_angle,
            "target": self.target,
        }

    def __repr__(self):
        return (
            f"ConePatched(base={self.base!r}, axis={self.axis.tolist()}, "
            f"half_angle={self.half_angle}, target={self.target})"
        )


class Pullback(Norm):
    """w -> base(A w) for an injective linear map A into the base's chart.

    Used for the Finsler metric a cone surface induces on its parameter plane.
    """

    def __init__(self, base: Norm, matrix):
        a = np.asarray(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != base.dim:
            raise InputError("matrix must map into the base norm's space")
        if np.linalg.matrix_rank(a) != a.shape[1]:
            raise InputError("pullback matrix must have full column rank")
        self.base = base
        self.matrix = a
        self.dim = a.shape[1]
        self.smooth = base.smooth

    def eval(self, v) -> float:
        v = _as_vec(v, self.dim)
        return self.base.eval(self.matrix @ v)

    def is_smooth_at(self, v) -> bool:
        v = _as_vec(v, self.dim)
        if np.all(v == 0.0):
            return False
        return self.base.is_smooth_at(self.matrix @ v)

    def grad(self, v) -> np.ndarray:
        v = _as_vec(v, self.dim)
        return self.matrix.T @ self.base.grad(self.matrix @ v)

    def _dir_deriv_corner(self, v, w, side) -> float:
        return self.base.dir_deriv(self.matrix @ v, self.matrix @ w, side)

    def to_json(self) -> dict:
        return {
            "type": "pullback",
            "base": self.base.to_json(),
            "matrix": self.matrix.tolist(),
        }

    def __repr__(self):
        return f"Pullback(base={self.base!r}, dim={self.dim})"


def norm_from_json(data: dict) -> Norm:
    kind = data.get("type")
    if kind == "euclidean-scaled":
        return EuclideanScaled(data["dim"], data.get("scale", 1.0))
    if kind == "ellipsoidal":
        return Ellipsoidal(data["q"])
    if kind == "lp":
        return Lp(data["dim"], data["p"])
    if kind == "max-of-ellipsoidal":
        return MaxOfEllipsoidal(data["components"])
    if kind == "cone-patched":
        return ConePatched(
            norm_from_json(data["base"]), data["axis"], data["half_angle"], data["target"]
        )
    if kind == "pullback":
        return Pullback(norm_from_json(data["base"]), data["matrix"])
    raise InputError(f"unknown norm type {kind!r}")


@dataclass
class NormReport:
    strictly_convex: bool
    smooth: bool
    worst_convexity_margin: float
    worst_gradient_error: float
    corner_witness: list | None = None
    convexity_witness: list | None = None

    def to_json(self) -> dict:
        return {
            "strictly_convex": self.strictly_convex,
            "smooth": self.smooth,
            "worst_convexity_margin": self.worst_convexity_margin,
            "worst_gradient_error": self.worst_gradient_error,
            "corner_witness": self.corner_witness,
            "convexity_witness": self.convexity_witness,
        }


def verify_norm(norm: Norm, sample_count: int = 200, tol: float = 1e-9, seed: int = 0) -> NormReport:
    """Sampling-based strict-convexity and smoothness check.

    Not a proof: random unit pairs are tested for midpoint-norm < 1 and, where
    the norm claims smoothness, the analytic gradient is checked against
    central differences.  Deterministic for a fixed seed.
    """
    if sample_count < 2:
        raise InputError("sample_count must be >= 2")
    rng = np.random.default_rng(seed)
    dim = norm.dim

    worst_margin = math.inf
    convexity_witness = None
    strictly_convex = True
    for _ in range(sample_count):
        u = rng.normal(size=dim)
        w = rng.normal(size=dim)
        if np.linalg.norm(u) < 1e-12 or np.linalg.norm(w) < 1e-12:
            continue
        u = norm.unit(u)
        w = norm.unit(w)
        if np.linalg.norm(u - w) < 1e-8:
            continue
        margin = 1.0 - norm.eval(0.5 * (u + w))
        if margin < worst_margin:
            worst_margin = margin
            convexity_witness = [u.tolist(), w.tolist()]
        if margin <= tol:
            strictly_convex = False

    worst_grad_err = 0.0
    smooth = True
    corner_witness = None
    for _ in range(sample_count):
        v = rng.normal(size=dim)
        if np.linalg.norm(v) < 1e-12:
            continue
        v = norm.unit(v)
        if not norm.is_smooth_at(v):
            smooth = False
            corner_witness = v.tolist()
            continue
        g = norm.grad(v)
        h = 1e-6 * norm.eval(v)
        for k in range(dim):
            e = np.zeros(dim)
            e[k] = h
            fd = (norm.eval(v + e) - norm.eval(v - e)) / (2.0 * h)
            err = abs(fd - g[k]) / max(1.0, abs(g[k]))
            worst_grad_err = max(worst_grad_err, err)
            if err > 1e-5:
                smooth = False
                corner_witness = v.tolist()

    # actively look for corner loci of declared non-smooth variants
    if isinstance(norm, MaxOfEllipsoidal):
        for _ in range(sample_count):
            a = rng.normal(size=dim)
            b = rng.normal(size=dim)
            if np.linalg.norm(a) < 1e-12 or np.linalg.norm(b) < 1e-12:
                continue
            corner = _bisect_corner(norm, a, b)
            if corner is not None:
                smooth = False
                corner_witness = corner.tolist()
                break

    return NormReport(
        strictly_convex=strictly_convex,
        smooth=smooth,
        worst_convexity_margin=float(worst_margin),
        worst_gradient_error=float(worst_grad_err),
        corner_witness=corner_witness,
        convexity_witness=convexity_witness,
    )


def _bisect_corner(norm: MaxOfEllipsoidal, a, b, iters: int = 80):
    """Find a direction between a and b where the active ellipsoid switches."""

    def leader(v):
        vals = norm._values(v)
        return int(np.argmax(vals))

    la, lb = leader(a), leader(b)
    if la == lb:
        return None
    a = np.asarray(a, float).copy()
    b = np.asarray(b, float).copy()
    for _ in range(iters):
        m = 0.5 * (a + b)
        if leader(m) == la:
            a = m
        else:
            b = m
    m = 0.5 * (a + b)
    return m / np.linalg.norm(m) if not norm.is_smooth_at(m) else None
