import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from finslerpl.errors import (
    InputError, NonSmoothPointError, UndefinedDerivativeError,
)
from finslerpl.norms import (
    ConePatched, Ellipsoidal, EuclideanScaled, Lp, MaxOfEllipsoidal, Pullback,
    norm_from_json, verify_norm,
)

finite_vec2 = st.tuples(
    st.floats(-10, 10, allow_nan=False), st.floats(-10, 10, allow_nan=False)
).map(np.array).filter(lambda v: np.linalg.norm(v) > 1e-6)


def sample_norms():
    return [
        EuclideanScaled(2, 1.0),
        EuclideanScaled(2, 1.01),
        Ellipsoidal([[1.0, 0.5], [0.5, 1.0]]),
        Lp(2, 3.0),
        Lp(2, 4.5),
        ConePatched(EuclideanScaled(2, 1.01), (0.0, 1.0), 0.3, 1.0),
        Pullback(Lp(3, 3.0), [[1.0, 0.0], [0.0, 1.0], [0.3, -0.2]]),
        MaxOfEllipsoidal([[[1.0, 0.5], [0.5, 1.0]], [[1.0, -0.5], [-0.5, 1.0]]]),
    ]


@settings(max_examples=60, deadline=None)
@given(v=finite_vec2, w=finite_vec2, s=st.floats(0.1, 5.0))
def test_norm_axioms(v, w, s):
    for n in sample_norms():
        assert n.eval(s * v) == pytest.approx(s * n.eval(v), rel=1e-12)
        assert n.eval(v + w) <= n.eval(v) + n.eval(w) + 1e-10
        assert n.eval(-v) == pytest.approx(n.eval(v), rel=1e-12)
        assert n.eval(v) > 0.0


@settings(max_examples=40, deadline=None)
@given(v=finite_vec2)
def test_gradient_matches_finite_differences(v):
    h = 1e-6
    v = v / np.linalg.norm(v)  # gradients are 0-homogeneous; test on the sphere
    for n in sample_norms():
        if not n.is_smooth_at(v):
            continue
        if isinstance(n, MaxOfEllipsoidal) and abs(v[0] * v[1]) < 1e-3:
            continue  # central differences would straddle the component tie
        g = n.grad(v)
        for k in range(2):
            e = np.zeros(2)
            e[k] = h
            fd = (n.eval(v + e) - n.eval(v - e)) / (2 * h)
            assert g[k] == pytest.approx(fd, abs=1e-5)
        # Euler: grad . v = eval(v)
        assert float(g @ v) == pytest.approx(n.eval(v), rel=1e-9)


def test_corner_norm_one_sided_derivatives():
    n = MaxOfEllipsoidal([[[1.0, 0.5], [0.5, 1.0]], [[1.0, -0.5], [-0.5, 1.0]]])
    vert = np.array([0.0, 1.0])
    assert not n.is_smooth_at(vert)
    with pytest.raises(NonSmoothPointError):
        n.grad(vert)
    # one-sided derivatives in the horizontal direction jump across the corner
    dplus = n.dir_deriv(vert, np.array([1.0, 0.0]), "plus")
    dminus = n.dir_deriv(vert, np.array([1.0, 0.0]), "minus")
    assert dplus == pytest.approx(0.5, abs=1e-12)
    assert dminus == pytest.approx(-0.5, abs=1e-12)
    # smooth away from the corner
    assert n.is_smooth_at(np.array([1.0, 0.2]))


def test_cone_patched_value_and_locality():
    base = EuclideanScaled(2, 1.01)
    n = ConePatched(base, (0.0, 1.0), 0.3, 1.0)
    assert n.eval((0.0, 2.0)) == pytest.approx(2.0, abs=1e-12)
    # outside the patch cone the norm is exactly the base
    assert n.eval((1.0, 0.1)) == base.eval((1.0, 0.1))
    # gradient on the axis is vertical with unit vertical component
    g = n.grad(np.array([0.0, 1.0]))
    assert g == pytest.approx(np.array([0.0, 1.0]), abs=1e-12)


def test_cone_patched_rejects_bad_parameters():
    with pytest.raises(InputError):
        ConePatched(EuclideanScaled(2), (0.0, 0.0), 0.3, 1.0)
    with pytest.raises(InputError):
        ConePatched(EuclideanScaled(2), (0.0, 1.0), 2.0, 1.0)
    with pytest.raises(InputError):
        ConePatched(
            MaxOfEllipsoidal([[[1, 0.5], [0.5, 1]], [[1, -0.5], [-0.5, 1]]]),
            (0.0, 1.0), 0.3, 1.0)


def test_deep_narrow_patch_flagged_nonconvex():
    n = ConePatched(EuclideanScaled(2, 2.0), (0.0, 1.0), 0.2, 1.0)
    rep = verify_norm(n, sample_count=400, seed=3)
    assert not rep.strictly_convex
    assert rep.convexity_witness is not None


def test_pullback_composition():
    m = np.array([[1.0, 0.0], [0.0, 1.0], [0.3, -0.2]])
    n = Pullback(Lp(3, 3.0), m)
    v = np.array([0.7, -1.3])
    assert n.eval(v) == pytest.approx(Lp(3, 3.0).eval(m @ v), rel=1e-14)
    with pytest.raises(InputError):
        Pullback(Lp(3, 3.0), [[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]])  # rank 1


def test_verify_norm_reports():
    rep = verify_norm(Ellipsoidal([[1.0, 0.5], [0.5, 1.0]]), sample_count=200)
    assert rep.strictly_convex and rep.smooth
    assert rep.worst_gradient_error < 1e-5
    rep = verify_norm(
        MaxOfEllipsoidal([[[1, 0.5], [0.5, 1]], [[1, -0.5], [-0.5, 1]]]),
        sample_count=200)
    assert rep.strictly_convex and not rep.smooth
    assert rep.corner_witness is not None


def test_json_round_trip():
    for n in sample_norms():
        m = norm_from_json(n.to_json())
        for v in ([1.0, 0.3], [-0.2, 1.7], [0.0, -1.0]):
            assert m.eval(v) == pytest.approx(n.eval(v), rel=1e-14)


def test_orth_complement_is_kernel_of_derivative():
    for n in sample_norms():
        v = n.unit(np.array([0.6, 1.1]))
        if not n.is_smooth_at(v):
            continue
        for w in n.orth_complement_basis(v):
            assert abs(float(n.grad(v) @ w)) < 1e-10


def test_degenerate_inputs():
    n = Ellipsoidal([[1.0, 0.5], [0.5, 1.0]])
    assert n.eval((0.0, 0.0)) == 0.0
    with pytest.raises(UndefinedDerivativeError):
        n.grad((0.0, 0.0))
    with pytest.raises(InputError):
        Ellipsoidal([[1.0, 2.0], [2.0, 1.0]])  # not positive definite
    with pytest.raises(InputError):
        Lp(2, 1.0)  # p = 1 is not strictly convex
    with pytest.raises(InputError):
        n.eval((math.inf, 0.0))
