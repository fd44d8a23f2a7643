import math

import numpy as np
import pytest

from finslerpl.complex import Complex, Face, Gluing, Point, Subface, face_from_vertices
from finslerpl.norms import Ellipsoidal, EuclideanScaled

INF = math.inf


def glued_half_planes(beta_up=0.5, beta_down=-0.5) -> Complex:
    """Two half-planes with different ellipsoidal norms, glued on the x-axis."""
    axis = lambda: Subface([0.0, 0.0], [[1.0, 0.0]], [-INF], [INF])
    up = Face(0, 2, Ellipsoidal([[1.0, beta_up], [beta_up, 1.0]]),
              [[0.0, -1.0]], [0.0], [axis()])
    down = Face(1, 2, Ellipsoidal([[1.0, beta_down], [beta_down, 1.0]]),
                [[0.0, 1.0]], [0.0], [axis()])
    return Complex([up, down], [Gluing(0, 0, 1, 0, [[1.0]], [0.0])])


@pytest.fixture(scope="session")
def half_planes() -> Complex:
    return glued_half_planes()


@pytest.fixture(scope="session")
def flat_square() -> Complex:
    face = face_from_vertices(0, [[0, 0], [2, 0], [2, 2], [0, 2]],
                              EuclideanScaled(2))
    return Complex([face], [])


@pytest.fixture(scope="session")
def hp_instance():
    from finslerpl.gallery import build_glued_half_planes
    return build_glued_half_planes(0.5, -0.5)


@pytest.fixture(scope="session")
def flag_instance():
    from finslerpl.gallery import build_russian_flag
    return build_russian_flag(0.5)


@pytest.fixture(scope="session")
def belt_instance():
    from finslerpl.gallery import build_belt
    return build_belt(1.01, n_periods=12)


@pytest.fixture(scope="session")
def saddle_cone():
    """Induced length complex of the graph of a piecewise-linear saddle."""
    from finslerpl.norms import Lp
    from finslerpl.saddle import cone_surface_from_heights, induced_complex
    fan = [[1, 0], [0, 1], [-1, 0], [0, -1]]
    surf = cone_surface_from_heights(fan, [0.6, -0.6, 0.6, -0.6], Lp(3, 3.0))
    return induced_complex(surf)


def chart_point(cx: Complex, face: int, x, y) -> Point:
    return cx.canonical(Point.of(face, (x, y)))
