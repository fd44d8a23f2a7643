"""Polyhedral Finsler complexes: norms on convex faces glued by affine
isometries, geodesics as broken lines driven by midpoint shortening, lattice
oracles, uniqueness scans, and saddle cone certificates."""

from .complex import (
    Complex, Cone, Face, Gluing, Point, Subface, face_from_vertices,
    sector_face, tangent_cone,
)
from .config import RunConfig, Tolerances
from .errors import (
    ConstructionError, FinslerError, IncidenceError, InputError,
    NonConvergenceError, NonSmoothPointError, NonUniqueMidpointError,
    OutOfRangeError, UndefinedDerivativeError, UnreachableError,
    ValidationError,
)
from .gallery import (
    BUILDERS, build_belt, build_double_belt, build_glued_half_planes,
    build_russian_flag, geodesic_fan, measure_asymptotics,
    measure_convexity_failure,
)
from .norms import (
    ConePatched, Ellipsoidal, EuclideanScaled, Lp, MaxOfEllipsoidal, Norm,
    Pullback, norm_from_json, verify_norm,
)
from .oracle import (
    Region, build_graph, enumerate_geodesics, oracle_distance, uniqueness_scan,
)
from .paths import (
    SearchConfig, VertexPath, busemann_check, is_geodesic_sequence,
    is_local_geodesic_onesided, local_distance, midpoint, shortest_paths,
)
from .saddle import (
    SaddleConeSurface, cone_surface_from_heights, induced_complex,
    is_saddle_cone, is_saddle_surface,
)
from .shortening import (
    AdmissibleSequence, homotopy_unique, shorten_to_geodesic, subdivide,
    uniqueness_radius,
)

__version__ = "0.1.0"
