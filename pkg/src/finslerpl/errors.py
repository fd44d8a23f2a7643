"""Exception hierarchy for the library."""


class FinslerError(Exception):
    """Base class for all library errors."""


class InputError(FinslerError):
    """Malformed or out-of-domain input."""


class DimensionMismatchError(InputError):
    pass


class UndefinedDerivativeError(FinslerError):
    """Derivative requested at the origin."""


class NonSmoothPointError(FinslerError):
    """Gradient requested at a corner of a non-smooth norm; use dir_deriv."""


class IncidenceError(InputError):
    """Point is not on a subface shared with the requested face."""


class ValidationError(FinslerError):
    """Complex failed structural validation."""


class OutOfRangeError(FinslerError):
    """Points too far apart for a local distance query."""


class NonUniqueMidpointError(FinslerError):
    """Two distinct minimizers within tolerance; midpoint is ambiguous."""


class NonConvergenceError(FinslerError):
    """Iteration budget exhausted before the convergence criterion was met."""

    def __init__(self, message, trajectory_tail=None):
        super().__init__(message)
        self.trajectory_tail = trajectory_tail or []


class UnreachableError(FinslerError):
    """No path between the requested graph nodes."""


class ConstructionError(FinslerError):
    """A gallery construction failed its own verification."""
