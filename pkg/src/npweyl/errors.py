"""Exception hierarchy.

The CLI maps the three top-level families onto exit codes:
ConfigError -> 1, GeometryError -> 2, NumericsError -> 3.
"""


class NpWeylError(Exception):
    """Base class for all package errors."""


class ConfigError(NpWeylError, ValueError):
    pass


class GeometryError(NpWeylError, ValueError):
    pass


class RegularityError(GeometryError):
    """Chart is degenerate (r_s x r_t vanishes) or its metric is not positive definite."""


class InvalidCurvatureError(GeometryError):
    """Curvature data violates H^2 >= K or yields 3W - 2 pi chi < 0."""


class MeshError(GeometryError):
    pass


class MeshParseError(MeshError):
    pass


class OpenSurfaceError(MeshError):
    pass


class NonManifoldError(MeshError):
    pass


class NonOrientableError(MeshError):
    pass


class InadmissibleInversionError(GeometryError):
    """Inversion center lies on (or numerically too close to) the surface."""


class CoincidentNodesError(GeometryError):
    pass


class NumericsError(NpWeylError, ArithmeticError):
    pass


class EigenSolveError(NumericsError):
    pass


class FitWindowError(NumericsError, ValueError):
    pass
