"""Neumann-Poincare spectra on closed surfaces and the geometry behind their Weyl law."""

from .errors import (
    ConfigError,
    EigenSolveError,
    GeometryError,
    InadmissibleInversionError,
    MeshError,
    NumericsError,
    OpenSurfaceError,
    RegularityError,
)
from .invariants import (
    GeometryReport,
    Inversion,
    MobiusMap,
    Rotation,
    Scaling,
    Translation,
    apply_mobius,
    gauss_bonnet_check,
    geometry_report,
    predicted_weyl_constant,
    willmore_energy,
)
from .mesh import load_mesh, mesh_quadrature
from .nystrom import NpMatrix, apply, assemble, np_kernel, symmetrize
from .spectrum import (
    SpectrumResult,
    WeylFit,
    eigenvalues,
    exact_sphere_spectrum,
    plasmonic_eigenvalues,
    signed_split_fit,
    weyl_fit,
)
from .surface import (
    FundamentalForms,
    SurfaceChart,
    SurfaceQuadrature,
    build_quadrature,
    clifford_torus,
    curvatures,
    ellipsoid,
    fundamental_forms,
    sphere,
    stereographic_sphere,
    torus,
)
from .symbol import (
    SymbolPoint,
    principal_symbol,
    signed_densities,
    symbol_density_closed_form,
    symbol_density_numeric,
    weyl_density_pointwise,
)

__version__ = "0.1.0"
