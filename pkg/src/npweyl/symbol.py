"""Principal symbol of the NP operator and the densities built from it.

The order -1 symbol at a surface point with metric ``g`` and second form
``(L, M, N)`` is::

    p(x, xi) = (L xi_2^2 - 2 M xi_1 xi_2 + N xi_1^2) / (4 det g (g^{jk} xi_j xi_k)^{3/2})

Squaring and integrating over the unit circle in isothermal coordinates gives
a per-area density whose surface integral is the squared Weyl constant
``(3W - 2 pi chi) / (128 pi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, InvalidCurvatureError
from .surface import FundamentalForms, SurfaceChart, SurfaceQuadrature, curvatures, fundamental_forms, principal_curvatures

CONFORMAL_TOL = 1e-10
DEFAULT_N_THETA = 256


@dataclass(frozen=True)
class SymbolPoint:
    forms: FundamentalForms
    H: float
    K: float
    weight: float = 1.0

    @classmethod
    def from_forms(cls, forms: FundamentalForms, weight: float = 1.0) -> "SymbolPoint":
        H, K = curvatures(forms)
        return cls(forms=forms, H=float(H), K=float(K), weight=weight)

    @classmethod
    def from_chart(cls, chart: SurfaceChart, s: float, t: float) -> "SymbolPoint":
        return cls.from_forms(fundamental_forms(chart, s, t))

    @property
    def is_conformal(self) -> bool:
        f = self.forms
        return abs(f.E - f.G) <= CONFORMAL_TOL * f.E and abs(f.F) <= CONFORMAL_TOL * f.E


def principal_symbol(p: SymbolPoint, xi) -> float:
    """Evaluate the principal symbol at covector ``xi = (xi_1, xi_2)``.

    Homogeneous of degree -1 in ``xi``.
    """
    xi1, xi2 = (float(v) for v in xi)
    if xi1 == 0.0 and xi2 == 0.0:
        raise ValueError("principal symbol is undefined at xi = 0")
    f = p.forms
    det = f.E * f.G - f.F**2
    if not det > 0:
        raise GeometryError("metric is not positive definite")
    # inverse metric (G, -F; -F, E) / det
    quad = (f.G * xi1**2 - 2 * f.F * xi1 * xi2 + f.E * xi2**2) / det
    num = f.L * xi2**2 - 2 * f.M * xi1 * xi2 + f.N * xi1**2
    return num / (4.0 * det * quad**1.5)


def _require_conformal(p: SymbolPoint):
    if not p.is_conformal:
        raise GeometryError(
            "cosphere density is only defined here in isothermal coordinates (E = G, F = 0); "
            "use weyl_density_pointwise(H, K) for general charts"
        )


def symbol_density_numeric(p: SymbolPoint, n_theta: int = DEFAULT_N_THETA) -> float:
    """Per-unit-area density from trapezoidal integration of ``p^2`` over the unit circle."""
    if n_theta < 16:
        raise ValueError("n_theta must be at least 16")
    _require_conformal(p)
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    values = np.array([principal_symbol(p, (c, s)) for c, s in zip(np.cos(theta), np.sin(theta))])
    fiber = 2 * math.pi / n_theta * np.sum(values**2)
    # fiber integral is per unit chart area; dS = E ds dt
    return fiber / (8 * math.pi**2) / p.forms.E


def symbol_density_closed_form(p: SymbolPoint) -> float:
    _require_conformal(p)
    f = p.forms
    fiber = (0.75 * math.pi * f.L**2 + 0.75 * math.pi * f.N**2 + math.pi * f.M**2 + 0.5 * math.pi * f.L * f.N) / (16 * f.E)
    return fiber / (8 * math.pi**2) / f.E


def weyl_density_pointwise(H, K):
    """``(3/(128 pi)) (H^2 - K/3)``; integrates to ``(3W - 2 pi chi)/(128 pi)``."""
    H = np.asarray(H, dtype=float)
    K = np.asarray(K, dtype=float)
    if np.any(H**2 - K < -1e-12 * np.maximum(1.0, H**2)):
        raise InvalidCurvatureError("H^2 < K: not a valid curvature pair")
    d = 3.0 / (128 * math.pi) * (H**2 - K / 3.0)
    return float(d) if d.ndim == 0 else d


def signed_node_densities(H, K, n_theta: int = DEFAULT_N_THETA):
    """Per-node positive and negative parts of the symbol density.

    Uses principal curvatures and Euler's form ``kappa_1 cos^2 + kappa_2 sin^2``
    for the normal curvature, so no chart is needed.
    """
    if n_theta < 64:
        raise ValueError("n_theta must be at least 64")
    k1, k2 = principal_curvatures(H, K)
    theta = 2 * math.pi * np.arange(n_theta) / n_theta
    kn = np.multiply.outer(k1, np.cos(theta) ** 2) + np.multiply.outer(k2, np.sin(theta) ** 2)
    scale = 2 * math.pi / n_theta / (128 * math.pi**2)
    plus = scale * np.sum(np.clip(kn, 0.0, None) ** 2, axis=-1)
    minus = scale * np.sum(np.clip(-kn, 0.0, None) ** 2, axis=-1)
    return plus, minus


def signed_densities(quad: SurfaceQuadrature, n_theta: int = DEFAULT_N_THETA) -> tuple[float, float]:
    """Signed constants ``(C_+, C_-)`` with ``C_+^2 + C_-^2 = C^2``."""
    plus, minus = signed_node_densities(quad.H, quad.K, n_theta)
    return math.sqrt(float(np.dot(plus, quad.w))), math.sqrt(float(np.dot(minus, quad.w)))
