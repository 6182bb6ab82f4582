"""Willmore energy, Gauss-Bonnet, the predicted Weyl constant, and Moebius maps."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Union

import numpy as np
from scipy.optimize import minimize

from .errors import GeometryError, InadmissibleInversionError, InvalidCurvatureError
from .mesh import mesh_quadrature
from .surface import (
    ChartSource,
    Jet,
    MeshSource,
    SurfaceChart,
    SurfaceQuadrature,
    build_quadrature,
    signed_volume,
)
from .symbol import DEFAULT_N_THETA, signed_densities, weyl_density_pointwise

INVERSION_TOL = 1e-9


def _require_nodes(quad: SurfaceQuadrature):
    if len(quad) == 0:
        raise GeometryError("empty quadrature")


def willmore_energy(quad: SurfaceQuadrature) -> float:
    """``sum_i w_i H_i^2``."""
    _require_nodes(quad)
    return float(np.dot(quad.w, quad.H**2))


def gauss_bonnet_check(quad: SurfaceQuadrature) -> tuple[float, float]:
    """Return ``(sum_i w_i K_i, |sum_i w_i K_i - 2 pi chi|)``."""
    _require_nodes(quad)
    integral = float(np.dot(quad.w, quad.K))
    return integral, abs(integral - 2 * math.pi * quad.euler_characteristic)


def predicted_weyl_constant(W: float, chi: int) -> float:
    """``sqrt((3W - 2 pi chi) / (128 pi))``."""
    radicand = 3 * W - 2 * math.pi * chi
    if radicand < 0:
        raise InvalidCurvatureError(f"3W - 2 pi chi = {radicand:.6g} < 0; curvature data is inconsistent")
    return math.sqrt(radicand / (128 * math.pi))


# ---------------------------------------------------------------------------
# Moebius maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Translation:
    b: tuple[float, float, float]

    def point(self, x):
        return x + np.asarray(self.b, dtype=float)

    def push(self, jet: Jet) -> Jet:
        return jet._replace(r=self.point(jet.r))

    def describe(self) -> str:
        return "translate:" + ",".join(repr(float(v)) for v in self.b)


@dataclass(frozen=True)
class Scaling:
    a: float

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("scaling factor must be positive")

    def point(self, x):
        return self.a * x

    def push(self, jet: Jet) -> Jet:
        return Jet(*(self.a * v for v in jet))

    def describe(self) -> str:
        return f"scale:{float(self.a)!r}"


@dataclass(frozen=True)
class Rotation:
    matrix: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        Q = np.asarray(self.matrix, dtype=float)
        if Q.shape != (3, 3) or not np.allclose(Q @ Q.T, np.eye(3), atol=1e-12):
            raise ValueError("rotation matrix must be 3x3 orthogonal")

    def point(self, x):
        return x @ np.asarray(self.matrix, dtype=float).T

    def push(self, jet: Jet) -> Jet:
        return Jet(*(self.point(v) for v in jet))

    def describe(self) -> str:
        return "rotate:" + ",".join(repr(float(v)) for v in np.ravel(self.matrix))


@dataclass(frozen=True)
class Inversion:
    """Sphere inversion ``x -> c + rho^2 (x - c) / |x - c|^2``."""

    center: tuple[float, float, float]
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("inversion radius must be positive")

    def point(self, x):
        c = np.asarray(self.center, dtype=float)
        d = x - c
        return c + self.radius**2 * d / np.einsum("...k,...k", d, d)[..., None]

    def push(self, jet: Jet) -> Jet:
        c = np.asarray(self.center, dtype=float)
        rho2 = self.radius**2
        d = jet.r - c
        q = np.einsum("...k,...k", d, d)[..., None]

        def dot(a, b):
            return np.einsum("...k,...k", a, b)[..., None]

        def jac(u):
            return rho2 * (u / q - 2 * d * dot(d, u) / q**2)

        def hess(u, v):
            du, dv = dot(d, u), dot(d, v)
            return rho2 * (
                -2 * (u * dv + v * du + d * dot(u, v)) / q**2 + 8 * d * du * dv / q**3
            )

        return Jet(
            r=c + rho2 * d / q,
            rs=jac(jet.rs),
            rt=jac(jet.rt),
            rss=jac(jet.rss) + hess(jet.rs, jet.rs),
            rst=jac(jet.rst) + hess(jet.rs, jet.rt),
            rtt=jac(jet.rtt) + hess(jet.rt, jet.rt),
        )

    def describe(self) -> str:
        return "invert:" + ",".join(repr(float(v)) for v in (*self.center, self.radius))


Primitive = Union[Translation, Scaling, Rotation, Inversion]


@dataclass(frozen=True)
class MobiusMap:
    """Composition of primitive maps, applied left to right."""

    primitives: tuple[Primitive, ...] = field(default_factory=tuple)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        for p in self.primitives:
            x = p.point(x)
        return x

    def then(self, other: "MobiusMap | Primitive") -> "MobiusMap":
        extra = other.primitives if isinstance(other, MobiusMap) else (other,)
        return MobiusMap(self.primitives + tuple(extra))

    def describe(self) -> str:
        return ";".join(p.describe() for p in self.primitives)

    @classmethod
    def parse(cls, spec: str) -> "MobiusMap":
        """Parse ``"translate:x,y,z;scale:a;invert:cx,cy,cz[,rho];rotate:q11,...,q33"``."""
        prims: list[Primitive] = []
        for item in filter(None, (part.strip() for part in spec.split(";"))):
            kind, _, args = item.partition(":")
            try:
                vals = [float(v) for v in args.split(",")] if args else []
            except ValueError as exc:
                raise ValueError(f"bad numbers in Moebius primitive {item!r}") from exc
            kind = kind.strip().lower()
            if kind in ("translate", "translation") and len(vals) == 3:
                prims.append(Translation(tuple(vals)))
            elif kind in ("scale", "scaling") and len(vals) == 1:
                prims.append(Scaling(vals[0]))
            elif kind in ("invert", "inversion") and len(vals) in (3, 4):
                prims.append(Inversion(tuple(vals[:3]), vals[3] if len(vals) == 4 else 1.0))
            elif kind in ("rotate", "rotation") and len(vals) == 9:
                prims.append(Rotation(tuple(tuple(vals[3 * i : 3 * i + 3]) for i in range(3))))
            else:
                raise ValueError(f"cannot parse Moebius primitive {item!r}")
        return cls(tuple(prims))


def random_mobius(rng: np.random.Generator, quad: SurfaceQuadrature, margin: float = 0.3) -> MobiusMap:
    """Random inversion + scaling + translation admissible for ``quad``.

    The inversion center is drawn until its distance to every node exceeds
    ``margin`` times the surface diameter.
    """
    lo, hi = quad.x.min(axis=0), quad.x.max(axis=0)
    diam = quad.diameter
    for _ in range(1000):
        c = rng.uniform(lo - 0.5 * diam, hi + 0.5 * diam)
        if np.min(np.linalg.norm(quad.x - c, axis=1)) > margin * diam:
            break
    else:  # pragma: no cover - practically unreachable
        raise GeometryError("could not draw an admissible inversion center")
    return MobiusMap(
        (
            Inversion(tuple(c), float(rng.uniform(0.5, 2.0) * diam)),
            Scaling(float(rng.uniform(0.3, 3.0))),
            Translation(tuple(rng.normal(size=3))),
        )
    )


def _chart_distance(chart: SurfaceChart, c: np.ndarray) -> tuple[float, float]:
    """Minimum distance from ``c`` to the chart image, and the sample diameter."""
    (s0, s1), (t0, t1) = chart.domain
    ns = np.linspace(s0, s1, 65)
    nt = np.linspace(t0, t1, 65)
    S, T = np.meshgrid(ns, nt, indexing="ij")
    pts = chart.jet(S.ravel(), T.ravel()).r
    diam = float(np.linalg.norm(pts.max(axis=0) - pts.min(axis=0)))
    dist2 = np.einsum("ik,ik->i", pts - c, pts - c)
    best = float(np.sqrt(dist2.min()))
    bounds = [(s0, s1), (t0, t1)]

    def fun(p):
        jet = chart.jet(p[0], p[1])
        d = jet.r - c
        return float(d @ d), np.array([2 * d @ jet.rs, 2 * d @ jet.rt])

    for k in np.argsort(dist2)[:3]:
        res = minimize(fun, [S.ravel()[k], T.ravel()[k]], jac=True, method="L-BFGS-B", bounds=bounds)
        best = min(best, math.sqrt(max(res.fun, 0.0)))
    return best, diam


def _check_inversion(dist: float, diam: float, prim: Inversion):
    if dist < INVERSION_TOL * diam:
        raise InadmissibleInversionError(
            f"inversion center {prim.center} lies on the surface "
            f"(distance {dist:.3e} < {INVERSION_TOL:g} x diameter {diam:.3e})"
        )


def _push_chart(chart: SurfaceChart, prim: Primitive) -> SurfaceChart:
    if isinstance(prim, Inversion):
        dist, diam = _chart_distance(chart, np.asarray(prim.center, dtype=float))
        _check_inversion(dist, diam, prim)

    def jet_fn(s, t, h=None):
        return prim.push(chart.jet(s, t, h))

    def position(s, t):
        return prim.point(chart.jet(s, t).r)

    def first(s, t):
        j = jet_fn(s, t)
        return j.rs, j.rt

    def second(s, t):
        j = jet_fn(s, t)
        return j.rss, j.rst, j.rtt

    out = SurfaceChart(
        name=chart.name,
        domain=chart.domain,
        periodic_s=chart.periodic_s,
        periodic_t=chart.periodic_t,
        position=position,
        first_derivs=first,
        second_derivs=second,
        genus=chart.genus,
        orientation=chart.orientation,
        jet_fn=jet_fn,
    )
    needs_check = isinstance(prim, Inversion) or (
        isinstance(prim, Rotation) and np.linalg.det(np.asarray(prim.matrix)) < 0
    )
    if needs_check:
        orientation = 1 if signed_volume(out) > 0 else -1
        out = replace(out, orientation=orientation)
    return out


def apply_mobius(obj, mobius: MobiusMap):
    """Transform a chart or quadrature.

    Charts are transformed through the chain rule, so derivatives stay
    analytic.  Quadratures are rebuilt from their transformed source (chart or
    mesh) and never reuse stored node geometry.
    """
    if isinstance(obj, SurfaceChart):
        chart = obj
        for prim in mobius.primitives:
            chart = _push_chart(chart, prim)
        return chart
    if isinstance(obj, SurfaceQuadrature):
        src = obj.source
        if isinstance(src, ChartSource):
            chart = apply_mobius(src.chart, mobius)
            return build_quadrature(chart, src.n_s, src.n_t, label=obj.label)
        if isinstance(src, MeshSource):
            verts = src.vertices
            for prim in mobius.primitives:
                if isinstance(prim, Inversion):
                    diam = float(np.linalg.norm(verts.max(axis=0) - verts.min(axis=0)))
                    dist = float(np.min(np.linalg.norm(verts - np.asarray(prim.center), axis=1)))
                    _check_inversion(dist, diam, prim)
                verts = prim.point(verts)
            return mesh_quadrature(verts, src.faces, label=obj.label)
        raise GeometryError("quadrature has no chart or mesh source; cannot recompute its geometry")
    raise TypeError(f"cannot apply a Moebius map to {type(obj).__name__}")


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeometryReport:
    label: str
    n_nodes: int
    area: float
    willmore_energy: float
    gauss_bonnet_integral: float
    euler_characteristic: int
    gauss_bonnet_residual: float
    predicted_weyl_constant: float
    signed_densities: tuple[float, float] | None = None
    weyl_density: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        doc = {
            "label": self.label,
            "n_nodes": self.n_nodes,
            "area": self.area,
            "W": self.willmore_energy,
            "gauss_bonnet_integral": self.gauss_bonnet_integral,
            "chi": self.euler_characteristic,
            "gauss_bonnet_residual": self.gauss_bonnet_residual,
            "C": self.predicted_weyl_constant,
        }
        if self.signed_densities is not None:
            doc["C_plus"], doc["C_minus"] = self.signed_densities
        if self.weyl_density is not None:
            doc["weyl_density"] = self.weyl_density.tolist()
        return doc

    def table(self) -> str:
        """Fixed-order ``key=value`` lines."""
        rows = [
            ("label", self.label),
            ("n_nodes", self.n_nodes),
            ("area", f"{self.area:.12g}"),
            ("W", f"{self.willmore_energy:.12g}"),
            ("chi", self.euler_characteristic),
            ("gauss_bonnet_integral", f"{self.gauss_bonnet_integral:.12g}"),
            ("gauss_bonnet_residual", f"{self.gauss_bonnet_residual:.3e}"),
            ("C", f"{self.predicted_weyl_constant:.12g}"),
        ]
        if self.signed_densities is not None:
            rows += [("C_plus", f"{self.signed_densities[0]:.12g}"), ("C_minus", f"{self.signed_densities[1]:.12g}")]
        return "\n".join(f"{k}={v}" for k, v in rows)

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def geometry_report(
    quad: SurfaceQuadrature,
    signed: bool = False,
    include_density: bool = False,
    n_theta: int = DEFAULT_N_THETA,
) -> GeometryReport:
    W = willmore_energy(quad)
    integral, residual = gauss_bonnet_check(quad)
    return GeometryReport(
        label=quad.label,
        n_nodes=len(quad),
        area=quad.area,
        willmore_energy=W,
        gauss_bonnet_integral=integral,
        euler_characteristic=quad.euler_characteristic,
        gauss_bonnet_residual=residual,
        predicted_weyl_constant=predicted_weyl_constant(W, quad.euler_characteristic),
        signed_densities=signed_densities(quad, n_theta) if signed else None,
        weyl_density=weyl_density_pointwise(quad.H, quad.K) if include_density else None,
    )
