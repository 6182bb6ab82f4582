"""Parametric surfaces, fundamental forms, curvatures and quadrature node sets.

Sign convention
---------------
Normals ``n`` always point out of the enclosed region (they feed the
double-layer kernel).  The second fundamental form is measured along the
*inward* normal, ``L = -r_ss . n`` and so on, so that convex surfaces have
positive ``L, N`` and the round sphere of radius ``rho`` has ``H = +1/rho``.
Only ``H**2`` and ``K`` enter the Weyl constant, so the choice is cosmetic
there, but it also fixes the sign of the principal symbol used for the
signed densities.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, NamedTuple

import numpy as np

from .errors import GeometryError, RegularityError

Vec3Map = Callable[[np.ndarray, np.ndarray], np.ndarray]

_REGULARITY_TOL = 1e-12


class Jet(NamedTuple):
    """Position and first/second partial derivatives of a chart, each ``(..., 3)``."""

    r: np.ndarray
    rs: np.ndarray
    rt: np.ndarray
    rss: np.ndarray
    rst: np.ndarray
    rtt: np.ndarray


@dataclass(frozen=True, eq=False)
class SurfaceChart:
    """A parametric patch ``r(s, t)`` on the rectangle ``domain``.

    ``position`` (and the optional derivative maps) must broadcast over array
    arguments and return arrays of shape ``np.broadcast(s, t).shape + (3,)``.
    ``first_derivs`` returns ``(r_s, r_t)`` and ``second_derivs`` returns
    ``(r_ss, r_st, r_tt)``.  Missing derivative maps are replaced by central
    differences.  ``orientation`` is +1 when ``r_s x r_t`` points outward and
    -1 otherwise.
    """

    name: str
    domain: tuple[tuple[float, float], tuple[float, float]]
    periodic_s: bool
    periodic_t: bool
    position: Vec3Map
    first_derivs: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None
    second_derivs: Callable[
        [np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]
    ] | None = None
    genus: int = 0
    orientation: int = 1
    # overrides the three maps above when set (used by transformed charts)
    jet_fn: Callable[..., Jet] | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        if self.genus < 0:
            raise ValueError("genus must be non-negative")
        (s0, s1), (t0, t1) = self.domain
        if not (s1 > s0 and t1 > t0):
            raise ValueError(f"empty chart domain {self.domain}")

    @property
    def euler_characteristic(self) -> int:
        return 2 - 2 * self.genus

    def default_step(self) -> float:
        (s0, s1), (t0, t1) = self.domain
        return 1e-3 * max(s1 - s0, t1 - t0) / 32

    def jet(self, s, t, h: float | None = None) -> Jet:
        """Evaluate position and derivatives; ``h`` is the finite-difference step if needed."""
        s = np.asarray(s, dtype=float)
        t = np.asarray(t, dtype=float)
        s, t = np.broadcast_arrays(s, t)
        if self.jet_fn is not None:
            return self.jet_fn(s, t, h)
        h = self.default_step() if h is None else h
        r = self.position(s, t)
        if self.first_derivs is not None:
            rs, rt = self.first_derivs(s, t)
        else:
            rs, rt = _fd_first(self.position, s, t, h)
        if self.second_derivs is not None:
            rss, rst, rtt = self.second_derivs(s, t)
        elif self.first_derivs is not None:
            rss, rst, rtt = _fd_second_from_first(self.first_derivs, s, t, h)
        else:
            rss, rst, rtt = _fd_second(self.position, s, t, h)
        return Jet(*(np.asarray(a, dtype=float) for a in (r, rs, rt, rss, rst, rtt)))


def _fd_first(pos, s, t, h):
    rs = (pos(s + h, t) - pos(s - h, t)) / (2 * h)
    rt = (pos(s, t + h) - pos(s, t - h)) / (2 * h)
    return rs, rt


def _fd_second(pos, s, t, h):
    r0 = pos(s, t)
    rss = (pos(s + h, t) - 2 * r0 + pos(s - h, t)) / h**2
    rtt = (pos(s, t + h) - 2 * r0 + pos(s, t - h)) / h**2
    rst = (pos(s + h, t + h) - pos(s + h, t - h) - pos(s - h, t + h) + pos(s - h, t - h)) / (4 * h**2)
    return rss, rst, rtt


def _fd_second_from_first(first, s, t, h):
    rs_p, rt_p = first(s + h, t)
    rs_m, rt_m = first(s - h, t)
    _, rt_tp = first(s, t + h)
    _, rt_tm = first(s, t - h)
    rss = (rs_p - rs_m) / (2 * h)
    rst = (rt_p - rt_m) / (2 * h)
    rtt = (rt_tp - rt_tm) / (2 * h)
    return rss, rst, rtt


@dataclass(frozen=True)
class FundamentalForms:
    """First (E, F, G) and second (L, M, N) fundamental form coefficients.

    Scalars or equally shaped arrays.
    """

    E: Any
    F: Any
    G: Any
    L: Any
    M: Any
    N: Any

    @property
    def metric_det(self):
        return self.E * self.G - self.F**2


@dataclass(frozen=True)
class SurfaceNode:
    x: np.ndarray
    n: np.ndarray
    w: float
    forms: FundamentalForms
    H: float
    K: float
    s: float
    t: float


class _Differential(NamedTuple):
    jet: Jet
    normal: np.ndarray
    area_element: np.ndarray
    forms: FundamentalForms


def _differential(chart: SurfaceChart, s, t, h=None) -> _Differential:
    jet = chart.jet(s, t, h)
    cross = np.cross(jet.rs, jet.rt)
    area = np.linalg.norm(cross, axis=-1)
    scale = np.linalg.norm(jet.rs, axis=-1) * np.linalg.norm(jet.rt, axis=-1)
    bad = ~(area > _REGULARITY_TOL * scale)
    if np.any(bad):
        idx = np.argwhere(np.atleast_1d(bad))[0]
        s_bad = np.atleast_1d(np.broadcast_to(s, bad.shape))[tuple(idx)]
        t_bad = np.atleast_1d(np.broadcast_to(t, bad.shape))[tuple(idx)]
        raise RegularityError(
            f"chart {chart.name!r} is degenerate at (s, t) = ({s_bad:.6g}, {t_bad:.6g}): "
            "|r_s x r_t| = 0. Nodes must not sit on a pole or collapsed edge; "
            "treat the polar direction as non-periodic (Gauss-Legendre, strictly "
            "interior nodes) or offset the domain away from the pole."
        )
    n = chart.orientation * cross / area[..., None]
    forms = FundamentalForms(
        E=np.einsum("...k,...k", jet.rs, jet.rs),
        F=np.einsum("...k,...k", jet.rs, jet.rt),
        G=np.einsum("...k,...k", jet.rt, jet.rt),
        L=-np.einsum("...k,...k", jet.rss, n),
        M=-np.einsum("...k,...k", jet.rst, n),
        N=-np.einsum("...k,...k", jet.rtt, n),
    )
    return _Differential(jet, n, area, forms)


def fundamental_forms(chart: SurfaceChart, s, t, h: float | None = None) -> FundamentalForms:
    """First and second fundamental forms of ``chart`` at ``(s, t)``.

    Raises
    ------
    RegularityError
        If ``r_s x r_t`` vanishes at any requested point.
    """
    forms = _differential(chart, s, t, h).forms
    if np.ndim(forms.E) == 0:
        forms = FundamentalForms(*(float(v) for v in (forms.E, forms.F, forms.G, forms.L, forms.M, forms.N)))
    return forms


def curvatures(forms: FundamentalForms):
    """Mean and Gaussian curvature ``(H, K)`` from the Weingarten map.

    ``K = (LN - M^2)/(EG - F^2)`` and ``H = (EN + GL - 2FM) / (2(EG - F^2))``.
    """
    det = forms.metric_det
    if np.any(~(np.asarray(det) > 0)):
        raise RegularityError("first fundamental form is not positive definite (EG - F^2 <= 0)")
    E, F, G, L, M, N = forms.E, forms.F, forms.G, forms.L, forms.M, forms.N
    K = (L * N - M**2) / det
    H = (E * N + G * L - 2 * F * M) / (2 * det)
    return H, K


def principal_curvatures(H, K):
    """``(kappa_1, kappa_2) = H +- sqrt(H^2 - K)``; tiny negative discriminants are clipped."""
    H = np.asarray(H, dtype=float)
    disc = H**2 - np.asarray(K, dtype=float)
    tol = 1e-12 * np.maximum(1.0, H**2)
    if np.any(disc < -tol):
        from .errors import InvalidCurvatureError

        raise InvalidCurvatureError(f"H^2 < K at some node (min H^2 - K = {disc.min():.3e})")
    root = np.sqrt(np.clip(disc, 0.0, None))
    return H + root, H - root


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ChartSource:
    chart: SurfaceChart
    n_s: int
    n_t: int


@dataclass(frozen=True, eq=False)
class MeshSource:
    vertices: np.ndarray
    faces: np.ndarray


@dataclass(frozen=True, eq=False)
class SurfaceQuadrature:
    """Discrete surface: node positions, outward normals, area weights and geometry.

    Array fields have leading dimension ``N``.  ``source`` remembers how the
    node set was produced so that transformed copies can be rebuilt from
    scratch rather than by transforming stored node data.
    """

    x: np.ndarray
    n: np.ndarray
    w: np.ndarray
    forms: FundamentalForms
    H: np.ndarray
    K: np.ndarray
    euler_characteristic: int
    label: str
    s: np.ndarray | None = None
    t: np.ndarray | None = None
    source: ChartSource | MeshSource | None = field(default=None, repr=False)

    def __post_init__(self):
        n_nodes = len(self.w)
        if self.x.shape != (n_nodes, 3) or self.n.shape != (n_nodes, 3):
            raise GeometryError("x and n must have shape (N, 3)")
        if n_nodes and not np.all(self.w > 0):
            raise GeometryError("quadrature weights must be positive")
        if n_nodes and np.max(np.abs(np.linalg.norm(self.n, axis=1) - 1.0)) > 1e-12:
            raise GeometryError("normals must have unit length")
        for arr in (self.x, self.n, self.w, self.H, self.K):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.w)

    @property
    def area(self) -> float:
        return float(np.sum(self.w))

    @property
    def diameter(self) -> float:
        """Bounding-box diagonal, a cheap upper bound on the diameter."""
        return float(np.linalg.norm(self.x.max(axis=0) - self.x.min(axis=0)))

    @property
    def nodes(self) -> list[SurfaceNode]:
        s = self.s if self.s is not None else np.full(len(self), np.nan)
        t = self.t if self.t is not None else np.full(len(self), np.nan)
        f = self.forms
        return [
            SurfaceNode(
                x=self.x[i],
                n=self.n[i],
                w=float(self.w[i]),
                forms=FundamentalForms(*(float(c[i]) for c in (f.E, f.F, f.G, f.L, f.M, f.N))),
                H=float(self.H[i]),
                K=float(self.K[i]),
                s=float(s[i]),
                t=float(t[i]),
            )
            for i in range(len(self))
        ]

    def to_dict(self) -> dict:
        f = self.forms
        nodes = []
        for i in range(len(self)):
            nodes.append(
                {
                    "x": self.x[i].tolist(),
                    "n": self.n[i].tolist(),
                    "w": float(self.w[i]),
                    "E": float(f.E[i]),
                    "F": float(f.F[i]),
                    "G": float(f.G[i]),
                    "L": float(f.L[i]),
                    "M": float(f.M[i]),
                    "N": float(f.N[i]),
                    "H": float(self.H[i]),
                    "K": float(self.K[i]),
                }
            )
        return {"label": self.label, "chi": int(self.euler_characteristic), "nodes": nodes}

    @classmethod
    def from_dict(cls, doc: dict) -> "SurfaceQuadrature":
        nodes = doc["nodes"]

        def col(key):
            return np.array([nd[key] for nd in nodes], dtype=float)

        forms = FundamentalForms(*(col(k) for k in "EFGLMN"))
        return cls(
            x=np.array([nd["x"] for nd in nodes], dtype=float).reshape(-1, 3),
            n=np.array([nd["n"] for nd in nodes], dtype=float).reshape(-1, 3),
            w=col("w"),
            forms=forms,
            H=col("H"),
            K=col("K"),
            euler_characteristic=int(doc["chi"]),
            label=str(doc["label"]),
        )

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))


def read_quadrature_json(path) -> SurfaceQuadrature:
    return SurfaceQuadrature.from_dict(json.loads(Path(path).read_text()))


def _axis_rule(lo: float, hi: float, count: int, periodic: bool):
    if periodic:
        step = (hi - lo) / count
        return lo + step * np.arange(count), np.full(count, step)
    x, wx = np.polynomial.legendre.leggauss(count)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * wx


def build_quadrature(chart: SurfaceChart, n_s: int, n_t: int, label: str | None = None) -> SurfaceQuadrature:
    """Tensor-product quadrature on ``chart``.

    Periodic directions use the equispaced trapezoidal rule, non-periodic ones
    Gauss-Legendre (whose nodes are strictly interior, so the poles of a
    latitude/longitude chart are never hit).
    """
    if n_s < 4 or n_t < 4:
        raise ValueError(f"resolution must be at least 4x4, got {n_s}x{n_t}")
    (s0, s1), (t0, t1) = chart.domain
    s_nodes, s_w = _axis_rule(s0, s1, n_s, chart.periodic_s)
    t_nodes, t_w = _axis_rule(t0, t1, n_t, chart.periodic_t)
    S, T = np.meshgrid(s_nodes, t_nodes, indexing="ij")
    h = 1e-3 * max((s1 - s0) / n_s, (t1 - t0) / n_t)
    d = _differential(chart, S.ravel(), T.ravel(), h)
    H, K = curvatures(d.forms)
    w = d.area_element * np.outer(s_w, t_w).ravel()
    return SurfaceQuadrature(
        x=np.ascontiguousarray(d.jet.r),
        n=np.ascontiguousarray(d.normal),
        w=w,
        forms=d.forms,
        H=H,
        K=K,
        euler_characteristic=chart.euler_characteristic,
        label=label or f"{chart.name}-{n_s}x{n_t}",
        s=S.ravel(),
        t=T.ravel(),
        source=ChartSource(chart, n_s, n_t),
    )


def signed_volume(chart: SurfaceChart, n_s: int = 24, n_t: int = 48) -> float:
    """Enclosed volume ``(1/3) int x . (r_s x r_t) ds dt`` ignoring ``chart.orientation``.

    Positive iff ``r_s x r_t`` points outward.
    """
    (s0, s1), (t0, t1) = chart.domain
    s_nodes, s_w = _axis_rule(s0, s1, n_s, chart.periodic_s)
    t_nodes, t_w = _axis_rule(t0, t1, n_t, chart.periodic_t)
    S, T = np.meshgrid(s_nodes, t_nodes, indexing="ij")
    jet = chart.jet(S.ravel(), T.ravel())
    cross = np.cross(jet.rs, jet.rt)
    return float(np.sum(np.einsum("ik,ik->i", jet.r, cross) * np.outer(s_w, t_w).ravel()) / 3.0)


# ---------------------------------------------------------------------------
# built-in charts
# ---------------------------------------------------------------------------


def ellipsoid(a: float, b: float, c: float, name: str = "ellipsoid") -> SurfaceChart:
    """Ellipsoid with semi-axes ``a, b, c`` in colatitude ``s`` and longitude ``t``."""
    if min(a, b, c) <= 0:
        raise ValueError("ellipsoid semi-axes must be positive")
    ax = np.array([a, b, c], dtype=float)

    def position(s, t):
        ss, cs, st, ct = np.sin(s), np.cos(s), np.sin(t), np.cos(t)
        return np.stack([ss * ct, ss * st, cs * np.ones_like(t)], axis=-1) * ax

    def first(s, t):
        ss, cs, st, ct = np.sin(s), np.cos(s), np.sin(t), np.cos(t)
        zero = np.zeros(np.broadcast(s, t).shape)
        rs = np.stack([cs * ct, cs * st, -ss + zero], axis=-1) * ax
        rt = np.stack([-ss * st, ss * ct, zero], axis=-1) * ax
        return rs, rt

    def second(s, t):
        ss, cs, st, ct = np.sin(s), np.cos(s), np.sin(t), np.cos(t)
        zero = np.zeros(np.broadcast(s, t).shape)
        rss = np.stack([-ss * ct, -ss * st, -cs + zero], axis=-1) * ax
        rst = np.stack([-cs * st, cs * ct, zero], axis=-1) * ax
        rtt = np.stack([-ss * ct, -ss * st, zero], axis=-1) * ax
        return rss, rst, rtt

    return SurfaceChart(
        name=name,
        domain=((0.0, math.pi), (0.0, 2 * math.pi)),
        periodic_s=False,
        periodic_t=True,
        position=position,
        first_derivs=first,
        second_derivs=second,
        genus=0,
        orientation=1,
    )


def sphere(rho: float = 1.0) -> SurfaceChart:
    if rho <= 0:
        raise ValueError("sphere radius must be positive")
    return ellipsoid(rho, rho, rho, name="sphere")


def torus(R: float = 2.0, r: float = 1.0, name: str = "torus") -> SurfaceChart:
    """Torus of revolution; ``s`` is the tube angle (``s = 0`` on the outer equator), ``t`` the axial angle."""
    if not (r > 0 and R > r):
        raise ValueError(f"torus needs R > r > 0, got R={R}, r={r}")

    def position(s, t):
        rho = R + r * np.cos(s)
        return np.stack([rho * np.cos(t), rho * np.sin(t), r * np.sin(s) + 0 * t], axis=-1)

    def first(s, t):
        cs, ss, ct, st = np.cos(s), np.sin(s), np.cos(t), np.sin(t)
        rho = R + r * cs
        zero = np.zeros(np.broadcast(s, t).shape)
        rs = np.stack([-r * ss * ct, -r * ss * st, r * cs + zero], axis=-1)
        rt = np.stack([-rho * st, rho * ct, zero], axis=-1)
        return rs, rt

    def second(s, t):
        cs, ss, ct, st = np.cos(s), np.sin(s), np.cos(t), np.sin(t)
        rho = R + r * cs
        zero = np.zeros(np.broadcast(s, t).shape)
        rss = np.stack([-r * cs * ct, -r * cs * st, -r * ss + zero], axis=-1)
        rst = np.stack([r * ss * st, -r * ss * ct, zero], axis=-1)
        rtt = np.stack([-rho * ct, -rho * st, zero], axis=-1)
        return rss, rst, rtt

    return SurfaceChart(
        name=name,
        domain=((0.0, 2 * math.pi), (0.0, 2 * math.pi)),
        periodic_s=True,
        periodic_t=True,
        position=position,
        first_derivs=first,
        second_derivs=second,
        genus=1,
        orientation=-1,
    )


def clifford_torus() -> SurfaceChart:
    """Torus of revolution with tube radius 1 at distance sqrt(2) from the axis."""
    return torus(math.sqrt(2.0), 1.0, name="clifford")


def stereographic_sphere(extent: float = 2.0) -> SurfaceChart:
    """Conformal chart of the unit sphere, projection from the south pole.

    ``r(u, v) = (2u, 2v, 1 - u^2 - v^2) / (1 + u^2 + v^2)`` with
    ``E = G = 4/(1 + u^2 + v^2)^2`` and ``F = 0``.  Covers the square
    ``[-extent, extent]^2``; meant for pointwise symbol checks, not for
    global quadrature.
    """

    def parts(u, v):
        q = 1.0 + u**2 + v**2
        g = 1.0 / q
        gu, gv = -2 * u / q**2, -2 * v / q**2
        guu = -2 / q**2 + 8 * u**2 / q**3
        guv = 8 * u * v / q**3
        gvv = -2 / q**2 + 8 * v**2 / q**3
        zero = np.zeros_like(q)
        one = np.ones_like(q)
        P = np.stack([2 * u, 2 * v, 1 - u**2 - v**2], axis=-1)
        Pu = np.stack([2 * one, zero, -2 * u], axis=-1)
        Pv = np.stack([zero, 2 * one, -2 * v], axis=-1)
        Puu = np.stack([zero, zero, -2 * one], axis=-1)
        Pvv = Puu
        return P, Pu, Pv, Puu, Pvv, g[..., None], gu[..., None], gv[..., None], guu[..., None], guv[..., None], gvv[..., None]

    def position(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        P, *_, g, _gu, _gv, _guu, _guv, _gvv = parts(u, v)
        return P * g

    def first(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        P, Pu, Pv, _, _, g, gu, gv, *_ = parts(u, v)
        return Pu * g + P * gu, Pv * g + P * gv

    def second(u, v):
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        P, Pu, Pv, Puu, Pvv, g, gu, gv, guu, guv, gvv = parts(u, v)
        ruu = Puu * g + 2 * Pu * gu + P * guu
        ruv = Pu * gv + Pv * gu + P * guv
        rvv = Pvv * g + 2 * Pv * gv + P * gvv
        return ruu, ruv, rvv

    return SurfaceChart(
        name="stereographic-sphere",
        domain=((-extent, extent), (-extent, extent)),
        periodic_s=False,
        periodic_t=False,
        position=position,
        first_derivs=first,
        second_derivs=second,
        genus=0,
        orientation=1,
    )


CHART_FACTORIES = {
    "sphere": sphere,
    "ellipsoid": ellipsoid,
    "torus": torus,
    "clifford": clifford_torus,
}
