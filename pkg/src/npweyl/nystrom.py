"""Dense Nystrom discretization of the Neumann-Poincare operator.

Off-diagonal entries are the double-layer kernel times the source weight;
each diagonal entry is then set so that its row sums to 1/2 (the Gauss
identity), which makes the constant vector an exact eigenvector.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import CoincidentNodesError, GeometryError
from .surface import SurfaceQuadrature

FOUR_PI = 4.0 * math.pi
COINCIDENCE_TOL = 1e-12


def np_kernel(x, y, n_y):
    """``<y - x, n_y> / (4 pi |x - y|^3)``; broadcasts over leading axes."""
    d = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
    r2 = np.einsum("...k,...k", d, d)
    if np.any(r2 == 0):
        raise CoincidentNodesError("kernel evaluated at coincident points x = y")
    val = np.einsum("...k,...k", d, np.asarray(n_y, dtype=float)) / (FOUR_PI * r2 * np.sqrt(r2))
    return float(val) if np.ndim(val) == 0 else val


@dataclass(frozen=True, eq=False)
class NpMatrix:
    entries: np.ndarray
    weights: np.ndarray
    source_label: str = ""

    def __post_init__(self):
        n = len(self.weights)
        if self.entries.shape != (n, n):
            raise ValueError(f"entries must be {n}x{n}, got {self.entries.shape}")
        if not np.all(np.isfinite(self.entries)):
            raise ValueError("matrix has non-finite entries")
        self.entries.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n(self) -> int:
        return len(self.weights)


def _fill_rows(x, n, w, out, start, stop):
    d = x[None, :, :] - x[start:stop, None, :]
    r2 = np.einsum("ijk,ijk->ij", d, d)
    rows = np.arange(stop - start)
    r2[rows, start + rows] = np.inf
    num = np.einsum("ijk,jk->ij", d, n)
    with np.errstate(divide="ignore", invalid="ignore"):  # coincident pairs are reported by the caller
        block = num / (FOUR_PI * r2 * np.sqrt(r2)) * w[None, :]
    block[rows, start + rows] = 0.0
    block[rows, start + rows] = 0.5 - block.sum(axis=1)
    out[start:stop] = block
    j = np.argmin(r2, axis=1)
    return r2[rows, j], j, float(r2[np.isfinite(r2)].max(initial=0.0))


def assemble(quad: SurfaceQuadrature, workers: int | None = None, block: int = 128) -> NpMatrix:
    """Assemble the Nystrom matrix with Gauss-identity diagonal.

    Row blocks are filled independently (threads when ``workers > 1``); every
    entry and row sum is computed in the same order regardless of threading,
    so the result is deterministic.

    Raises
    ------
    CoincidentNodesError
        If two nodes are closer than ``1e-12`` times the surface diameter.
    """
    x = np.ascontiguousarray(quad.x, dtype=float)
    nrm = np.ascontiguousarray(quad.n, dtype=float)
    w = np.asarray(quad.w, dtype=float)
    size = len(w)
    if size < 2:
        raise GeometryError("need at least two nodes")
    out = np.empty((size, size))
    starts = list(range(0, size, block))
    jobs = [(s, min(s + block, size)) for s in starts]
    if workers is None:
        workers = min(os.cpu_count() or 1, 8)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda se: _fill_rows(x, nrm, w, out, *se), jobs))
    else:
        results = [_fill_rows(x, nrm, w, out, *se) for se in jobs]

    min_r2 = np.concatenate([r[0] for r in results])
    partner = np.concatenate([r[1] for r in results])
    diam = math.sqrt(max(r[2] for r in results))
    i = int(np.argmin(min_r2))
    if math.sqrt(min_r2[i]) <= COINCIDENCE_TOL * diam:
        raise CoincidentNodesError(
            f"nodes {i} and {int(partner[i])} coincide (distance {math.sqrt(min_r2[i]):.3e}, diameter {diam:.3e})"
        )
    return NpMatrix(entries=out, weights=w.copy(), source_label=quad.label)


def apply(m: NpMatrix, density) -> np.ndarray:
    density = np.asarray(density)
    if density.shape != (m.n,):
        raise ValueError(f"density has shape {density.shape}, expected ({m.n},)")
    return m.entries @ density


def symmetrize(m: NpMatrix) -> np.ndarray:
    """``D^{1/2} A D^{-1/2}`` with ``D = diag(w)``.

    Similar to ``A``; its singular values approximate the L2 singular values
    of the operator.
    """
    if not np.all(m.weights > 0):
        raise GeometryError("symmetrize requires positive weights")
    root = np.sqrt(m.weights)
    return root[:, None] * m.entries / root[None, :]


def export_matrix(m: NpMatrix, path) -> Path:
    """Write raw little-endian float64 row-major data plus a ``.json`` sidecar ``{n, label}``."""
    path = Path(path)
    m.entries.astype("<f8", copy=False).tofile(path)
    sidecar = path.with_suffix(path.suffix + ".json")
    sidecar.write_text(json.dumps({"n": m.n, "label": m.source_label}))
    return sidecar


def load_matrix(path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    data = np.fromfile(path, dtype="<f8").reshape(meta["n"], meta["n"])
    return data, meta


def write_vector_csv(path, values, header: str = "value") -> None:
    values = np.asarray(values)
    lines = [f"i,{header}"] + [f"{i},{v!r}" for i, v in enumerate(values.tolist())]
    Path(path).write_text("\n".join(lines) + "\n")
