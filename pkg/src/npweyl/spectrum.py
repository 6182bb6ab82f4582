"""Eigenvalues, singular values, Weyl fits and plasmonic eigenvalues.

Enumeration is 0-based and by descending modulus, so for a closed surface
``lambda_0 = 1/2`` (constant eigenfunctions) and on the unit sphere
``lambda_{k^2} = 1/(2(2k+1))``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EigenSolveError, FitWindowError
from .nystrom import NpMatrix, symmetrize

POLE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray  # complex, ordered
    singular_values: np.ndarray | None
    max_imag_residual: float
    n: int

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.eigenvalues)

    @property
    def real(self) -> np.ndarray:
        return self.eigenvalues.real

    def write_csv(self, path) -> None:
        """``j,re,im,modulus,singular_value`` rows, one per eigenvalue."""
        sv = self.singular_values
        lines = ["j,re,im,modulus,singular_value"]
        for j, lam in enumerate(self.eigenvalues.tolist()):
            s = "" if sv is None else repr(float(sv[j]))
            lines.append(f"{j},{lam.real!r},{lam.imag!r},{abs(lam)!r},{s}")
        Path(path).write_text("\n".join(lines) + "\n")


def order_eigenvalues(values) -> np.ndarray:
    """Sort by descending modulus, then descending real part, then descending imaginary part."""
    values = np.asarray(values, dtype=complex)
    idx = np.lexsort((-values.imag, -values.real, -np.abs(values)))
    return values[idx]


def spectrum_from_values(values, singular_values=None) -> SpectrumResult:
    lam = order_eigenvalues(values)
    sv = None if singular_values is None else np.sort(np.asarray(singular_values, dtype=float))[::-1]
    return SpectrumResult(
        eigenvalues=lam,
        singular_values=sv,
        max_imag_residual=float(np.max(np.abs(lam.imag), initial=0.0)),
        n=len(lam),
    )


def eigenvalues(m: NpMatrix, singular_values: bool = True) -> SpectrumResult:
    """Full dense non-symmetric eigensolve (LAPACK geev) plus SVD of the symmetrized matrix."""
    try:
        lam = np.linalg.eigvals(m.entries)
        sv = np.linalg.svd(symmetrize(m), compute_uv=False) if singular_values else None
    except np.linalg.LinAlgError as exc:
        raise EigenSolveError(f"dense eigensolver failed for {m.source_label!r} (n={m.n}): {exc}") from exc
    return spectrum_from_values(lam, sv)


def exact_sphere_spectrum(count: int) -> np.ndarray:
    """First ``count`` NP eigenvalues of the round sphere: ``1/(2(2k+1))`` with multiplicity ``2k+1``."""
    if count < 1:
        raise ValueError("count must be at least 1")
    kmax = math.isqrt(count - 1) + 1
    k = np.arange(kmax)
    vals = np.repeat(1.0 / (2 * (2 * k + 1)), 2 * k + 1)
    return vals[:count]


def default_window(n: int) -> tuple[int, int]:
    """``[16, min(floor(n^(2/3)), n // 8)]``."""
    return 16, int(min(math.floor(n ** (2.0 / 3.0) + 1e-9), n // 8))


@dataclass(frozen=True, eq=False)
class WeylFit:
    fitted_constant: float
    window: tuple[int, int]
    slope: float
    predicted_constant: float | None
    relative_deviation: float | None
    scaled: np.ndarray = field(repr=False)  # |lambda_j| sqrt(j) over the window
    n_excluded: int = 0

    def to_dict(self) -> dict:
        return {
            "c": self.fitted_constant,
            "slope": self.slope,
            "window": list(self.window),
            "predicted": self.predicted_constant,
            "rel_dev": self.relative_deviation,
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _values_of(spectrum) -> np.ndarray:
    if isinstance(spectrum, SpectrumResult):
        return spectrum.eigenvalues
    return np.asarray(spectrum)


def weyl_fit(spectrum, window: tuple[int, int] | None = None, predicted: float | None = None) -> WeylFit:
    """Estimate ``c`` in ``|lambda_j| ~ c j^{-1/2}``.

    ``c`` is the median of ``|lambda_j| sqrt(j)`` for ``j_min <= j <= j_max``
    (both inclusive, 0-based ``j``).  The slope of ``log|lambda_j|`` against
    ``log j`` is returned as a diagnostic.  Entries with zero or non-finite
    modulus are excluded and counted in ``n_excluded``.
    """
    values = _values_of(spectrum)
    n = len(values)
    j_min, j_max = default_window(n) if window is None else (int(window[0]), int(window[1]))
    if j_min < 1 or j_max > n - 1 or j_min > j_max:
        raise FitWindowError(f"fit window [{j_min}, {j_max}] is empty or outside [1, {n - 1}]")
    j = np.arange(j_min, j_max + 1)
    mod = np.abs(values[j_min : j_max + 1])
    ok = np.isfinite(mod) & (mod > 0)
    if not np.any(ok):
        raise FitWindowError(f"no positive moduli in window [{j_min}, {j_max}]")
    j, mod = j[ok], mod[ok]
    scaled = mod * np.sqrt(j)
    c = float(np.median(scaled))
    slope = float(np.polyfit(np.log(j), np.log(mod), 1)[0]) if len(j) > 1 else float("nan")
    rel = None if predicted is None else abs(c - predicted) / predicted
    return WeylFit(
        fitted_constant=c,
        window=(j_min, j_max),
        slope=slope,
        predicted_constant=predicted,
        relative_deviation=rel,
        scaled=scaled,
        n_excluded=int(np.count_nonzero(~ok)),
    )


def signed_split_fit(spectrum, window: tuple[int, int] | None = None) -> tuple[float, float]:
    """Exploratory constants ``(c_+, c_-)`` for the positive and negative branches.

    The eigenvalue 1/2 is dropped and each branch is re-enumerated from 1
    (``lambda_1^+ >= lambda_2^+ >= ... > 0`` and symmetrically for the
    negative branch), so on the sphere the positive branch keeps the global
    indices.  A branch too short to reach ``j_min`` yields 0.
    """
    values = _values_of(spectrum)
    n = len(values)
    j_min, j_max = default_window(n) if window is None else window
    re = np.real(values)
    pos = np.sort(re[(re > 0) & (np.abs(values - 0.5) > POLE_TOL)])[::-1]
    neg = np.sort(-re[re < 0])[::-1]
    out = []
    for branch in (pos, neg):
        seq = np.concatenate([[np.nan], branch])  # index 0 unused
        hi = min(j_max, len(branch))
        if hi < j_min:
            out.append(0.0)
        else:
            out.append(weyl_fit(seq, (j_min, hi)).fitted_constant)
    return out[0], out[1]


@dataclass(frozen=True, eq=False)
class PlasmonicSpectrum:
    """Plasmonic eigenvalues aligned with the NP enumeration; poles are NaN and flagged."""

    deviation: np.ndarray  # |eps_j - 1|
    epsilon: np.ndarray
    pole: np.ndarray


def plasmonic_eigenvalues(spectrum) -> PlasmonicSpectrum:
    """``|eps - 1| = |2 lambda / (lambda - 1/2)|`` with ``eps = 1 - 2 lambda / (lambda - 1/2)``."""
    lam = _values_of(spectrum)
    lam = lam.real if np.iscomplexobj(lam) and not np.any(lam.imag) else lam
    lam = np.asarray(lam, dtype=complex if np.iscomplexobj(lam) else float)
    pole = np.abs(lam - 0.5) <= POLE_TOL
    safe = np.where(pole, 0.0, lam)
    ratio = -2.0 * safe / (safe - 0.5)
    deviation = np.where(pole, np.nan, np.abs(ratio))
    epsilon = np.where(pole, np.nan, 1.0 + ratio)
    return PlasmonicSpectrum(deviation=deviation, epsilon=epsilon, pole=pole)
