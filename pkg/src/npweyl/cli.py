"""Command-line front end.

    npweyl geometry    --shape sphere --rho 1 --res 64x128
    npweyl spectrum    --shape torus --R 2 --r 1 --res 32x64 --window 16:200 --out run/
    npweyl sphere-exact --count 10000
    npweyl mobius      --shape sphere --mobius "invert:3,0,0,1"

Exit codes: 0 ok, 1 configuration error, 2 geometry error, 3 numerical error.
Settings come from CLI flags, then an optional ``--config`` file of
``key=value`` lines, then built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import invariants, mesh, nystrom, spectrum, surface
from .errors import ConfigError, FitWindowError, GeometryError, NumericsError

log = logging.getLogger("npweyl")

SHAPES = ("sphere", "ellipsoid", "torus", "clifford", "mesh")
DEFAULTS = {
    "shape": "sphere",
    "rho": 1.0,
    "a": 1.0,
    "b": 1.0,
    "c": 1.0,
    "R": 2.0,
    "r": 1.0,
    "res": "32x64",
    "mesh": None,
    "window": None,
    "out": None,
    "mobius": None,
    "seed": 0,
    "signed": False,
    "count": None,
}
FLOAT_KEYS = ("rho", "a", "b", "c", "R", "r")


@dataclass(frozen=True)
class RunConfig:
    shape: str
    rho: float
    a: float
    b: float
    c: float
    R: float
    r: float
    res: tuple[int, int]
    mesh: Path | None
    window: tuple[int, int] | None
    out: Path | None
    mobius: str | None
    seed: int
    signed: bool
    count: int | None

    def build_quadrature(self) -> surface.SurfaceQuadrature:
        if self.shape == "mesh":
            return mesh.load_mesh(self.mesh)
        return surface.build_quadrature(self.chart(), *self.res)

    def chart(self) -> surface.SurfaceChart:
        if self.shape == "sphere":
            return surface.sphere(self.rho)
        if self.shape == "ellipsoid":
            return surface.ellipsoid(self.a, self.b, self.c)
        if self.shape == "torus":
            return surface.torus(self.R, self.r)
        if self.shape == "clifford":
            return surface.clifford_torus()
        raise ConfigError(f"shape {self.shape!r} has no chart")


def parse_res(text: str) -> tuple[int, int]:
    try:
        n_s, n_t = (int(v) for v in str(text).lower().split("x"))
    except ValueError as exc:
        raise ConfigError(f"--res expects NxM, got {text!r}") from exc
    if n_s < 4 or n_t < 4:
        raise ConfigError(f"resolution must be at least 4x4, got {text!r}")
    return n_s, n_t


def parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(v) for v in str(text).split(":"))
    except ValueError as exc:
        raise ConfigError(f"--window expects J:K, got {text!r}") from exc
    if lo < 1 or hi < lo:
        raise ConfigError(f"invalid fit window {text!r}")
    return lo, hi


def read_config_file(path) -> dict:
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-")
        if not sep or key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: expected key=value with a known key, got {line!r}")
        values[key] = value.strip()
    return values


def make_config(args: argparse.Namespace) -> RunConfig:
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    merged = {}
    for key, default in DEFAULTS.items():
        cli_value = getattr(args, key, None)
        if cli_value is not None and cli_value is not False:
            merged[key] = cli_value
        elif key in file_values:
            merged[key] = file_values[key]
        else:
            merged[key] = default

    shape = str(merged["shape"])
    mesh_path = merged["mesh"]
    if shape.startswith("mesh:"):
        shape, mesh_path = "mesh", shape[len("mesh:") :]
    if shape not in SHAPES:
        raise ConfigError(f"unknown shape {shape!r}; choose from {', '.join(SHAPES)} or mesh:PATH")
    if shape == "mesh" and not mesh_path:
        raise ConfigError("shape 'mesh' needs --mesh PATH")
    try:
        floats = {k: float(merged[k]) for k in FLOAT_KEYS}
        seed = int(merged["seed"])
        count = None if merged["count"] is None else int(merged["count"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    for key, value in floats.items():
        if not value > 0:
            raise ConfigError(f"--{key} must be positive, got {value}")
    if shape == "torus" and not floats["R"] > floats["r"]:
        raise ConfigError(f"torus requires R > r, got R={floats['R']}, r={floats['r']}")
    signed = merged["signed"]
    if isinstance(signed, str):
        signed = signed.strip().lower() in ("1", "true", "yes", "on")
    return RunConfig(
        shape=shape,
        res=parse_res(merged["res"]),
        mesh=Path(mesh_path) if mesh_path else None,
        window=None if merged["window"] is None else parse_window(merged["window"]),
        out=None if merged["out"] is None else Path(merged["out"]),
        mobius=merged["mobius"],
        seed=seed,
        signed=bool(signed),
        count=count,
        **floats,
    )


class _Outputs:
    """Collects output documents and writes them all at the end, or none."""

    def __init__(self, out: Path | None):
        self.out = out
        self.pending = []

    def add(self, name: str, writer) -> None:
        self.pending.append((name, writer))

    def commit(self) -> list[Path]:
        if self.out is None:
            return []
        self.out.mkdir(parents=True, exist_ok=True)
        written = []
        try:
            for name, writer in self.pending:
                path = self.out / name
                writer(path)
                written.append(path)
        except BaseException:
            for path in written:
                path.unlink(missing_ok=True)
            raise
        return written


def cmd_geometry(cfg: RunConfig) -> invariants.GeometryReport:
    quad = cfg.build_quadrature()
    report = invariants.geometry_report(quad, signed=cfg.signed)
    print(report.table())
    outputs = _Outputs(cfg.out)
    outputs.add("geometry.json", report.write_json)
    outputs.add("quad.json", quad.write_json)
    outputs.commit()
    return report


def cmd_spectrum(cfg: RunConfig) -> spectrum.WeylFit:
    quad = cfg.build_quadrature()
    report = invariants.geometry_report(quad, signed=cfg.signed)
    log.info("assembling %d x %d NP matrix", len(quad), len(quad))
    matrix = nystrom.assemble(quad)
    spec = spectrum.eigenvalues(matrix)
    fit = spectrum.weyl_fit(spec, cfg.window, report.predicted_weyl_constant)
    c_plus, c_minus = spectrum.signed_split_fit(spec, cfg.window)
    print(report.table())
    print(f"n={spec.n}")
    print(f"lambda_0={spec.eigenvalues[0].real:.15g}")
    print(f"max_imag_residual={spec.max_imag_residual:.3e}")
    print(f"window={fit.window[0]}:{fit.window[1]}")
    print(f"fitted_c={fit.fitted_constant:.12g}")
    print(f"slope={fit.slope:.6g}")
    print(f"rel_dev={fit.relative_deviation:.6g}")
    print(f"signed_fit_plus={c_plus:.6g}")
    print(f"signed_fit_minus={c_minus:.6g}")
    outputs = _Outputs(cfg.out)
    outputs.add("spectrum.csv", spec.write_csv)
    outputs.add("fit.json", fit.write_json)
    outputs.add("geometry.json", report.write_json)
    outputs.commit()
    return fit


def cmd_sphere_exact(cfg: RunConfig) -> np.ndarray:
    if cfg.count is None or cfg.count < 1:
        raise ConfigError("--count must be a positive integer")
    values = spectrum.exact_sphere_spectrum(cfg.count)
    lines = ["j,value"] + [f"{j},{v!r}" for j, v in enumerate(values.tolist())]
    text = "\n".join(lines) + "\n"
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        outputs = _Outputs(cfg.out)
        outputs.add("sphere_exact.csv", lambda p: p.write_text(text))
        outputs.commit()
        print(f"count={cfg.count}")
        print(f"last={float(values[-1])!r}")
    return values


def cmd_mobius(cfg: RunConfig) -> dict:
    if not cfg.mobius:
        raise ConfigError("--mobius SPEC is required (e.g. 'invert:3,0,0,1;scale:2' or 'random')")
    quad = cfg.build_quadrature()
    if cfg.mobius.strip().lower() == "random":
        mobius = invariants.random_mobius(np.random.default_rng(cfg.seed), quad)
    else:
        try:
            mobius = invariants.MobiusMap.parse(cfg.mobius)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    before = invariants.geometry_report(quad, signed=cfg.signed)
    after = invariants.geometry_report(invariants.apply_mobius(quad, mobius), signed=cfg.signed)
    doc = {
        "map": mobius.describe(),
        "before": before.to_dict(),
        "after": after.to_dict(),
        "delta_W": after.willmore_energy - before.willmore_energy,
        "rel_delta_W": abs(after.willmore_energy - before.willmore_energy) / before.willmore_energy,
        "delta_C": after.predicted_weyl_constant - before.predicted_weyl_constant,
        "delta_area": after.area - before.area,
    }
    print(f"map={doc['map']}")
    print("[before]")
    print(before.table())
    print("[after]")
    print(after.table())
    print(f"delta_W={doc['delta_W']:.3e}")
    print(f"rel_delta_W={doc['rel_delta_W']:.3e}")
    print(f"delta_C={doc['delta_C']:.3e}")
    print(f"delta_area={doc['delta_area']:.6g}")
    outputs = _Outputs(cfg.out)
    outputs.add("mobius.json", lambda p: p.write_text(json.dumps(doc, indent=2)))
    outputs.commit()
    return doc


COMMANDS = {
    "geometry": cmd_geometry,
    "spectrum": cmd_spectrum,
    "sphere-exact": cmd_sphere_exact,
    "mobius": cmd_mobius,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="file of key=value lines (CLI flags take precedence)")
    common.add_argument("--shape", help="sphere | ellipsoid | torus | clifford | mesh | mesh:PATH")
    for key in FLOAT_KEYS:
        common.add_argument(f"--{key}", dest=key)
    common.add_argument("--res", help="chart resolution NxM (default 32x64)")
    common.add_argument("--mesh", help="OFF or OBJ triangle mesh")
    common.add_argument("--window", help="fit window J:K (inclusive, 0-based indices)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--mobius", help="'translate:x,y,z;scale:a;invert:cx,cy,cz[,rho]' or 'random'")
    common.add_argument("--seed", help="seed for randomized maps")
    common.add_argument("--signed", action="store_true", default=None, help="also report C_+ and C_-")
    common.add_argument("--count", help="number of exact sphere eigenvalues")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="npweyl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; remap to the config exit code
        return 0 if exc.code == 0 else 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = make_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except FitWindowError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except GeometryError as exc:
        print(f"geometry error: {exc}", file=sys.stderr)
        return 2
    except NumericsError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
