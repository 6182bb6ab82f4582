import math
import time

import numpy as np
import pytest

from npweyl import assemble, build_quadrature, eigenvalues, sphere, torus

# ---------------------------------------------------------------------------
# mesh generators
# ---------------------------------------------------------------------------

PHI = (1 + 5**0.5) / 2
ICO_VERTS = np.array(
    [
        [-1, PHI, 0], [1, PHI, 0], [-1, -PHI, 0], [1, -PHI, 0],
        [0, -1, PHI], [0, 1, PHI], [0, -1, -PHI], [0, 1, -PHI],
        [PHI, 0, -1], [PHI, 0, 1], [-PHI, 0, -1], [-PHI, 0, 1],
    ],
    dtype=float,
)
ICO_FACES = np.array(
    [
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ]
)


def icosphere(levels=0):
    verts = ICO_VERTS / np.linalg.norm(ICO_VERTS, axis=1)[:, None]
    faces = ICO_FACES
    for _ in range(levels):
        verts = list(verts)
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                m = verts[a] + verts[b]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
        verts, faces = np.array(verts), np.array(new)
    return verts, faces


def torus_mesh(n_u=24, n_v=48, R=2.0, r=1.0):
    u = 2 * math.pi * np.arange(n_u) / n_u
    v = 2 * math.pi * np.arange(n_v) / n_v
    U, V = np.meshgrid(u, v, indexing="ij")
    verts = np.stack(
        [(R + r * np.cos(U)) * np.cos(V), (R + r * np.cos(U)) * np.sin(V), r * np.sin(U)], axis=-1
    ).reshape(-1, 3)
    faces = []
    for i in range(n_u):
        for j in range(n_v):
            a = i * n_v + j
            b = ((i + 1) % n_u) * n_v + j
            c = ((i + 1) % n_u) * n_v + (j + 1) % n_v
            d = i * n_v + (j + 1) % n_v
            faces += [[a, b, c], [a, c, d]]
    return verts, np.array(faces)


def genus2_mesh(n=90):
    skimage = pytest.importorskip("skimage.measure")

    def torus_sdf(p, c, R=1.0, r=0.45):
        q = p - c
        return np.hypot(np.hypot(q[..., 0], q[..., 1]) - R, q[..., 2]) - r

    gx, gy, gz = np.linspace(-3.2, 3.2, n), np.linspace(-1.8, 1.8, n), np.linspace(-0.9, 0.9, n // 2)
    X = np.stack(np.meshgrid(gx, gy, gz, indexing="ij"), axis=-1)
    f = np.minimum(torus_sdf(X, np.array([-1.2, 0, 0])), torus_sdf(X, np.array([1.2, 0, 0])))
    spacing = (gx[1] - gx[0], gy[1] - gy[0], gz[1] - gz[0])
    verts, faces, _, _ = skimage.marching_cubes(f, 0.0, spacing=spacing)
    return verts, faces


# ---------------------------------------------------------------------------
# shared dense spectra (N = 2048)
# ---------------------------------------------------------------------------

SPHERE_RES = (32, 64)
TORUS_RES = (32, 64)
TIMINGS: dict[str, float] = {}  # wall time of quadrature + assembly + eigensolve + SVD


def _pipeline(name, chart, res):
    start = time.perf_counter()
    quad = build_quadrature(chart, *res)
    matrix = assemble(quad)
    spectrum = eigenvalues(matrix)
    TIMINGS[name] = time.perf_counter() - start
    return quad, matrix, spectrum


@pytest.fixture(scope="session")
def sphere_2048():
    return _pipeline("sphere", sphere(), SPHERE_RES)


@pytest.fixture(scope="session")
def torus_2048():
    return _pipeline("torus", torus(2.0, 1.0), TORUS_RES)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240611)


# ---------------------------------------------------------------------------
# acceptance summary: one PASS/FAIL line per criterion
# ---------------------------------------------------------------------------

_CRITERIA: dict[str, list] = {}


@pytest.fixture
def criterion(request):
    """Record named checks; the criterion passes iff every recorded check passes."""

    def record(name, ok, detail=""):
        _CRITERIA.setdefault(request.node.name, []).append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for test_name, checks in _CRITERIA.items():
        status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
        terminalreporter.write_line(f"[{status}] {test_name}")
        for name, ok, detail in checks:
            terminalreporter.write_line(f"    {'ok ' if ok else 'BAD'} {name}: {detail}")
