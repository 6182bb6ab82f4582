"""OFF/OBJ triangle meshes as surface quadratures.

One node per vertex: barycentric (one-third) area weights, angle-weighted
normals and curvatures from a least-squares quadric fit over the two-ring
in the local tangent frame.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import MeshError, MeshParseError, NonManifoldError, NonOrientableError, OpenSurfaceError
from .surface import FundamentalForms, MeshSource, SurfaceQuadrature, curvatures


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    tokens = []
    try:
        text = Path(path).read_text()
    except UnicodeDecodeError as exc:
        raise MeshParseError(f"{path}: not a text file") from exc
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.append(line)
    if not tokens:
        raise MeshParseError(f"{path}: empty file")
    head = tokens[0].split()
    if head[0] != "OFF":
        raise MeshParseError(f"{path}: missing OFF header")
    rest = head[1:]
    body = tokens[1:]
    if not rest:
        if not body:
            raise MeshParseError(f"{path}: missing counts line")
        rest, body = body[0].split(), body[1:]
    try:
        nv, nf = int(rest[0]), int(rest[1])
        verts = np.array([[float(v) for v in body[i].split()[:3]] for i in range(nv)], dtype=float)
        faces = []
        for line in body[nv : nv + nf]:
            parts = line.split()
            k = int(parts[0])
            if k != 3:
                raise MeshParseError(f"{path}: only triangles are supported, found a {k}-gon")
            faces.append([int(p) for p in parts[1:4]])
    except MeshParseError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshParseError(f"{path}: malformed OFF body ({exc})") from exc
    if verts.shape != (nv, 3) or len(faces) != nf:
        raise MeshParseError(f"{path}: vertex/face counts do not match the header")
    return verts, np.array(faces, dtype=np.int64).reshape(-1, 3)


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    try:
        lines = Path(path).read_text().splitlines()
    except UnicodeDecodeError as exc:
        raise MeshParseError(f"{path}: not a text file") from exc
    try:
        for line in lines:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                if len(idx) != 3:
                    raise MeshParseError(f"{path}: only triangles are supported, found a {len(idx)}-gon")
                # negative indices count back from the most recent vertex
                faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
    except MeshParseError:
        raise
    except ValueError as exc:
        raise MeshParseError(f"{path}: malformed OBJ record ({exc})") from exc
    if not verts or not faces:
        raise MeshParseError(f"{path}: no vertices or faces")
    return np.array(verts, dtype=float), np.array(faces, dtype=np.int64)


def write_off(path, vertices, faces) -> None:
    lines = ["OFF", f"{len(vertices)} {len(faces)} 0"]
    lines += [" ".join(repr(c) for c in v) for v in np.asarray(vertices, dtype=float).tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def write_obj(path, vertices, faces) -> None:
    lines = ["v " + " ".join(repr(c) for c in v) for v in np.asarray(vertices, dtype=float).tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in faces]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path, label: str | None = None) -> SurfaceQuadrature:
    """Read an OFF or OBJ closed orientable triangle mesh into a quadrature."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".off":
        verts, faces = read_off(path)
    elif suffix == ".obj":
        verts, faces = read_obj(path)
    else:
        raise MeshParseError(f"{path}: unsupported mesh format {suffix!r} (expected .off or .obj)")
    return mesh_quadrature(verts, faces, label=label or path.stem)


def _edge_table(faces):
    """Undirected edges with their incident faces; raises on boundary or non-manifold edges."""
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    face_of = np.tile(np.arange(len(faces)), 3)
    keys = np.sort(directed, axis=1)
    uniq, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inverse = inverse.ravel()
    if np.any(counts == 1):
        a, b = uniq[np.argmax(counts == 1)]
        raise OpenSurfaceError(f"open surface: edge ({a}, {b}) has a single incident face")
    if np.any(counts > 2):
        a, b = uniq[np.argmax(counts > 2)]
        raise NonManifoldError(f"non-manifold edge ({a}, {b}) shared by {counts.max()} faces")
    order = np.argsort(inverse, kind="stable")
    pair_faces = face_of[order].reshape(-1, 2)
    pair_dir = directed[order].reshape(-1, 2, 2)
    return uniq, pair_faces, pair_dir


def _check_vertex_manifold(faces, edges, pair_faces, n_vertices):
    """Corners (face, slot) around each vertex must form a single fan."""

    def corner_id(f, v):
        return f * 3 + np.argmax(faces[f] == v[:, None], axis=1)

    rows = np.concatenate([corner_id(pair_faces[:, 0], edges[:, c]) for c in range(2)])
    cols = np.concatenate([corner_id(pair_faces[:, 1], edges[:, c]) for c in range(2)])
    n_corners = 3 * len(faces)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_corners, n_corners))
    _, labels = connected_components(graph, directed=False)
    fans = np.unique(np.stack([faces.ravel(), labels]), axis=1)[0]
    fan_count = np.bincount(fans, minlength=n_vertices)
    if np.any(fan_count > 1):
        v = int(np.argmax(fan_count > 1))
        raise NonManifoldError(f"non-manifold vertex {v}: its incident faces form {fan_count[v]} separate fans")


def _orient(faces, pair_faces, pair_dir):
    """Make face orientations consistent across shared edges (BFS); raise if impossible."""
    consistent = pair_dir[:, 0, 0] != pair_dir[:, 1, 0]
    if np.all(consistent):
        return faces
    n_faces = len(faces)
    adjacency = [[] for _ in range(n_faces)]
    for (f0, f1), same in zip(pair_faces, ~consistent):
        adjacency[f0].append((f1, bool(same)))
        adjacency[f1].append((f0, bool(same)))
    flip = np.full(n_faces, -1, dtype=int)
    for seed in range(n_faces):
        if flip[seed] >= 0:
            continue
        flip[seed] = 0
        stack = [seed]
        while stack:
            f = stack.pop()
            for g, same in adjacency[f]:
                want = flip[f] ^ int(same)
                if flip[g] < 0:
                    flip[g] = want
                    stack.append(g)
                elif flip[g] != want:
                    raise NonOrientableError("mesh is not orientable")
    out = faces.copy()
    out[flip == 1] = out[flip == 1][:, ::-1]
    return out


def _face_components(n_faces, pair_faces):
    graph = coo_matrix(
        (np.ones(len(pair_faces)), (pair_faces[:, 0], pair_faces[:, 1])), shape=(n_faces, n_faces)
    )
    return connected_components(graph, directed=False)


def mesh_quadrature(vertices, faces, label: str = "mesh") -> SurfaceQuadrature:
    """Quadrature from raw vertex/face arrays (validated, oriented outward)."""
    vertices = np.asarray(vertices, dtype=float)
    faces = np.asarray(faces, dtype=np.int64)
    if faces.ndim != 2 or faces.shape[1] != 3 or len(faces) == 0:
        raise MeshParseError("faces must be a non-empty (F, 3) index array")
    if faces.min() < 0 or faces.max() >= len(vertices):
        raise MeshParseError("face index out of range")
    if np.any((faces[:, 0] == faces[:, 1]) | (faces[:, 1] == faces[:, 2]) | (faces[:, 0] == faces[:, 2])):
        raise MeshError("degenerate face with a repeated vertex")
    used = np.unique(faces)
    if len(used) != len(vertices):
        remap = np.full(len(vertices), -1)
        remap[used] = np.arange(len(used))
        vertices, faces = vertices[used], remap[faces]

    edges, pair_faces, pair_dir = _edge_table(faces)
    _check_vertex_manifold(faces, edges, pair_faces, len(vertices))
    faces = _orient(faces, pair_faces, pair_dir)

    p0, p1, p2 = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]
    # outward orientation per connected component via signed volume
    n_comp, comp = _face_components(len(faces), pair_faces)
    vol = np.einsum("ij,ij->i", p0, np.cross(p1, p2)) / 6.0
    comp_vol = np.bincount(comp, weights=vol, minlength=n_comp)
    flip = comp_vol[comp] < 0
    if np.any(flip):
        faces = faces.copy()
        faces[flip] = faces[flip][:, ::-1]
        p0, p1, p2 = vertices[faces[:, 0]], vertices[faces[:, 1]], vertices[faces[:, 2]]

    n_v, n_e, n_f = len(vertices), len(edges), len(faces)
    chi = n_v - n_e + n_f

    cross = np.cross(p1 - p0, p2 - p0)
    dbl_area = np.linalg.norm(cross, axis=1)
    if np.any(dbl_area <= 0):
        raise MeshError("mesh has zero-area faces")
    face_n = cross / dbl_area[:, None]
    weights = np.zeros(n_v)
    for k in range(3):
        np.add.at(weights, faces[:, k], dbl_area / 6.0)

    corners = (p0, p1, p2)
    normals = np.zeros((n_v, 3))
    for k in range(3):
        a = corners[(k + 1) % 3] - corners[k]
        b = corners[(k + 2) % 3] - corners[k]
        cosang = np.einsum("ij,ij->i", a, b) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        ang = np.arccos(np.clip(cosang, -1.0, 1.0))
        np.add.at(normals, faces[:, k], face_n * ang[:, None])
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    forms = _quadric_forms(vertices, faces, normals)
    H, K = curvatures(forms)
    return SurfaceQuadrature(
        x=vertices.copy(),
        n=normals,
        w=weights,
        forms=forms,
        H=H,
        K=K,
        euler_characteristic=int(chi),
        label=label,
        source=MeshSource(vertices.copy(), faces.copy()),
    )


def _quadric_forms(vertices, faces, normals) -> FundamentalForms:
    n_v = len(vertices)
    i = np.concatenate([faces[:, 0], faces[:, 1], faces[:, 2], faces[:, 1], faces[:, 2], faces[:, 0]])
    j = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0], faces[:, 0], faces[:, 1], faces[:, 2]])
    ring1 = coo_matrix((np.ones(len(i)), (i, j)), shape=(n_v, n_v)).tocsr()
    ring1.data[:] = 1.0
    ring2 = (ring1 + ring1 @ ring1).tocoo()
    keep = ring2.row != ring2.col
    rows, cols = ring2.row[keep], ring2.col[keep]

    # tangent frame per vertex
    nrm = normals
    helper = np.where(np.abs(nrm[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
    t1 = np.cross(nrm, helper)
    t1 /= np.linalg.norm(t1, axis=1)[:, None]
    t2 = np.cross(nrm, t1)

    d = vertices[cols] - vertices[rows]
    scale = np.sqrt(np.bincount(rows, weights=np.einsum("ij,ij->i", d, d), minlength=n_v)
                    / np.maximum(np.bincount(rows, minlength=n_v), 1))
    d = d / scale[rows][:, None]
    x = np.einsum("ij,ij->i", d, t1[rows])
    y = np.einsum("ij,ij->i", d, t2[rows])
    z = np.einsum("ij,ij->i", d, nrm[rows])
    design = np.stack([x * x, x * y, y * y, x, y], axis=1)
    ata = np.zeros((n_v, 5, 5))
    atz = np.zeros((n_v, 5))
    np.add.at(ata, rows, design[:, :, None] * design[:, None, :])
    np.add.at(atz, rows, design * z[:, None])
    coef = np.einsum("vij,vj->vi", np.linalg.pinv(ata, rcond=1e-12), atz)
    a, b, c, gx, gy = coef.T
    a, b, c = a / scale, b / scale, c / scale

    # graph (x, y, h(x, y)) with h = a x^2 + b x y + c y^2 + gx x + gy y; local z is outward
    root = np.sqrt(1.0 + gx**2 + gy**2)
    return FundamentalForms(
        E=1.0 + gx**2,
        F=gx * gy,
        G=1.0 + gy**2,
        L=-2.0 * a / root,
        M=-b / root,
        N=-2.0 * c / root,
    )
