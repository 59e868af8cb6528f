"""Persistence: 17-digit JSON and CSV, coefficient files, OBJ meshes."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import eval_radius_field, truncation_degree
from .quadrature import SphereGrid
from .shbasis import basis_values, index_to_nm

FLOAT_FMT = ".17g"


def fmt_float(x: float) -> str:
    s = format(float(x), FLOAT_FMT)
    if s.lstrip("-").isdigit():
        s += ".0"
    return s


def _prepare(obj, floats: list):
    """Swap every float for a placeholder string so json never formats it."""
    if isinstance(obj, dict):
        return {str(k): _prepare(v, floats) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_prepare(v, floats) for v in obj]
    if isinstance(obj, np.ndarray):
        return _prepare(obj.tolist(), floats)
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        floats.append(x)
        return f"\x00{len(floats) - 1}\x00"
    return obj


def dumps(obj, indent: int | None = 2) -> str:
    """JSON text with every float written to 17 significant digits.

    Non-finite floats become ``null``.
    """
    floats: list[float] = []
    text = json.dumps(_prepare(obj, floats), indent=indent)
    for i, x in enumerate(floats):
        text = text.replace(f'"\\u0000{i}\\u0000"', fmt_float(x), 1)
    return text


def write_json(path: Path, obj) -> Path:
    path = Path(path)
    path.write_text(dumps(obj) + "\n")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def coeffs_document(coeffs) -> dict:
    coeffs = np.asarray(coeffs, dtype=float)
    N = truncation_degree(coeffs.size)
    modes = [list(index_to_nm(i)) for i in range(coeffs.size)]
    return {"N": N, "ordering": "i -> (n, m); m < 0 is the sine coefficient", "modes": modes, "coeffs": coeffs}


def write_coeffs(path: Path, coeffs) -> Path:
    return write_json(path, coeffs_document(coeffs))


def read_coeffs(path: Path) -> np.ndarray:
    doc = json.loads(Path(path).read_text())
    if "coeffs" not in doc:
        raise ValueError(f"{path}: no 'coeffs' entry")
    coeffs = np.asarray(doc["coeffs"], dtype=float)
    N = truncation_degree(coeffs.size)
    if "N" in doc and doc["N"] != N:
        raise ValueError(f"{path}: N={doc['N']} but {coeffs.size} coefficients imply N={N}")
    return coeffs


def _y_up(p: np.ndarray) -> np.ndarray:
    # polar axis becomes +y; (x, y, z) -> (x, z, -y) is a proper rotation
    return np.stack([p[..., 0], p[..., 2], -p[..., 1]], axis=-1)


def surface_mesh(coeffs, grid: SphereGrid) -> tuple[np.ndarray, np.ndarray]:
    """Vertices (Y-up) and 0-based triangles of the surface sampled on ``grid``.

    Grid nodes become vertices, each quad between neighbouring rings is split
    into two triangles, and both poles are closed with triangle fans.
    Triangles are wound counter-clockwise seen from outside.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    N = truncation_degree(coeffs.size)
    rf = eval_radius_field(coeffs, grid, check=False)
    th, ph = grid.mesh()
    r = rf.r
    ring = np.stack([r * np.sin(th) * np.cos(ph), r * np.sin(th) * np.sin(ph), r * np.cos(th)], axis=-1)
    r_pole = np.tensordot(coeffs, basis_values(N, np.array([0.0, math.pi]), np.array([0.0])), axes=1)[:, 0]
    poles = np.array([[0.0, 0.0, r_pole[0]], [0.0, 0.0, -r_pole[1]]])
    verts = _y_up(np.concatenate([ring.reshape(-1, 3), poles]))

    nt, npp = grid.shape
    idx = np.arange(nt * npp).reshape(nt, npp)
    nxt = np.roll(idx, -1, axis=1)
    a, b = idx[:-1], idx[1:]
    c, d = nxt[:-1], nxt[1:]
    # x_theta cross x_phi points outward, so (theta, theta+1, phi+1) is CCW
    quads = np.concatenate([np.stack([a, b, d], -1).reshape(-1, 3), np.stack([a, d, c], -1).reshape(-1, 3)])
    north, south = nt * npp, nt * npp + 1
    cap_n = np.stack([np.full(npp, north), idx[0], nxt[0]], -1)
    cap_s = np.stack([np.full(npp, south), nxt[-1], idx[-1]], -1)
    return verts, np.concatenate([cap_n, quads, cap_s])


def write_obj(path: Path, coeffs, grid: SphereGrid) -> Path:
    verts, faces = surface_mesh(coeffs, grid)
    path = Path(path)
    with path.open("w") as fh:
        fh.write(f"# surface-harmonic vesicle, N={truncation_degree(np.asarray(coeffs).size)}, y-up\n")
        for v in verts:
            fh.write("v " + " ".join(fmt_float(x) for x in v) + "\n")
        for f in faces + 1:
            fh.write(f"f {f[0]} {f[1]} {f[2]}\n")
    return path


def read_obj(path: Path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append([float(x) for x in parts[1:4]])
        elif parts[0] == "f":
            faces.append([int(x.split("/")[0]) - 1 for x in parts[1:4]])
    return np.array(verts), np.array(faces, dtype=int)


def mesh_volume(verts: np.ndarray, faces: np.ndarray) -> float:
    """Signed volume; positive when faces are wound outward."""
    p = verts[faces]
    return float(np.einsum("ij,ij->i", p[:, 0], np.cross(p[:, 1], p[:, 2])).sum() / 6.0)
