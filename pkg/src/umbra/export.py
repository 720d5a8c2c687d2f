"""OBJ serialization and half-edge validity checks for triangle meshes."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh


def format_obj(mesh: TriangleMesh) -> str:
    lines = [f"v {x:.6g} {y:.6g} {z:.6g}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces.tolist()]
    return "\n".join(lines) + "\n" if lines else ""


def write_obj(mesh: TriangleMesh, path) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(format_obj(mesh))


def read_obj(path) -> TriangleMesh:
    """Read ``v`` and ``f`` records; polygons are fan-triangulated, extra
    ``f`` index fields (``v/vt/vn``) are ignored."""
    verts, faces = [], []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        try:
            if parts[0] == "v":
                verts.append([float(p) for p in parts[1:4]])
            elif parts[0] == "f":
                idx = [int(p.split("/")[0]) for p in parts[1:]]
                idx = [i - 1 if i > 0 else len(verts) + i for i in idx]
                faces.extend([idx[0], idx[k], idx[k + 1]] for k in range(1, len(idx) - 1))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: malformed record {line!r}") from exc
    return TriangleMesh(np.array(verts, dtype=np.float64).reshape(-1, 3),
                        np.array(faces, dtype=np.int64).reshape(-1, 3))


@dataclass
class MeshReport:
    watertight: bool
    consistent_orientation: bool
    degenerate_faces: int

    def to_dict(self) -> dict:
        return {"watertight": self.watertight,
                "consistent_orientation": self.consistent_orientation,
                "degenerate_faces": self.degenerate_faces}


def validate_mesh(mesh: TriangleMesh, area_tol: float = 1e-12) -> MeshReport:
    """Edge-manifold and winding checks by half-edge census.

    Watertight means every undirected edge borders exactly two faces.
    Orientation is consistent when no directed half-edge occurs twice, i.e.
    neighboring faces traverse their shared edge in opposite directions.
    """
    f = mesh.faces
    if len(f) == 0:
        return MeshReport(False, True, 0)
    u = f.ravel()
    v = f[:, [1, 2, 0]].ravel()
    n = max(mesh.n_vertices, 1)
    undirected = np.minimum(u, v) * n + np.maximum(u, v)
    _, counts = np.unique(undirected, return_counts=True)
    watertight = bool(np.all(counts == 2))
    directed = u.astype(np.int64) * n + v
    _, dcounts = np.unique(directed, return_counts=True)
    consistent = bool(np.all(dcounts == 1))
    degenerate = int(np.count_nonzero(mesh.face_areas() <= area_tol))
    return MeshReport(watertight, consistent, degenerate)


def euler_characteristic(mesh: TriangleMesh) -> int:
    used = np.unique(mesh.faces)
    return len(used) - len(mesh.topology.edges) + mesh.n_faces


def signed_volume(mesh: TriangleMesh) -> float:
    tri = mesh.face_vertices()
    return float(np.einsum("ij,ij->i", tri[:, 0], np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)
