"""Triangle meshes, icosphere construction and per-vertex deformation."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class Topology:
    """Connectivity derived from a face list; shared by meshes with the same faces."""

    def __init__(self, faces: np.ndarray, n_vertices: int):
        self.faces = faces
        self.n_vertices = n_vertices

    @cached_property
    def edges(self) -> np.ndarray:
        """Unique undirected edges (E, 2) with ``i < j``."""
        he = self.faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
        he = np.sort(he, axis=1)
        return np.unique(he, axis=0)

    @cached_property
    def adjacency(self) -> sp.csr_matrix:
        e = self.edges
        n = self.n_vertices
        data = np.ones(2 * len(e))
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        return sp.csr_matrix((data, (rows, cols)), shape=(n, n))

    @cached_property
    def degree(self) -> np.ndarray:
        return np.asarray(self.adjacency.sum(axis=1)).ravel()

    @cached_property
    def uniform_laplacian(self) -> sp.csr_matrix:
        """Rows give ``mean(neighbors) - v_i``; isolated vertices get an all-zero row."""
        deg = self.degree
        inv = np.divide(1.0, deg, out=np.zeros_like(deg), where=deg > 0)
        lap = sp.diags(inv) @ self.adjacency - sp.identity(self.n_vertices)
        return sp.csr_matrix(lap)

    @cached_property
    def face_pairs(self) -> np.ndarray:
        """Adjacent-face configurations (K, 4) as vertex indices ``(vx, vy, a, b)``.

        ``(vx, vy, a)`` is the first face's winding around the shared edge and
        ``b`` the apex of the second face.  Edges shared by more than two faces
        contribute every pair.
        """
        f = self.faces
        nf = len(f)
        # half-edges (u -> v) with apex w, in face order
        u = f[:, [0, 1, 2]].ravel()
        v = f[:, [1, 2, 0]].ravel()
        w = f[:, [2, 0, 1]].ravel()
        face_of = np.repeat(np.arange(nf), 3)
        key = np.minimum(u, v).astype(np.int64) * self.n_vertices + np.maximum(u, v)
        order = np.lexsort((face_of, key))
        key_s = key[order]
        starts = np.flatnonzero(np.r_[True, key_s[1:] != key_s[:-1]])
        counts = np.diff(np.r_[starts, len(key_s)])
        out = []
        two = starts[counts == 2]
        if len(two):
            i, j = order[two], order[two + 1]
            out.append(np.stack([u[i], v[i], w[i], w[j]], axis=1))
        for s, c in zip(starts[counts > 2], counts[counts > 2]):
            grp = order[s:s + c]
            for x in range(c):
                for y in range(x + 1, c):
                    i, j = grp[x], grp[y]
                    out.append(np.array([[u[i], v[i], w[i], w[j]]]))
        if not out:
            return np.zeros((0, 4), dtype=np.int64)
        return np.concatenate(out).astype(np.int64)


@dataclass(eq=False)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray
    topology: Topology | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        n = len(self.vertices)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= n):
            raise ValueError("face index out of range")
        f = self.faces
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise ValueError("face with repeated vertex index")
        topo = self.topology
        if topo is not None and topo.n_vertices == n and (
                topo.faces is self.faces or np.array_equal(topo.faces, self.faces)):
            self.faces = topo.faces
        else:
            self.topology = Topology(self.faces, n)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def is_empty(self) -> bool:
        return self.n_faces == 0

    def face_vertices(self) -> np.ndarray:
        return self.vertices[self.faces]

    def face_areas(self) -> np.ndarray:
        tri = self.face_vertices()
        return 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)

    def edge_lengths(self) -> np.ndarray:
        e = self.topology.edges
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def with_vertices(self, vertices) -> "TriangleMesh":
        return TriangleMesh(vertices, self.faces, self.topology)


_PHI = (1.0 + 5.0 ** 0.5) / 2.0
_ICO_VERTS = np.array([
    [-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
    [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
    [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1],
], dtype=np.float64)
_ICO_FACES = np.array([
    [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
    [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
    [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
    [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
], dtype=np.int64)


def _subdivide(verts: np.ndarray, faces: np.ndarray):
    edges = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    uniq, inverse = np.unique(edges, axis=0, return_inverse=True)
    mids = 0.5 * (verts[uniq[:, 0]] + verts[uniq[:, 1]])
    mids /= np.linalg.norm(mids, axis=1, keepdims=True)
    m = len(verts) + inverse.reshape(-1, 3)  # midpoints of edges (01, 12, 20)
    a, b, c = faces.T
    ab, bc, ca = m.T
    new_faces = np.concatenate([
        np.stack([a, ab, ca], 1), np.stack([ab, b, bc], 1),
        np.stack([ca, bc, c], 1), np.stack([ab, bc, ca], 1),
    ])
    return np.concatenate([verts, mids]), new_faces


def icosphere(level: int = 4, radius: float = 1.0) -> TriangleMesh:
    """Subdivided icosahedron: ``10*4**level + 2`` vertices, ``20*4**level`` faces."""
    if level < 0:
        raise ValueError("level must be >= 0")
    verts = _ICO_VERTS / np.linalg.norm(_ICO_VERTS, axis=1, keepdims=True)
    faces = _ICO_FACES
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    return TriangleMesh(verts * radius, faces)


def deform(src: TriangleMesh, displacement) -> TriangleMesh:
    """Offset every source vertex; faces (and cached topology) are shared."""
    d = np.asarray(displacement, dtype=np.float64)
    if d.shape != src.vertices.shape:
        raise ValueError(f"displacement shape {d.shape} does not match vertices {src.vertices.shape}")
    return src.with_vertices(src.vertices + d)
