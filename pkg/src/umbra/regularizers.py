"""Mesh smoothness regularizers with analytic vertex gradients.

Each loss returns ``(value, grad)`` with ``grad`` shaped like the vertices.
"""
from __future__ import annotations

import numpy as np

from .mesh import TriangleMesh

_TINY = 1e-30


def _pair_normals(mesh: TriangleMesh):
    pairs = mesh.topology.face_pairs
    v = mesh.vertices
    vx, vy, a, b = (v[pairs[:, k]] for k in range(4))
    e1 = vy - vx
    ea = a - vx
    eb = b - vx
    nx = np.cross(e1, ea)
    ny = np.cross(eb, e1)
    return pairs, e1, ea, eb, nx, ny


def _cosines(nx, ny):
    lx = np.linalg.norm(nx, axis=1)
    ly = np.linalg.norm(ny, axis=1)
    denom = np.maximum(lx * ly, _TINY)
    return np.einsum("ij,ij->i", nx, ny) / denom, lx, ly, denom


def normal_consistency_terms(mesh: TriangleMesh) -> np.ndarray:
    """Per shared-edge ``1 - cos`` between the two face normals."""
    _, _, _, _, nx, ny = _pair_normals(mesh)
    cos, *_ = _cosines(nx, ny)
    return 1.0 - cos


def normal_consistency_loss(mesh: TriangleMesh):
    """Sum over shared edges of ``1 - cos(n_x, n_y)``, divided by the face count."""
    grad = np.zeros_like(mesh.vertices)
    if mesh.n_faces == 0:
        return 0.0, grad
    pairs, e1, ea, eb, nx, ny = _pair_normals(mesh)
    if len(pairs) == 0:
        return 0.0, grad
    cos, lx, ly, denom = _cosines(nx, ny)
    scale = -1.0 / mesh.n_faces
    value = float(np.sum(1.0 - cos) / mesh.n_faces)

    g_nx = scale * (ny / denom[:, None] - (cos / np.maximum(lx**2, _TINY))[:, None] * nx)
    g_ny = scale * (nx / denom[:, None] - (cos / np.maximum(ly**2, _TINY))[:, None] * ny)
    # n = p x q  =>  dp = q x g, dq = g x p
    g_e1 = np.cross(ea, g_nx) + np.cross(g_ny, eb)
    g_ea = np.cross(g_nx, e1)
    g_eb = np.cross(e1, g_ny)
    g_vx = -(g_e1 + g_ea + g_eb)
    for k, g in enumerate((g_vx, g_e1, g_ea, g_eb)):
        np.add.at(grad, pairs[:, k], g)
    return value, grad


def normal_consistency_metric(mesh: TriangleMesh) -> float:
    """Mean cosine between adjacent face normals; 1 is perfectly smooth."""
    if mesh.n_faces == 0 or len(mesh.topology.face_pairs) == 0:
        raise ValueError("mesh has no interior edges")
    _, _, _, _, nx, ny = _pair_normals(mesh)
    cos, *_ = _cosines(nx, ny)
    return float(np.mean(cos))


def laplacian_vectors(mesh: TriangleMesh) -> np.ndarray:
    """Uniform Laplacian ``mean(neighbors) - v_i`` for every vertex, (V, 3)."""
    return mesh.topology.uniform_laplacian @ mesh.vertices


def laplacian_loss(mesh: TriangleMesh):
    """Mean over vertices of the L1 norm of the uniform Laplacian vector."""
    if np.any(mesh.topology.degree == 0):
        raise ValueError("mesh has an isolated vertex")
    lap = mesh.topology.uniform_laplacian
    delta = lap @ mesh.vertices
    n = mesh.n_vertices
    value = float(np.abs(delta).sum() / n)
    grad = lap.T @ np.sign(delta) / n
    return value, np.asarray(grad)


def edge_length_loss(mesh: TriangleMesh, reduction: str = "sum"):
    """Squared edge lengths over ordered neighbor pairs (each edge counted twice).

    ``reduction="mean"`` divides by the number of ordered pairs, which makes
    the term independent of mesh resolution and scale of the edge count.
    """
    if reduction not in ("sum", "mean"):
        raise ValueError(f"unknown reduction {reduction!r}")
    e = mesh.topology.edges
    grad = np.zeros_like(mesh.vertices)
    if len(e) == 0:
        return 0.0, grad
    diff = mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]]
    scale = 1.0 if reduction == "sum" else 1.0 / (2 * len(e))
    value = float(2.0 * scale * np.sum(diff * diff))
    np.add.at(grad, e[:, 0], 4.0 * scale * diff)
    np.add.at(grad, e[:, 1], -4.0 * scale * diff)
    return value, grad
