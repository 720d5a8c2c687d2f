"""Soft silhouette rasterization of triangle meshes and its adjoint.

Each face covers a pixel with probability ``sigmoid(sign * d2 / sharpness)``
where ``d2`` is the squared screen-space distance from the pixel center to the
projected triangle (sign +1 inside, -1 outside).  Coverage is aggregated as a
union, ``1 - prod(1 - D_j)``, with no depth test.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Camera
from .mesh import TriangleMesh

_EPS = 1e-20


@dataclass(frozen=True)
class SoftRasterSettings:
    sharpness: float = 1e-4        # screen units squared
    distance_cutoff: float = 0.05  # screen units; outside faces farther away are skipped

    def __post_init__(self):
        if not (self.sharpness > 0 and self.distance_cutoff > 0):
            raise ValueError("sharpness and distance_cutoff must be positive")


def _candidate_pairs(tri2d: np.ndarray, camera: Camera, cutoff: float):
    """(face, pixel) pairs whose pixel center lies in the cutoff-padded face bbox."""
    h2 = camera.height / 2.0
    w2 = camera.width / 2.0
    lo = tri2d.min(axis=1) - cutoff
    hi = tri2d.max(axis=1) + cutoff
    x0 = np.maximum(np.ceil(lo[:, 0] * h2 + w2 - 0.5), 0).astype(np.int64)
    x1 = np.minimum(np.floor(hi[:, 0] * h2 + w2 - 0.5), camera.width - 1).astype(np.int64)
    y0 = np.maximum(np.ceil(lo[:, 1] * h2 + h2 - 0.5), 0).astype(np.int64)
    y1 = np.minimum(np.floor(hi[:, 1] * h2 + h2 - 0.5), camera.height - 1).astype(np.int64)
    nx = np.maximum(x1 - x0 + 1, 0)
    ny = np.maximum(y1 - y0 + 1, 0)
    counts = nx * ny
    total = int(counts.sum())
    face = np.repeat(np.arange(len(tri2d)), counts)
    local = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    ix = x0[face] + local % nx[face]
    iy = y0[face] + local // nx[face]
    return face, iy * camera.width + ix, ix, iy


class SoftRasterPass:
    """Forward state kept for the backward pass of one (mesh, camera) render."""

    def __init__(self, mesh: TriangleMesh, camera: Camera, settings: SoftRasterSettings):
        self.mesh = mesh
        self.camera = camera
        self.settings = settings
        n_pix = camera.width * camera.height

        faces = mesh.faces
        screen = camera.to_screen(mesh.vertices) if mesh.n_vertices else np.zeros((0, 2))
        keep = np.ones(len(faces), dtype=bool)
        if not camera.is_orthographic and len(faces):
            depth = camera.to_camera(mesh.vertices)[:, 2]
            keep = np.all(depth[faces] > 1e-6, axis=1)
        face_ids = np.flatnonzero(keep)
        tri = screen[faces[face_ids]] if len(face_ids) else np.zeros((0, 3, 2))
        self.screen = screen

        face_local, pix, ix, iy = _candidate_pairs(tri, camera, settings.distance_cutoff)
        half = camera.height / 2.0
        p = np.stack([(ix + 0.5 - camera.width / 2.0) / half, (iy + 0.5 - half) / half], axis=1)
        t = tri[face_local]  # (P, 3, 2)

        # squared distance to each of the three edges (k, k+1)
        a = t
        b = t[:, [1, 2, 0]]
        ab = b - a
        ap = p[:, None, :] - a
        len2 = np.einsum("pkj,pkj->pk", ab, ab)
        tt = np.clip(np.einsum("pkj,pkj->pk", ap, ab) / np.maximum(len2, _EPS), 0.0, 1.0)
        r = ap - tt[..., None] * ab
        d2_all = np.einsum("pkj,pkj->pk", r, r)
        k = np.argmin(d2_all, axis=1)
        rows = np.arange(len(k))
        d2 = d2_all[rows, k]

        cross = ab[..., 0] * ap[..., 1] - ab[..., 1] * ap[..., 0]
        inside = np.all(cross > 0, axis=1) | np.all(cross < 0, axis=1)
        sign = np.where(inside, 1.0, -1.0)
        within = inside | (d2 <= settings.distance_cutoff**2)

        sel = np.flatnonzero(within)
        self.pix = pix[sel]
        self.face = face_ids[face_local[sel]]
        self.edge = k[sel]
        self.t = tt[sel, k[sel]]
        self.r = r[sel, k[sel]]
        self.sign = sign[sel]
        z = self.sign * d2[sel] / settings.sharpness
        self.z = z
        self.log1m = -np.logaddexp(0.0, z)  # log(1 - sigmoid(z))
        self.log_t = np.bincount(self.pix, weights=self.log1m, minlength=n_pix)
        self.image = (-np.expm1(self.log_t)).reshape(camera.height, camera.width)

    def backward(self, upstream) -> np.ndarray:
        """Vertex gradients (V, 3) of ``sum(upstream * image)``."""
        cam = self.camera
        grad = np.zeros((self.mesh.n_vertices, 3))
        up = np.asarray(upstream, dtype=np.float64).reshape(-1)
        if up.size != cam.width * cam.height:
            raise ValueError("upstream shape does not match the image")
        if len(self.pix) == 0 or not np.any(up):
            return grad
        # d image / d D_j = prod_{k != j}(1 - D_k)
        others = np.exp(self.log_t[self.pix] - self.log1m)
        dz = np.exp(self.z - 2.0 * np.logaddexp(0.0, self.z))  # sigmoid'(z)
        g_d2 = up[self.pix] * others * dz * self.sign / self.settings.sharpness

        # d(d2)/da = -2 r (1 - t), d(d2)/db = -2 r t for the closest edge (a, b)
        ga = (-2.0 * (1.0 - self.t) * g_d2)[:, None] * self.r
        gb = (-2.0 * self.t * g_d2)[:, None] * self.r
        faces = self.mesh.faces[self.face]
        rows = np.arange(len(self.face))
        va = faces[rows, self.edge]
        vb = faces[rows, (self.edge + 1) % 3]
        n = self.mesh.n_vertices
        g_screen = np.zeros((n, 2))
        for j in range(2):
            g_screen[:, j] = (np.bincount(va, weights=ga[:, j], minlength=n)
                              + np.bincount(vb, weights=gb[:, j], minlength=n))
        touched = np.flatnonzero(np.any(g_screen != 0, axis=1))
        if len(touched):
            jac = cam.screen_jacobian(self.mesh.vertices[touched])
            grad[touched] = np.einsum("vi,vij->vj", g_screen[touched], jac)
        return grad


def soft_silhouette(mesh: TriangleMesh, camera: Camera,
                    settings: SoftRasterSettings = SoftRasterSettings()) -> np.ndarray:
    return SoftRasterPass(mesh, camera, settings).image


def soft_silhouette_backward(mesh: TriangleMesh, camera: Camera, settings: SoftRasterSettings,
                             upstream) -> np.ndarray:
    return SoftRasterPass(mesh, camera, settings).backward(upstream)


def hard_silhouette(mesh: TriangleMesh, camera: Camera) -> np.ndarray:
    """Binary coverage of pixel centers by any projected face."""
    img = soft_silhouette(mesh, camera, SoftRasterSettings(sharpness=1e-12, distance_cutoff=1e-9))
    return (img >= 0.5).astype(np.float64)
