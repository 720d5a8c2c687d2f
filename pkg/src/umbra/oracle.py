"""Brute-force baselines: visual-hull carving and central finite differences."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import Camera
from .silhouette import TargetImage
from .voxel import VoxelGrid


@dataclass
class ShadowConfiguration:
    """One target shadow and the camera (light direction) that must cast it."""

    target: TargetImage
    camera: Camera
    name: str = "view"

    def __post_init__(self):
        if (self.target.width, self.target.height) != (self.camera.width, self.camera.height):
            self.target = self.target.resampled(self.camera.width, self.camera.height)


@dataclass
class BinaryOccupancy:
    occupied: np.ndarray
    extent: float

    @property
    def resolution(self) -> int:
        return self.occupied.shape[0]

    def centers(self) -> np.ndarray:
        """World positions of all voxel centers, (D**3, 3) in C order."""
        d = self.resolution
        c = -self.extent / 2.0 + (np.arange(d) + 0.5) * self.extent / d
        gx, gy, gz = np.meshgrid(c, c, c, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)

    def to_grid(self, inside: float = 3.0, outside: float = -3.0) -> VoxelGrid:
        return VoxelGrid(np.where(self.occupied, inside, outside), self.extent)


def _pixel_lookup(camera: Camera, points: np.ndarray):
    pix = camera.project(points)
    ix = np.floor(pix[:, 0]).astype(np.int64)
    iy = np.floor(pix[:, 1]).astype(np.int64)
    valid = (ix >= 0) & (ix < camera.width) & (iy >= 0) & (iy < camera.height)
    if not camera.is_orthographic:
        valid &= camera.to_camera(points)[:, 2] > 0
    return ix, iy, valid


def carve_visual_hull(views: Sequence[ShadowConfiguration], resolution: int,
                      extent: float) -> BinaryOccupancy:
    """Keep a voxel iff its center projects onto shadow in every view."""
    if not views:
        raise ValueError("need at least one view")
    occ = BinaryOccupancy(np.ones((resolution,) * 3, dtype=bool), extent)
    pts = occ.centers()
    keep = np.ones(len(pts), dtype=bool)
    for view in views:
        ix, iy, valid = _pixel_lookup(view.camera, pts)
        fg = view.target.values >= 0.5
        hit = np.zeros(len(pts), dtype=bool)
        hit[valid] = fg[iy[valid], ix[valid]]
        keep &= hit
    occ.occupied = keep.reshape((resolution,) * 3)
    return occ


def occupancy_silhouette(occ: BinaryOccupancy, camera: Camera, samples: int | None = None) -> np.ndarray:
    """Hard silhouette of the union of occupied voxel cubes.

    Each pixel-center ray is sampled densely (default: 8 samples per voxel
    along the cube's diagonal) and marked iff a sample falls inside an
    occupied cell.
    """
    d = occ.resolution
    h = occ.extent / d
    samples = samples or int(np.ceil(8 * d * np.sqrt(3)))
    origins, dirs = camera.pixel_rays()
    half = occ.extent / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (-half - origins) / dirs
        tb = (half - origins) / dirs
    t0 = np.maximum(np.nanmax(np.fmin(ta, tb), axis=1), 0.0)
    t1 = np.nanmin(np.fmax(ta, tb), axis=1)
    img = np.zeros(len(origins), dtype=bool)
    for r in np.flatnonzero(t1 > t0):
        t = t0[r] + (np.arange(samples) + 0.5) * (t1[r] - t0[r]) / samples
        cell = np.floor((origins[r] + t[:, None] * dirs[r] + half) / h).astype(np.int64)
        cell = np.clip(cell, 0, d - 1)
        img[r] = occ.occupied[cell[:, 0], cell[:, 1], cell[:, 2]].any()
    return img.reshape(camera.shape).astype(np.float64)


def fd_gradient(f: Callable[[np.ndarray], float], params, eps: float = 1e-6,
                indices=None) -> np.ndarray:
    """Central differences ``(f(x+eps) - f(x-eps)) / 2eps`` per coordinate.

    With ``indices`` (flat positions) only those coordinates are perturbed and
    the returned array holds one entry per index.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    x = np.array(params, dtype=np.float64)
    flat = x.reshape(-1)
    idx = np.arange(flat.size) if indices is None else np.asarray(indices)
    out = np.empty(len(idx))
    for n, i in enumerate(idx):
        orig = flat[i]
        flat[i] = orig + eps
        fp = f(x)
        flat[i] = orig - eps
        fm = f(x)
        flat[i] = orig
        out[n] = (fp - fm) / (2.0 * eps)
    return out.reshape(x.shape) if indices is None else out
