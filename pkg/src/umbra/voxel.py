"""Differentiable volumetric silhouettes of a sigmoid-squashed density grid.

Samples along each ray are composited with absorption-only transmittance,
``alpha_k = 1 - exp(-kappa * d_k * dt)``, so a pixel equals
``1 - exp(-kappa * sum_k d_k * dt)``.  Densities at samples are trilinear in
the voxel values, hence the optical depth of every pixel is a fixed linear map
of the density grid for a given camera.  :class:`VolumeProjector` stores that
map as a sparse matrix and reuses it for the forward and adjoint passes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import expit

from .geometry import Camera
from .mesh import TriangleMesh

log = logging.getLogger(__name__)

DEFAULT_EXTENT = 1.7
DEFAULT_RESOLUTION = 128
# bound on temporary COO entries per chunk when assembling projectors
_CHUNK_ENTRIES = 4_000_000


@dataclass(eq=False)
class VoxelGrid:
    logits: np.ndarray
    extent: float = DEFAULT_EXTENT
    fixed_color: float = 1.0

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=np.float64)
        if self.logits.ndim != 3 or len(set(self.logits.shape)) != 1:
            raise ValueError(f"logits must be a cubic D x D x D array, got {self.logits.shape}")
        if self.resolution < 2:
            raise ValueError("resolution must be >= 2")
        if not self.extent > 0:
            raise ValueError("extent must be positive")

    @classmethod
    def filled(cls, resolution: int = DEFAULT_RESOLUTION, init_logit: float = 1.0,
               extent: float = DEFAULT_EXTENT) -> "VoxelGrid":
        return cls(np.full((resolution,) * 3, float(init_logit)), extent)

    @property
    def resolution(self) -> int:
        return self.logits.shape[0]

    @property
    def voxel_size(self) -> float:
        return self.extent / self.resolution

    def centers(self) -> np.ndarray:
        """World coordinates of voxel centers along one axis."""
        return -self.extent / 2.0 + (np.arange(self.resolution) + 0.5) * self.voxel_size

    def densities(self) -> np.ndarray:
        return densities(self)


def densities(grid: VoxelGrid) -> np.ndarray:
    return expit(grid.logits)


# Optical depth of a fully dense grid crossed along one side.  Much larger
# values saturate the initial render and starve the logits of gradient.
DEFAULT_OPTICAL_WIDTH = 8.0


@dataclass(frozen=True)
class RenderSettings:
    samples_per_ray: int | None = None    # default: 2 * resolution
    step_jitter: bool = False
    opacity_scale: float | None = None    # kappa; default: DEFAULT_OPTICAL_WIDTH / extent

    def __post_init__(self):
        if self.samples_per_ray is not None and self.samples_per_ray < 2:
            raise ValueError("samples_per_ray must be >= 2")
        if self.opacity_scale is not None and not self.opacity_scale > 0:
            raise ValueError("opacity_scale must be positive")

    def samples(self, resolution: int) -> int:
        return self.samples_per_ray or 2 * resolution

    def kappa(self, extent: float) -> float:
        return self.opacity_scale if self.opacity_scale is not None else DEFAULT_OPTICAL_WIDTH / extent


def _ray_box(origins, dirs, half):
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv = 1.0 / dirs
        ta = (-half - origins) * inv
        tb = (half - origins) * inv
    tmin = np.fmin(ta, tb)
    tmax = np.fmax(ta, tb)
    # axis-parallel rays: NaN when the origin lies exactly on a slab plane
    t0 = np.nanmax(tmin, axis=1)
    t1 = np.nanmin(tmax, axis=1)
    t0 = np.maximum(t0, 0.0)
    return t0, t1, t1 > t0


class VolumeProjector:
    """Sparse map from voxel densities to per-pixel optical path integrals.

    Row ``r`` holds ``dt_r * w_rk`` accumulated over the samples of ray ``r``
    and their trilinear weights ``w``; the pixel value is
    ``1 - exp(-kappa * (M @ density))``.
    """

    def __init__(self, camera: Camera, resolution: int, extent: float,
                 settings: RenderSettings = RenderSettings(), rng: np.random.Generator | None = None):
        self.camera = camera
        self.resolution = resolution
        self.extent = extent
        self.settings = settings
        self.kappa = settings.kappa(extent)
        n_samples = settings.samples(resolution)
        if settings.step_jitter and rng is None:
            rng = np.random.default_rng()

        origins, dirs = camera.pixel_rays()
        t0, t1, hit = _ray_box(origins, dirs, extent / 2.0)
        rays = np.flatnonzero(hit)
        n_pix = len(origins)
        n_vox = resolution ** 3
        chunk = max(1, _CHUNK_ENTRIES // (8 * n_samples))
        blocks = []
        for start in range(0, len(rays), chunk):
            r = rays[start:start + chunk]
            dt = (t1[r] - t0[r]) / n_samples
            if settings.step_jitter:
                offs = np.arange(n_samples) + rng.random((len(r), n_samples))
            else:
                offs = np.broadcast_to(np.arange(n_samples) + 0.5, (len(r), n_samples))
            t = t0[r, None] + offs * dt[:, None]
            pts = origins[r, None, :] + t[..., None] * dirs[r, None, :]
            blocks.append(self._trilinear_block(r, pts, dt, n_pix, n_vox))
        if blocks:
            mat = sp.vstack(blocks, format="csr") if len(blocks) > 1 else blocks[0]
        else:
            mat = sp.csr_matrix((0, n_vox))
        # rows so far index hit rays; scatter them back to pixel rows
        expand = sp.csr_matrix((np.ones(len(rays)), (rays, np.arange(len(rays)))),
                               shape=(n_pix, len(rays)))
        self.matrix = sp.csr_matrix(expand @ mat)
        self.matrix.eliminate_zeros()
        self.matrix.sort_indices()

    def _trilinear_block(self, rays, pts, dt, n_pix, n_vox):
        d = self.resolution
        h = self.extent / d
        g = (pts + self.extent / 2.0) / h - 0.5
        g = np.clip(g, 0.0, d - 1.0)
        i0 = np.minimum(np.floor(g).astype(np.int64), d - 2)
        f = g - i0
        nr, ns = pts.shape[:2]
        rows, cols, vals = [], [], []
        local_rows = np.broadcast_to(np.arange(nr)[:, None], (nr, ns))
        for cx in (0, 1):
            wx = f[..., 0] if cx else 1.0 - f[..., 0]
            for cy in (0, 1):
                wy = f[..., 1] if cy else 1.0 - f[..., 1]
                for cz in (0, 1):
                    wz = f[..., 2] if cz else 1.0 - f[..., 2]
                    idx = ((i0[..., 0] + cx) * d + (i0[..., 1] + cy)) * d + (i0[..., 2] + cz)
                    rows.append(local_rows.ravel())
                    cols.append(idx.ravel())
                    vals.append((wx * wy * wz * dt[:, None]).ravel())
        coo = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                            shape=(nr, n_vox))
        return coo.tocsr()

    def optical_depth(self, density: np.ndarray) -> np.ndarray:
        return self.kappa * (self.matrix @ density.ravel())

    def render(self, density: np.ndarray) -> np.ndarray:
        tau = self.optical_depth(density)
        return (-np.expm1(-tau)).reshape(self.camera.height, self.camera.width)

    def backward_density(self, density: np.ndarray, upstream) -> np.ndarray:
        """Gradient of ``sum(upstream * image)`` w.r.t. the density grid."""
        up = np.asarray(upstream, dtype=np.float64).reshape(-1)
        trans = np.exp(-self.optical_depth(density))
        g = self.matrix.T @ (up * trans)
        return (self.kappa * g).reshape(density.shape)

    def backward_logits(self, grid: VoxelGrid, upstream) -> np.ndarray:
        dens = densities(grid)
        return self.backward_density(dens, upstream) * dens * (1.0 - dens)


def render_silhouette(grid: VoxelGrid, camera: Camera,
                      settings: RenderSettings = RenderSettings(), rng=None) -> np.ndarray:
    proj = VolumeProjector(camera, grid.resolution, grid.extent, settings, rng)
    return proj.render(densities(grid))


def render_silhouette_backward(grid: VoxelGrid, camera: Camera, settings: RenderSettings,
                               upstream, rng=None) -> np.ndarray:
    proj = VolumeProjector(camera, grid.resolution, grid.extent, settings, rng)
    return proj.backward_logits(grid, upstream)


# --- mesh extraction -------------------------------------------------------------


def _exposed_quads(occ: np.ndarray):
    """Outward-wound quads for every exposed voxel face.

    Returns corner lattice coordinates (Q, 4, 3) plus, per quad, the flat ids
    (in the 1-padded grid) of the occupied voxel and of the empty cell it faces.
    """
    pad = np.pad(occ, 1)
    dp = pad.shape[0]
    quads, inner, outer = [], [], []
    base = np.array([[0, 0], [1, 0], [1, 1], [0, 1]])
    for axis in range(3):
        b, c = (axis + 1) % 3, (axis + 2) % 3
        for step in (1, -1):
            nb = np.roll(pad, -step, axis=axis)
            faces = np.argwhere((pad & ~nb)[1:-1, 1:-1, 1:-1])
            if not len(faces):
                continue
            corners = np.repeat(faces[:, None, :], 4, axis=1)
            if step == 1:
                corners[:, :, axis] += 1
                off = base
            else:
                off = base[::-1]
            corners[:, :, b] += off[:, 0]
            corners[:, :, c] += off[:, 1]
            quads.append(corners)
            cell = faces + 1
            other = cell.copy()
            other[:, axis] += step
            inner.append((cell[:, 0] * dp + cell[:, 1]) * dp + cell[:, 2])
            outer.append((other[:, 0] * dp + other[:, 1]) * dp + other[:, 2])
    if not quads:
        empty = np.zeros(0, dtype=np.int64)
        return np.zeros((0, 4, 3), dtype=np.int64), empty, empty
    return np.concatenate(quads), np.concatenate(inner), np.concatenate(outer)


def _split_vertices(corner_ids: np.ndarray, inner: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Per-corner vertex labels that keep every edge two-manifold.

    Where two occupied voxels touch only along an edge, four faces meet there.
    Their half-edges are first paired within each voxel (separating the two
    voxels); vertices are the fans found by walking around each lattice corner
    through the pairing.  If both ends of such an edge still weld into the same
    vertices, the voxels are connected around it, and the edge is re-paired
    across the empty cells instead.
    """
    from scipy.sparse.csgraph import connected_components

    nq = len(corner_ids)
    u = corner_ids.ravel()
    v = corner_ids[:, [1, 2, 3, 0]].ravel()
    lo = np.minimum(u, v)
    hi = np.maximum(u, v)
    cell_in = np.repeat(inner, 4)
    cell_out = np.repeat(outer, 4)
    h = np.arange(4 * nq)
    prev = (h // 4) * 4 + (h % 4 + 3) % 4
    join = np.zeros(4 * nq, dtype=bool)
    for _ in range(8):
        pair_key = np.where(join, cell_out, cell_in)
        order = np.lexsort((pair_key, hi, lo))
        twin = np.empty(4 * nq, dtype=np.int64)
        twin[order[0::2]] = order[1::2]
        twin[order[1::2]] = order[0::2]
        graph = sp.coo_matrix((np.ones(4 * nq), (h, twin[prev])), shape=(4 * nq, 4 * nq))
        _, labels = connected_components(graph, directed=False)
        # half-edges whose welded endpoints collide with another edge
        lu, lv = labels, labels[(h // 4) * 4 + (h % 4 + 1) % 4]
        ekey = np.minimum(lu, lv).astype(np.int64) * (4 * nq) + np.maximum(lu, lv)
        _, inv, counts = np.unique(ekey, return_inverse=True, return_counts=True)
        bad = counts[inv] > 2
        if not bad.any():
            break
        join |= bad
    return labels.reshape(nq, 4)


def extract_blocky_mesh(grid: VoxelGrid, iso: float = 0.5) -> TriangleMesh:
    """Cube faces around every voxel whose density exceeds ``iso``.

    Faces between two occupied voxels are dropped; corner vertices are welded
    except where welding would make an edge non-manifold.  Returns an empty
    mesh when no voxel is occupied.
    """
    if not 0 < iso < 1:
        raise ValueError("iso must lie in (0, 1)")
    occ = densities(grid) > iso
    if not occ.any():
        log.warning("no voxel above iso=%g; blocky mesh is empty", iso)
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    quads, inner, outer = _exposed_quads(occ)
    n1 = grid.resolution + 1
    corner_ids = (quads[..., 0] * n1 + quads[..., 1]) * n1 + quads[..., 2]
    labels = _split_vertices(corner_ids, inner, outer)
    uniq, inverse = np.unique(labels.ravel(), return_inverse=True)
    inverse = inverse.reshape(labels.shape)
    positions = np.zeros((len(uniq), 3))
    positions[inverse.ravel()] = quads.reshape(-1, 3) * grid.voxel_size - grid.extent / 2.0
    faces = np.concatenate([inverse[:, [0, 1, 2]], inverse[:, [0, 2, 3]]])
    return TriangleMesh(positions, faces)


def extract_isosurface(grid: VoxelGrid, iso: float = 0.5) -> TriangleMesh:
    """Marching-cubes surface of the density field, closed at the grid boundary."""
    from skimage.measure import marching_cubes

    if not 0 < iso < 1:
        raise ValueError("iso must lie in (0, 1)")
    dens = densities(grid)
    if not np.any(dens > iso):
        log.warning("no density above iso=%g; isosurface is empty", iso)
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int64))
    pad = np.pad(dens, 1, constant_values=0.0)
    h = grid.voxel_size
    verts, faces, _, _ = marching_cubes(pad, level=iso, spacing=(h, h, h),
                                        gradient_direction="descent", allow_degenerate=False)
    verts = verts - grid.extent / 2.0 - 0.5 * h
    faces = faces.astype(np.int64)
    # marching_cubes winds faces clockwise when seen along its normals
    faces = faces[:, [0, 2, 1]]
    return _weld(verts, faces)


def _weld(verts, faces, decimals: int = 9) -> TriangleMesh:
    key = np.round(verts, decimals)
    uniq, index, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    faces = inverse.reshape(-1)[faces]
    ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    return TriangleMesh(verts[index], faces[ok])
