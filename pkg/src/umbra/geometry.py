"""Cameras and rays shared by the voxel and mesh renderers.

Camera frame follows the OpenCV convention: +x right, +y down, +z along the
optical axis.  ``rotation`` maps world to camera coordinates and
``x_cam = rotation @ x_world + translation``.

Screen coordinates are normalized so the image height spans [-1, 1] (y down);
pixel centers sit at ``(i + 0.5, j + 0.5)`` with row 0 at the top.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ORTHOGRAPHIC = "orthographic"
PERSPECTIVE = "perspective"
PROJECTIONS = (ORTHOGRAPHIC, PERSPECTIVE)

# half-height of the orthographic view window; covers a 1.7-unit cube face with margin
DEFAULT_ORTHO_EXTENT = 0.9
_POLE_TOL = 1e-6


@dataclass(frozen=True)
class Ray:
    origin: np.ndarray
    direction: np.ndarray


@dataclass(frozen=True, eq=False)
class Camera:
    rotation: np.ndarray
    translation: np.ndarray
    projection: str = ORTHOGRAPHIC
    fov_or_extent: float = DEFAULT_ORTHO_EXTENT
    width: int = 128
    height: int = 128
    _position: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rot = np.array(self.rotation, dtype=np.float64)
        t = np.array(self.translation, dtype=np.float64).reshape(3)
        if rot.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got {rot.shape}")
        if not np.allclose(rot.T @ rot, np.eye(3), atol=1e-6):
            raise ValueError("rotation is not orthonormal")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"unknown projection {self.projection!r}")
        if not self.fov_or_extent > 0:
            raise ValueError("fov_or_extent must be positive")
        if self.projection == PERSPECTIVE and not self.fov_or_extent < np.pi:
            raise ValueError("perspective field of view must be below pi")
        if int(self.width) < 1 or int(self.height) < 1:
            raise ValueError("image dimensions must be >= 1")
        rot.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "width", int(self.width))
        object.__setattr__(self, "height", int(self.height))
        pos = -rot.T @ t
        pos.flags.writeable = False
        object.__setattr__(self, "_position", pos)

    @property
    def position(self) -> np.ndarray:
        return self._position

    @property
    def axis(self) -> np.ndarray:
        """Unit optical-axis direction in world coordinates."""
        return self.rotation[2]

    @property
    def shape(self) -> tuple[int, int]:
        return self.height, self.width

    @property
    def is_orthographic(self) -> bool:
        return self.projection == ORTHOGRAPHIC

    def with_resolution(self, width: int, height: int) -> "Camera":
        return Camera(self.rotation, self.translation, self.projection,
                      self.fov_or_extent, width, height)

    # --- screen <-> pixel ---------------------------------------------------

    def pixel_to_screen(self, px, py):
        half = self.height / 2.0
        return (np.asarray(px) - self.width / 2.0) / half, (np.asarray(py) - half) / half

    def screen_to_pixel(self, sx, sy):
        half = self.height / 2.0
        return np.asarray(sx) * half + self.width / 2.0, np.asarray(sy) * half + half

    def pixel_screen_grid(self) -> np.ndarray:
        """Screen coordinates of all pixel centers, shape (H, W, 2)."""
        px = np.arange(self.width) + 0.5
        py = np.arange(self.height) + 0.5
        sx, sy = self.pixel_to_screen(px, py)
        gx, gy = np.meshgrid(sx, sy)
        return np.stack([gx, gy], axis=-1)

    # --- projection -----------------------------------------------------------

    def to_camera(self, points) -> np.ndarray:
        return np.asarray(points, dtype=np.float64) @ self.rotation.T + self.translation

    def to_screen(self, points) -> np.ndarray:
        """Project world points (N, 3) to screen coordinates (N, 2).

        Perspective projection of points at or behind the camera plane is
        undefined; callers keep geometry in front of the camera.
        """
        pc = self.to_camera(points)
        if self.is_orthographic:
            return pc[:, :2] / self.fov_or_extent
        f = np.tan(self.fov_or_extent / 2.0)
        return pc[:, :2] / (pc[:, 2:3] * f)

    def screen_jacobian(self, points) -> np.ndarray:
        """d(screen)/d(world point), shape (N, 2, 3)."""
        pts = np.asarray(points, dtype=np.float64)
        n = len(pts)
        if self.is_orthographic:
            jac = np.broadcast_to(self.rotation[:2] / self.fov_or_extent, (n, 2, 3))
            return np.array(jac)
        pc = self.to_camera(pts)
        f = np.tan(self.fov_or_extent / 2.0)
        z = pc[:, 2]
        dproj = np.zeros((n, 2, 3))
        dproj[:, 0, 0] = 1.0 / z
        dproj[:, 1, 1] = 1.0 / z
        dproj[:, 0, 2] = -pc[:, 0] / z**2
        dproj[:, 1, 2] = -pc[:, 1] / z**2
        return dproj @ self.rotation / f

    def project(self, points) -> np.ndarray:
        """World points to continuous pixel coordinates (N, 2) as (px, py)."""
        s = self.to_screen(np.atleast_2d(points))
        px, py = self.screen_to_pixel(s[:, 0], s[:, 1])
        return np.stack([px, py], axis=-1)

    # --- rays -----------------------------------------------------------------

    def rays_from_screen(self, sx, sy) -> tuple[np.ndarray, np.ndarray]:
        sx = np.asarray(sx, dtype=np.float64).ravel()
        sy = np.asarray(sy, dtype=np.float64).ravel()
        right, down, fwd = self.rotation
        if self.is_orthographic:
            h = self.fov_or_extent
            origins = self.position + h * (sx[:, None] * right + sy[:, None] * down)
            dirs = np.broadcast_to(fwd, origins.shape).copy()
        else:
            f = np.tan(self.fov_or_extent / 2.0)
            dirs = fwd + f * (sx[:, None] * right + sy[:, None] * down)
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            origins = np.broadcast_to(self.position, dirs.shape).copy()
        return origins, dirs

    def pixel_rays(self) -> tuple[np.ndarray, np.ndarray]:
        """Origins and unit directions for every pixel, row-major, (H*W, 3) each."""
        grid = self.pixel_screen_grid()
        return self.rays_from_screen(grid[..., 0], grid[..., 1])


def look_at(position, target=(0.0, 0.0, 0.0), up=None) -> np.ndarray:
    """World-to-camera rotation for a camera at ``position`` facing ``target``."""
    position = np.asarray(position, dtype=np.float64)
    fwd = np.asarray(target, dtype=np.float64) - position
    fwd /= np.linalg.norm(fwd)
    if up is None:
        up = np.array([0.0, 0.0, 1.0])
        if np.linalg.norm(np.cross(fwd, up)) < _POLE_TOL:
            up = np.array([1.0, 0.0, 0.0])
    right = np.cross(fwd, up)
    right /= np.linalg.norm(right)
    down = np.cross(fwd, right)
    return np.stack([right, down, fwd])


def camera_from_view_spec(azimuth: float, elevation: float, distance: float,
                          projection: str = ORTHOGRAPHIC,
                          fov_or_extent: float = DEFAULT_ORTHO_EXTENT,
                          width: int = 128, height: int = 128) -> Camera:
    """Camera on a sphere of radius ``distance`` looking at the world origin.

    Azimuth is measured in the xy-plane from +x toward +y, elevation toward +z.
    World +z is the up direction except within 1e-6 of a pole, where +x is used.
    """
    vals = np.array([azimuth, elevation, distance, fov_or_extent], dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise ValueError("view spec must be finite")
    if distance <= 0:
        raise ValueError("distance must be positive")
    ce = np.cos(elevation)
    position = distance * np.array([ce * np.cos(azimuth), ce * np.sin(azimuth), np.sin(elevation)])
    rot = look_at(position)
    return Camera(rot, -rot @ position, projection, fov_or_extent, width, height)


def pixel_ray(camera: Camera, px: float, py: float) -> Ray:
    if not (0 <= px < camera.width and 0 <= py < camera.height):
        raise ValueError(f"pixel ({px}, {py}) outside {camera.width}x{camera.height} image")
    sx, sy = camera.pixel_to_screen(px, py)
    origins, dirs = camera.rays_from_screen(sx, sy)
    return Ray(origins[0], dirs[0])
