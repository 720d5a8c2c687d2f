import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from umbra.export import euler_characteristic, validate_mesh
from umbra.geometry import camera_from_view_spec, pixel_ray
from umbra.optim import gradient_check
from umbra.voxel import (RenderSettings, VolumeProjector, VoxelGrid, densities,
                         extract_blocky_mesh, extract_isosurface, render_silhouette,
                         render_silhouette_backward)


def _grid(values, extent=1.7):
    return VoxelGrid(np.asarray(values, dtype=float), extent)


def test_densities_values():
    d = densities(_grid(np.array([0.0, 20.0, 1.0]).reshape(1, 1, 3).repeat(3, 0).repeat(3, 1)))
    assert d[0, 0, 0] == 0.5
    assert abs(d[0, 0, 1] - 1.0) <= 1e-8
    assert d[0, 0, 2] == pytest.approx(1 / (1 + math.exp(-1)), abs=1e-15)


def test_grid_must_be_cubic():
    with pytest.raises(ValueError):
        VoxelGrid(np.zeros((2, 3, 2)))


def test_default_kappa_scales_with_extent():
    s = RenderSettings()
    assert s.kappa(2.0) == pytest.approx(s.kappa(1.0) / 2)
    assert RenderSettings(opacity_scale=7.0).kappa(3.0) == 7.0


def test_empty_volume_renders_black():
    cam = camera_from_view_spec(0.3, 0.2, 3.0, width=12, height=12)
    img = render_silhouette(VoxelGrid.filled(6, -40.0), cam)
    assert np.abs(img).max() <= 1e-6


@pytest.mark.parametrize("az,el", [(0.0, 0.0), (0.6, 0.35)])
def test_uniform_density_closed_form(az, el):
    d_logit = 0.3
    grid = VoxelGrid.filled(8, d_logit, 1.7)
    d = densities(grid)[0, 0, 0]
    kappa = 2.0
    settings = RenderSettings(samples_per_ray=256, opacity_scale=kappa)
    cam = camera_from_view_spec(az, el, 3.0, "perspective", 0.6, 9, 9)
    img = render_silhouette(grid, cam, settings)
    # exact chord through the cube for the center pixel
    ray = pixel_ray(cam, 4.5, 4.5)
    half = 0.85
    with np.errstate(divide="ignore"):
        ta = (-half - ray.origin) / ray.direction
        tb = (half - ray.origin) / ray.direction
    length = np.min(np.maximum(ta, tb)) - np.max(np.minimum(ta, tb))
    assert img[4, 4] == pytest.approx(1 - math.exp(-kappa * d * length), abs=1e-3)


def test_dense_cube_saturates():
    extent = 1.7
    grid = VoxelGrid.filled(8, 40.0, extent)
    cam = camera_from_view_spec(0.0, 0.0, 3.0, "orthographic", 0.8, 16, 16)
    img = render_silhouette(grid, cam, RenderSettings(opacity_scale=20.0 / extent))
    assert img.min() >= 0.999  # the 0.8 window lies inside the cube face


def test_zero_upstream_zero_gradient():
    cam = camera_from_view_spec(0.3, 0.2, 3.0, width=8, height=8)
    g = render_silhouette_backward(VoxelGrid.filled(5, 0.2), cam, RenderSettings(), np.zeros((8, 8)))
    assert g.shape == (5, 5, 5) and not np.any(g)


def test_single_pixel_gradient_support():
    res, extent, n = 6, 1.7, 24
    cam = camera_from_view_spec(0.4, 0.3, 3.0, "perspective", 0.9, 10, 10)
    settings = RenderSettings(samples_per_ray=n)
    up = np.zeros((10, 10)); up[4, 6] = 1.0
    g = render_silhouette_backward(VoxelGrid.filled(res, -8.0, extent), cam, settings, up)
    # independent support: voxels with a positive trilinear weight at some sample
    ray = pixel_ray(cam, 6.5, 4.5)
    half = extent / 2
    ta = (-half - ray.origin) / ray.direction
    tb = (half - ray.origin) / ray.direction
    t0, t1 = np.max(np.minimum(ta, tb)), np.min(np.maximum(ta, tb))
    h = extent / res
    touched = np.zeros((res,) * 3, dtype=bool)
    for k in range(n):
        p = ray.origin + (t0 + (k + 0.5) * (t1 - t0) / n) * ray.direction
        q = np.clip((p + half) / h - 0.5, 0, res - 1)
        lo = np.floor(q).astype(int)
        for corner in np.ndindex(2, 2, 2):
            c = lo + corner
            if np.any(c > res - 1):
                continue
            w = np.prod(1 - np.abs(q - c))
            if w > 0:
                touched[tuple(c)] = True
    assert touched.any()
    np.testing.assert_array_equal(g > 0, touched)
    assert not np.any(g < 0)


def test_voxel_gradient_matches_fd(rng):
    cam = camera_from_view_spec(0.5, 0.4, 3.0, "perspective", 0.9, 16, 16)
    settings = RenderSettings(samples_per_ray=32, opacity_scale=3.0)
    proj = VolumeProjector(cam, 8, 1.7, settings)
    target = rng.random((16, 16))
    w = rng.standard_normal((16, 16))
    logits = rng.standard_normal((8, 8, 8))

    def f(x):
        return float(np.sum(w * (proj.render(densities(VoxelGrid(x))) - target)))

    analytic = proj.backward_logits(VoxelGrid(logits), w)
    rep = gradient_check(f, analytic, logits, eps=1e-3, tolerance=1e-3, n_coords=128, rng=0)
    assert rep.passed, rep.max_rel_error


def test_jitter_is_seeded():
    cam = camera_from_view_spec(0.3, 0.2, 3.0, width=8, height=8)
    grid = VoxelGrid(np.random.default_rng(0).standard_normal((5, 5, 5)))
    s = RenderSettings(step_jitter=True)
    a = render_silhouette(grid, cam, s, np.random.default_rng(7))
    b = render_silhouette(grid, cam, s, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


small_logits = st.integers(2, 5).flatmap(
    lambda d: arrays(np.float64, (d, d, d), elements=st.floats(-6, 6)))


@given(small_logits, st.floats(-math.pi, math.pi), st.floats(-1.4, 1.4))
def test_render_bounded_and_monotone(logits, az, el):
    cam = camera_from_view_spec(az, el, 3.0, "orthographic", 0.9, 6, 6)
    proj = VolumeProjector(cam, logits.shape[0], 1.7, RenderSettings(opacity_scale=6.0))
    d = densities(VoxelGrid(logits))
    img = proj.render(d)
    assert img.min() >= 0 and img.max() <= 1
    more = proj.render(np.minimum(d + 0.1 * (d < 0.9), 1.0))
    assert np.all(more >= img - 1e-15)


def test_single_voxel_cube():
    logits = np.full((3, 3, 3), -5.0); logits[1, 1, 1] = 5.0
    mesh = extract_blocky_mesh(VoxelGrid(logits))
    assert (mesh.n_vertices, mesh.n_faces) == (8, 12)
    rep = validate_mesh(mesh)
    assert rep.watertight and rep.consistent_orientation


def test_two_adjacent_voxels():
    logits = np.full((3, 3, 3), -5.0); logits[1, 1, 1] = logits[1, 1, 2] = 5.0
    mesh = extract_blocky_mesh(VoxelGrid(logits))
    assert mesh.n_faces == 20
    assert validate_mesh(mesh).watertight


def test_blocky_outward_and_sized():
    from umbra.export import signed_volume
    logits = np.full((4, 4, 4), -5.0); logits[0, :2, 1] = 5.0
    grid = VoxelGrid(logits, 2.0)
    mesh = extract_blocky_mesh(grid)
    assert signed_volume(mesh) == pytest.approx(2 * grid.voxel_size ** 3)


def test_empty_extraction(caplog):
    grid = VoxelGrid.filled(4, -3.0)
    assert extract_blocky_mesh(grid).is_empty
    assert extract_isosurface(grid).is_empty
    assert "empty" in caplog.text


@given(arrays(np.bool_, (4, 4, 4)))
def test_blocky_always_watertight(occ):
    if not occ.any():
        return
    mesh = extract_blocky_mesh(VoxelGrid(np.where(occ, 4.0, -4.0)))
    rep = validate_mesh(mesh)
    assert rep.watertight and rep.consistent_orientation and rep.degenerate_faces == 0


def test_isosurface_ball_is_sphere():
    d = 16
    c = np.arange(d) - (d - 1) / 2
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    grid = VoxelGrid(np.where(x**2 + y**2 + z**2 < 25, 6.0, -6.0))
    mesh = extract_isosurface(grid)
    rep = validate_mesh(mesh)
    assert rep.watertight and rep.consistent_orientation
    assert euler_characteristic(mesh) == 2


def test_isosurface_single_voxel_watertight():
    logits = np.full((3, 3, 3), -6.0); logits[1, 1, 1] = 6.0
    mesh = extract_isosurface(VoxelGrid(logits))
    assert validate_mesh(mesh).watertight


def test_isosurface_touching_boundary_is_closed():
    mesh = extract_isosurface(VoxelGrid.filled(5, 4.0))
    assert validate_mesh(mesh).watertight
    assert euler_characteristic(mesh) == 2
