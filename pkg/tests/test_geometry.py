import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from umbra.geometry import Camera, camera_from_view_spec, look_at, pixel_ray


def test_camera_on_plus_x():
    cam = camera_from_view_spec(0.0, 0.0, 3.0)
    np.testing.assert_allclose(cam.position, [3, 0, 0], atol=1e-12)
    np.testing.assert_allclose(cam.axis, [-1, 0, 0], atol=1e-12)


def test_camera_on_plus_y():
    cam = camera_from_view_spec(math.pi / 2, 0.0, 3.0)
    np.testing.assert_allclose(cam.position, [0, 3, 0], atol=1e-12)
    np.testing.assert_allclose(cam.axis, [0, -1, 0], atol=1e-12)


def test_oblique_camera_matches_spherical_oracle():
    az, el, d = math.pi / 4, math.pi / 6, 2.0
    cam = camera_from_view_spec(az, el, d)
    # independent conversion: rotate (d, 0, 0) by el about -y, then az about z
    p = np.array([d * math.cos(el), 0.0, d * math.sin(el)])
    rz = np.array([[math.cos(az), -math.sin(az), 0], [math.sin(az), math.cos(az), 0], [0, 0, 1]])
    expected = rz @ p
    np.testing.assert_allclose(cam.position, expected, atol=1e-12)
    np.testing.assert_allclose(cam.axis, -expected / np.linalg.norm(expected), atol=1e-12)


def test_rotation_is_proper():
    cam = camera_from_view_spec(1.1, -0.4, 5.0)
    assert np.linalg.det(cam.rotation) == pytest.approx(1.0)


def test_pole_view_is_well_defined():
    cam = camera_from_view_spec(0.3, math.pi / 2, 2.0)
    np.testing.assert_allclose(cam.axis, [0, 0, -1], atol=1e-12)
    assert np.all(np.isfinite(cam.rotation))


@pytest.mark.parametrize("bad", [dict(distance=0.0), dict(distance=-1.0), dict(azimuth=float("nan"))])
def test_invalid_view_spec(bad):
    kw = dict(azimuth=0.0, elevation=0.0, distance=3.0) | bad
    with pytest.raises(ValueError):
        camera_from_view_spec(**kw)


def test_camera_rejects_non_orthonormal():
    with pytest.raises(ValueError):
        Camera(np.diag([1.0, 2.0, 1.0]), np.zeros(3))


def test_orthographic_rays_parallel():
    cam = camera_from_view_spec(0.0, 0.0, 3.0, width=16, height=16)
    a = pixel_ray(cam, 0.5, 0.5)
    b = pixel_ray(cam, 12.5, 7.5)
    np.testing.assert_allclose(a.direction, [-1, 0, 0], atol=1e-12)
    np.testing.assert_allclose(b.direction, [-1, 0, 0], atol=1e-12)
    assert not np.allclose(a.origin, b.origin)


def test_perspective_center_ray_is_axis():
    cam = camera_from_view_spec(0.7, 0.2, 4.0, "perspective", math.radians(50), 33, 33)
    ray = pixel_ray(cam, 16.5, 16.5)
    np.testing.assert_allclose(ray.direction, cam.axis, atol=1e-6)
    np.testing.assert_allclose(ray.origin, cam.position, atol=1e-12)


def test_perspective_corner_ray_matches_pinhole():
    fov = math.radians(60)
    w, h = 40, 30
    cam = camera_from_view_spec(0.0, 0.0, 3.0, "perspective", fov, w, h)
    px, py = 0.5, 0.5
    # pinhole: focal length in pixels from the vertical field of view
    f_px = (h / 2) / math.tan(fov / 2)
    d_cam = np.array([px - w / 2, py - h / 2, f_px])
    d_cam /= np.linalg.norm(d_cam)
    expected = cam.rotation.T @ d_cam
    np.testing.assert_allclose(pixel_ray(cam, px, py).direction, expected, atol=1e-12)


def test_pixel_ray_out_of_range():
    cam = camera_from_view_spec(0.0, 0.0, 3.0, width=8, height=8)
    with pytest.raises(ValueError):
        pixel_ray(cam, 8.0, 1.0)


def test_project_inverts_ray():
    cam = camera_from_view_spec(0.4, 0.3, 3.0, "perspective", 0.8, 20, 10)
    ray = pixel_ray(cam, 3.25, 7.75)
    np.testing.assert_allclose(cam.project(ray.origin + 2.0 * ray.direction)[0], [3.25, 7.75], atol=1e-9)


def test_look_at_faces_target():
    rot = look_at([1.0, 2.0, 3.0], [0.0, 1.0, 0.0])
    fwd = np.array([-1.0, -1.0, -3.0]) / math.sqrt(11)
    np.testing.assert_allclose(rot[2], fwd)


views = st.tuples(st.floats(-math.pi, math.pi), st.floats(-1.5, 1.5), st.floats(0.5, 10.0),
                  st.sampled_from(["orthographic", "perspective"]), st.integers(1, 40), st.integers(1, 40))


@given(views, st.floats(0, 0.999), st.floats(0, 0.999))
def test_rays_are_unit(view, fx, fy):
    az, el, d, proj, w, h = view
    cam = camera_from_view_spec(az, el, d, proj, 0.9, w, h)
    ray = pixel_ray(cam, fx * w, fy * h)
    assert abs(np.linalg.norm(ray.direction) - 1.0) <= 1e-6


@given(views)
def test_origin_projects_to_image_center(view):
    az, el, d, proj, w, h = view
    cam = camera_from_view_spec(az, el, d, proj, 0.9, w, h)
    np.testing.assert_allclose(cam.project(np.zeros(3))[0], [w / 2, h / 2], atol=0.5)


@given(views)
def test_ray_bundle_structure(view):
    az, el, d, proj, w, h = view
    cam = camera_from_view_spec(az, el, d, proj, 0.9, max(w, 2), h)
    origins, dirs = cam.pixel_rays()
    if proj == "orthographic":
        assert np.allclose(dirs, dirs[0])
        assert not np.allclose(origins, origins[0])
    else:
        assert np.allclose(origins, origins[0])
        assert not np.allclose(dirs, dirs[0])
