import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import axis_cameras
from umbra.mesh import icosphere
from umbra.optim import (AdamState, LossWeights, adam_step, gradient_check, image_loss,
                         mesh_objective, optimize_mesh, optimize_voxel, total_mesh_loss)
from umbra.oracle import ShadowConfiguration
from umbra.silhouette import TargetImage
from umbra.softras import SoftRasterSettings, soft_silhouette
from umbra.voxel import RenderSettings, VoxelGrid, render_silhouette


def test_image_loss_zero_at_target(rng):
    t = rng.random((5, 6))
    value, grad = image_loss(t, t)
    assert value == 0.0 and not np.any(grad)


def test_image_loss_half_offset():
    t = np.zeros((4, 4))
    value, _ = image_loss(t + 0.5, t)
    assert value == pytest.approx(10 * 0.5 + 10 * 0.25)


def test_image_loss_single_pixel():
    t = np.zeros((3, 5)); r = t.copy(); r[1, 2] = -0.3
    w = LossWeights(l1=2.0, l2=7.0)
    assert image_loss(r, t, w)[0] == pytest.approx((2.0 * 0.3 + 7.0 * 0.09) / 15)


def test_image_loss_accepts_target_image():
    t = TargetImage(np.eye(3))
    assert image_loss(np.eye(3), t)[0] == 0.0
    with pytest.raises(ValueError, match="dimension"):
        image_loss(np.eye(4), t)


@given(arrays(np.float64, (3, 4), elements=st.floats(0, 1)), arrays(np.float64, (3, 4), elements=st.floats(0, 1)))
def test_image_loss_zero_iff_equal(r, t):
    value, grad = image_loss(r, t)
    assert (value == 0.0) == np.array_equal(r, t)


def test_image_loss_gradient(rng):
    r, t = rng.random((6, 7)), (rng.random((6, 7)) > 0.5).astype(float)
    rep = gradient_check(lambda x: image_loss(x, t)[0], image_loss(r, t)[1], r, eps=1e-6, tolerance=1e-6)
    assert rep.passed


def test_total_mesh_loss_values():
    assert total_mesh_loss(0, 0, 0, 0) == 0
    assert total_mesh_loss(1, 1, 1, 1) == pytest.approx(6.4)
    assert total_mesh_loss(2, 0, 0, 0) == pytest.approx(3.2)


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4), st.integers(0, 3), st.floats(-10, 10))
def test_total_mesh_loss_linear(parts, k, scale):
    base = total_mesh_loss(*parts)
    bumped = list(parts); bumped[k] += scale
    weight = [1.6, 2.1, 0.9, 1.8][k]
    assert total_mesh_loss(*bumped) - base == pytest.approx(weight * scale, rel=1e-9, abs=1e-8)


def test_loss_weights_reject_negative():
    with pytest.raises(ValueError):
        LossWeights(edge=-1.0)


def test_adam_zero_gradient_keeps_params():
    p = np.array([1.0, -2.0])
    new, _ = adam_step(p, np.zeros(2), AdamState.zeros_like(p, lr=0.1))
    np.testing.assert_array_equal(new, p)


def test_adam_first_step():
    p = np.zeros(1)
    new, state = adam_step(p, np.ones(1), AdamState.zeros_like(p, lr=0.01))
    assert new[0] == pytest.approx(-0.01, rel=1e-6) and state.step == 1


def test_adam_constant_gradient_limit():
    p = np.zeros(3)
    g = np.array([3.0, -0.2, 50.0])
    state = AdamState.zeros_like(p, lr=0.01)
    for _ in range(2000):
        prev = p
        p, state = adam_step(p, g, state)
    np.testing.assert_allclose(p - prev, -0.01 * np.sign(g), rtol=1e-4)


def test_adam_rejects_non_finite():
    p = np.zeros(2)
    with pytest.raises(FloatingPointError):
        adam_step(p, np.array([0.0, np.nan]), AdamState.zeros_like(p))


def test_gradient_check_quadratic(rng):
    a = rng.standard_normal((6, 6)); a = a @ a.T
    x = rng.standard_normal(6)
    rep = gradient_check(lambda v: 0.5 * v @ a @ v, a @ x, x, eps=1e-4, tolerance=1e-8)
    assert rep.passed and rep.max_rel_error <= 1e-8
    assert len(rep.checked) == 6


def test_gradient_check_flags_wrong_gradient():
    x = np.arange(100.0)
    rep = gradient_check(lambda v: float(np.sum(v**2)), 2 * x + (np.arange(100) == 7), x, rng=0)
    assert not rep.passed or 7 not in rep.checked
    assert len(rep.checked) >= 64


def _voxel_views(size=16, n=2):
    cams = axis_cameras(size, 0.85, n)
    return cams


def test_voxel_fixed_point():
    rng = np.random.default_rng(5)
    grid = VoxelGrid(rng.standard_normal((6, 6, 6)))
    settings = RenderSettings(samples_per_ray=16)
    views = [ShadowConfiguration(TargetImage(render_silhouette(grid, c, settings), "grayscale"), c)
             for c in _voxel_views()]
    out, run = optimize_voxel(views, grid, settings, budget=5)
    assert run.history[0]["l_img"] == 0.0
    np.testing.assert_array_equal(out.logits, grid.logits)


def test_voxel_all_ones_squares():
    cams = axis_cameras(64, 0.85, 2)
    views = [ShadowConfiguration(TargetImage(np.ones((64, 64))), c) for c in cams]
    out, run = optimize_voxel(views, VoxelGrid.filled(32), budget=500)
    assert min(run.history[-1]["iou"]) >= 0.98
    assert len(run.history) == 500


def test_voxel_run_is_deterministic():
    rng = np.random.default_rng(2)
    cams = axis_cameras(16, 0.85, 3)
    views = [ShadowConfiguration(TargetImage((rng.random((16, 16)) > 0.5).astype(float)), c) for c in cams]
    settings = RenderSettings(step_jitter=True)
    a = optimize_voxel(views, VoxelGrid.filled(8), settings, budget=15, seed=3)[1].history
    b = optimize_voxel(views, VoxelGrid.filled(8), settings, budget=15, seed=3)[1].history
    c = optimize_voxel(views, VoxelGrid.filled(8), settings, budget=15, seed=3, threads=3)[1].history
    assert a == b
    for ha, hc in zip(a, c):
        assert abs(ha["l_total"] - hc["l_total"]) <= 1e-6


def test_mesh_fixed_point_stays_put():
    src = icosphere(2, 0.5)
    settings = SoftRasterSettings()
    cams = axis_cameras(64, 0.9, 3)
    views = [ShadowConfiguration(TargetImage(soft_silhouette(src, c, settings), "grayscale"), c) for c in cams]
    out, _ = optimize_mesh(views, src, settings, budget=100)
    assert np.abs(out.vertices - src.vertices).max() <= 1e-2


def test_mesh_objective_gradient_level0(rng):
    src = icosphere(0, 0.5)
    src = src.with_vertices(src.vertices + 0.05 * rng.standard_normal(src.vertices.shape))
    settings = SoftRasterSettings(3e-3, 0.4)
    cams = axis_cameras(16, 0.9, 3)
    views = [ShadowConfiguration(TargetImage((rng.random((16, 16)) > 0.5).astype(float)), c) for c in cams]
    _, grad, _, _ = mesh_objective(src, views, settings, LossWeights())
    rep = gradient_check(lambda x: mesh_objective(src.with_vertices(x), views, settings, LossWeights())[0],
                         grad, src.vertices, eps=1e-6, tolerance=1e-2, rng=0)
    assert rep.passed, rep.max_rel_error


def test_mesh_run_history_and_threads():
    src = icosphere(1, 0.5)
    cams = axis_cameras(24, 0.9, 3)
    targets = [np.zeros((24, 24)) for _ in cams]
    for t in targets:
        t[6:18, 6:18] = 1.0
    views = [ShadowConfiguration(TargetImage(t), c) for t, c in zip(targets, cams)]
    settings = SoftRasterSettings(1e-3, 0.1)
    _, single = optimize_mesh(views, src, settings, budget=10, seed=1)
    _, again = optimize_mesh(views, src, settings, budget=10, seed=1)
    _, multi = optimize_mesh(views, src, settings, budget=10, seed=1, threads=3)
    assert single.history == again.history
    keys = {"iter", "l_img", "l_norm", "l_lap", "l_edge", "l_total", "iou", "dice"}
    assert set(single.history[0]) == keys
    for a, b in zip(single.history, multi.history):
        for k in ("l_img", "l_norm", "l_lap", "l_edge", "l_total"):
            assert abs(a[k] - b[k]) <= 1e-6


def test_non_finite_parameters_abort(monkeypatch):
    import umbra.optim as optim
    cams = axis_cameras(8, 0.85, 1)
    views = [ShadowConfiguration(TargetImage(np.ones((8, 8))), cams[0])]
    monkeypatch.setattr(optim, "image_loss", lambda r, t, w: (0.0, np.full(r.shape, np.nan)))
    with pytest.raises(FloatingPointError):
        optim.optimize_voxel(views, VoxelGrid.filled(4), budget=3)
