"""Loss assembly, Adam updates and the two shape-optimization loops."""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

import numpy as np

from . import regularizers as reg
from .mesh import TriangleMesh, deform
from .oracle import ShadowConfiguration, fd_gradient
from .silhouette import dice, iou
from .softras import SoftRasterPass, SoftRasterSettings
from .voxel import RenderSettings, VolumeProjector, VoxelGrid, densities

log = logging.getLogger(__name__)


@dataclass
class LossWeights:
    l1: float = 10.0     # image L1 term
    l2: float = 10.0     # image L2 term
    img: float = 1.6
    norm: float = 2.1
    lap: float = 0.9
    edge: float = 1.8

    def __post_init__(self):
        for name, val in vars(self).items():
            if not val >= 0:
                raise ValueError(f"loss weight {name} must be >= 0, got {val}")


def image_loss(rendered, target, weights: LossWeights = LossWeights()):
    """Weighted mean L1 + mean squared error; returns ``(value, d value / d rendered)``."""
    r = np.asarray(rendered, dtype=np.float64)
    t = getattr(target, "values", target)
    t = np.asarray(t, dtype=np.float64)
    if r.shape != t.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {t.shape}")
    diff = r - t
    n = diff.size
    value = weights.l1 * np.abs(diff).sum() / n + weights.l2 * (diff * diff).sum() / n
    grad = (weights.l1 * np.sign(diff) + 2.0 * weights.l2 * diff) / n
    return float(value), grad


def total_mesh_loss(l_img: float, l_norm: float, l_lap: float, l_edge: float,
                    weights: LossWeights = LossWeights()) -> float:
    return (weights.img * l_img + weights.norm * l_norm
            + weights.lap * l_lap + weights.edge * l_edge)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params, lr: float = 1e-3, **kw) -> "AdamState":
        p = np.asarray(params, dtype=np.float64)
        return cls(np.zeros_like(p), np.zeros_like(p), 0, lr, **kw)


def adam_step(params, grads, state: AdamState):
    """One bias-corrected Adam update; returns ``(new_params, state)``.

    The state's moment buffers are updated in place.
    """
    p = np.asarray(params, dtype=np.float64)
    g = np.asarray(grads, dtype=np.float64)
    if p.shape != g.shape or state.m.shape != p.shape:
        raise ValueError(f"shape mismatch: params {p.shape}, grads {g.shape}, state {state.m.shape}")
    if not np.all(np.isfinite(g)):
        bad = np.flatnonzero(~np.isfinite(g.ravel()))
        raise FloatingPointError(
            f"non-finite gradient at step {state.step + 1}: {len(bad)} entries, first at flat index {bad[0]}")
    state.step += 1
    state.m *= state.beta1
    state.m += (1.0 - state.beta1) * g
    state.v *= state.beta2
    state.v += (1.0 - state.beta2) * g * g
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    return p - state.lr * m_hat / (np.sqrt(v_hat) + state.eps), state


@dataclass
class OptimizationRun:
    budget: int
    seed: int = 0
    snapshot_every: int = 0
    history: list[dict] = field(default_factory=list)
    snapshots: list[tuple[int, np.ndarray]] = field(default_factory=list)

    def record(self, **entry) -> None:
        if len(self.history) >= self.budget:
            raise RuntimeError("history exceeds iteration budget")
        self.history.append(entry)

    def losses(self, key: str = "l_total") -> np.ndarray:
        return np.array([h[key] for h in self.history])

    def write_jsonl(self, path) -> None:
        with open(path, "w") as fh:
            for h in self.history:
                fh.write(json.dumps(h) + "\n")


def _map_views(fn, views, threads: int):
    if threads > 1 and len(views) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, views))
    return [fn(v) for v in views]


def _check_finite(params: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(params)):
        raise FloatingPointError(f"{what} became non-finite")


def optimize_voxel(views: Sequence[ShadowConfiguration], grid: VoxelGrid,
                   settings: RenderSettings = RenderSettings(),
                   weights: LossWeights = LossWeights(), budget: int = 2000, lr: float = 5e-2,
                   seed: int = 0, threads: int = 1, snapshot_every: int = 0,
                   callback: Callable[[int, dict], None] | None = None):
    """Fit the grid's logits so its volumetric silhouettes match every view.

    The loss is the image loss summed over views, with all views rendered at
    every iteration.  Returns the optimized grid and the run record.
    """
    if not views:
        raise ValueError("need at least one view")
    rng = np.random.default_rng(seed)
    run = OptimizationRun(budget, seed, snapshot_every)
    logits = grid.logits.copy()
    state = AdamState.zeros_like(logits, lr=lr)
    projectors = None
    if not settings.step_jitter:
        projectors = [VolumeProjector(v.camera, grid.resolution, grid.extent, settings)
                      for v in views]
    targets = [v.target.values for v in views]

    def evaluate(logits):
        dens = densities(VoxelGrid(logits, grid.extent))
        if projectors is None:
            # one child generator per view keeps jitter reproducible under threading
            seeds = rng.integers(0, 2**63, size=len(views))
            projs = [VolumeProjector(v.camera, grid.resolution, grid.extent, settings,
                                     np.random.default_rng(s)) for v, s in zip(views, seeds)]
        else:
            projs = projectors

        def one(k):
            img = projs[k].render(dens)
            loss, up = image_loss(img, targets[k], weights)
            g = projs[k].backward_density(dens, up)
            return img, loss, g

        out = _map_views(one, range(len(views)), threads)
        grad = np.zeros_like(logits)
        for _, _, g in out:
            grad += g
        grad *= dens * (1.0 - dens)
        return [o[0] for o in out], sum(o[1] for o in out), grad

    for it in range(budget):
        images, l_img, grad = evaluate(logits)
        entry = {"iter": it, "l_img": l_img, "l_norm": 0.0, "l_lap": 0.0, "l_edge": 0.0,
                 "l_total": l_img,
                 "iou": [iou(im, t) for im, t in zip(images, targets)],
                 "dice": [dice(im, t) for im, t in zip(images, targets)]}
        run.record(**entry)
        if callback:
            callback(it, entry)
        if snapshot_every and it % snapshot_every == 0:
            run.snapshots.append((it, logits.copy()))
        logits, state = adam_step(logits, grad, state)
        _check_finite(logits, "voxel logits")
    return VoxelGrid(logits, grid.extent, grid.fixed_color), run


def mesh_objective(mesh: TriangleMesh, views: Sequence[ShadowConfiguration],
                   settings: SoftRasterSettings, weights: LossWeights, threads: int = 1,
                   edge_reduction: str = "mean"):
    """Total mesh loss, its vertex gradient, the per-view renders and the components."""
    targets = [v.target.values for v in views]

    def one(k):
        rp = SoftRasterPass(mesh, views[k].camera, settings)
        loss, up = image_loss(rp.image, targets[k], weights)
        return rp.image, loss, rp.backward(up)

    out = _map_views(one, range(len(views)), threads)
    l_img = sum(o[1] for o in out)
    g_img = np.zeros_like(mesh.vertices)
    for _, _, g in out:
        g_img += g
    grad = weights.img * g_img
    parts = {"l_img": l_img, "l_norm": 0.0, "l_lap": 0.0, "l_edge": 0.0}
    for key, fn, w in (("l_norm", reg.normal_consistency_loss, weights.norm),
                       ("l_lap", reg.laplacian_loss, weights.lap),
                       ("l_edge", partial(reg.edge_length_loss, reduction=edge_reduction),
                        weights.edge)):
        val, g = fn(mesh)
        parts[key] = val
        grad += w * g
    total = total_mesh_loss(parts["l_img"], parts["l_norm"], parts["l_lap"], parts["l_edge"], weights)
    return total, grad, [o[0] for o in out], parts


def optimize_mesh(views: Sequence[ShadowConfiguration], src: TriangleMesh,
                  settings: SoftRasterSettings = SoftRasterSettings(),
                  weights: LossWeights = LossWeights(), budget: int = 500, lr: float = 1e-2,
                  seed: int = 0, threads: int = 1, snapshot_every: int = 0,
                  callback: Callable[[int, dict], None] | None = None,
                  edge_reduction: str = "mean"):
    """Learn per-vertex displacements of ``src`` minimizing the weighted mesh loss.

    ``edge_reduction="sum"`` uses the edge term exactly as the double sum; the
    default averages it so it cannot outweigh the image term on fine meshes.
    """
    if not views:
        raise ValueError("need at least one view")
    run = OptimizationRun(budget, seed, snapshot_every)
    disp = np.zeros_like(src.vertices)
    state = AdamState.zeros_like(disp, lr=lr)
    targets = [v.target.values for v in views]
    for it in range(budget):
        mesh = deform(src, disp)
        total, grad, images, parts = mesh_objective(mesh, views, settings, weights, threads,
                                                    edge_reduction)
        entry = {"iter": it, **parts, "l_total": total,
                 "iou": [iou(im, t) for im, t in zip(images, targets)],
                 "dice": [dice(im, t) for im, t in zip(images, targets)]}
        run.record(**entry)
        if callback:
            callback(it, entry)
        if snapshot_every and it % snapshot_every == 0:
            run.snapshots.append((it, disp.copy()))
        disp, state = adam_step(disp, grad, state)
        _check_finite(disp, "vertex displacements")
    return deform(src, disp), run


@dataclass
class GradCheckReport:
    max_rel_error: float
    mean_rel_error: float
    failing: np.ndarray
    checked: np.ndarray
    passed: bool


def gradient_check(f: Callable[[np.ndarray], float], analytic, params, eps: float = 1e-6,
                   tolerance: float = 1e-4, n_coords: int = 64, rng=None,
                   rel_floor: float = 1e-6, skip=None) -> GradCheckReport:
    """Compare an analytic gradient against central differences.

    The relative error of coordinate ``i`` is
    ``|a_i - n_i| / max(|a_i|, |n_i|, rel_floor * max|n|)``; the floor keeps
    near-zero entries from dominating.  At least 64 coordinates (or all, if
    fewer) are sampled.  ``skip(i)`` may veto coordinates at known kinks.
    """
    x = np.asarray(params, dtype=np.float64)
    a = np.asarray(analytic, dtype=np.float64).reshape(-1)
    rng = np.random.default_rng(rng)
    n = x.size
    k = min(n, max(64, n_coords))
    idx = np.sort(rng.choice(n, size=k, replace=False)) if k < n else np.arange(n)
    if skip is not None:
        idx = np.array([i for i in idx if not skip(i)], dtype=np.int64)
    num = fd_gradient(f, x, eps, indices=idx)
    ai = a[idx]
    floor = rel_floor * max(np.abs(num).max(initial=0.0), np.abs(ai).max(initial=0.0)) + 1e-300
    rel = np.abs(ai - num) / np.maximum(np.maximum(np.abs(ai), np.abs(num)), floor)
    failing = idx[rel > tolerance]
    return GradCheckReport(float(rel.max(initial=0.0)), float(rel.mean()) if len(rel) else 0.0,
                           failing, idx, len(failing) == 0)
