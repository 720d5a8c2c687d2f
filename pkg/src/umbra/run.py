"""End-to-end orchestration: optimize, carve and render runs that write a run directory."""
from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import RunConfig
from .export import read_obj, validate_mesh, write_obj
from .mesh import TriangleMesh, icosphere
from .optim import optimize_mesh, optimize_voxel
from .oracle import ShadowConfiguration, carve_visual_hull, occupancy_silhouette
from .regularizers import normal_consistency_metric
from .silhouette import MetricReport, inconsistency_overlay, save_image
from .softras import hard_silhouette, soft_silhouette
from .voxel import VoxelGrid, extract_blocky_mesh, extract_isosurface, render_silhouette

log = logging.getLogger(__name__)


def save_grid(grid: VoxelGrid, path) -> None:
    np.savez_compressed(path, logits=grid.logits, extent=np.float64(grid.extent))


def load_grid(path) -> VoxelGrid:
    with np.load(path) as data:
        if "logits" not in data or "extent" not in data:
            raise ValueError(f"{path}: expected arrays 'logits' and 'extent'")
        return VoxelGrid(data["logits"].astype(np.float64), float(data["extent"]))


def _mesh_summary(mesh: TriangleMesh) -> dict:
    doc = {"vertices": mesh.n_vertices, "faces": mesh.n_faces, **validate_mesh(mesh).to_dict()}
    try:
        doc["normal_consistency"] = normal_consistency_metric(mesh)
    except ValueError:
        doc["normal_consistency"] = None
    return doc


def write_shadows(out: Path, views: Sequence[ShadowConfiguration], renders, extra=None) -> MetricReport:
    """Shadow PNGs, inconsistency overlays and ``metrics.json``."""
    for v, img in zip(views, renders):
        save_image(img, out / f"shadow_{v.name}.png")
        save_image(inconsistency_overlay(img, v.target.values), out / f"inconsistency_{v.name}.png")
    report = MetricReport.compare(renders, [v.target.values for v in views], [v.name for v in views])
    report.extra.update(extra or {})
    report.write_json(out / "metrics.json")
    return report


def _progress(every: int):
    def cb(it, entry):
        if it % every == 0:
            log.info("iter %d  loss %.6g  mean IoU %.4f", it, entry["l_total"], float(np.mean(entry["iou"])))
    return cb


def run_optimize(cfg: RunConfig, out, threads: int | None = None) -> MetricReport:
    """Optimize the configured pipeline and write every artifact into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    threads = threads or cfg.threads
    views = cfg.shadow_configurations()
    cb = _progress(max(1, cfg.budget // 20))
    extra = {"pipeline": cfg.pipeline, "iterations": cfg.budget, "seed": cfg.seed}

    if cfg.pipeline == "voxel":
        g = cfg.grid
        if g.init_from_carving:
            grid = carve_visual_hull(views, g.resolution, g.extent).to_grid(abs(g.init_logit) + 2.0,
                                                                           -abs(g.init_logit) - 2.0)
        else:
            grid = VoxelGrid.filled(g.resolution, g.init_logit, g.extent)
        settings = cfg.render_settings()
        grid, history = optimize_voxel(views, grid, settings, cfg.weights, cfg.budget, cfg.lr,
                                       cfg.seed, threads, callback=cb)
        final = dataclasses.replace(settings, step_jitter=False)
        renders = [render_silhouette(grid, v.camera, final) for v in views]
        sculpture = extract_isosurface(grid, g.iso)
        blocky = extract_blocky_mesh(grid, g.iso)
        write_obj(blocky, out / "sculpture_blocky.obj")
        save_grid(grid, out / "grid.npz")
        extra["blocky_mesh"] = _mesh_summary(blocky)
    else:
        m = cfg.mesh
        src = icosphere(m.level, m.radius)
        rs = cfg.raster_settings()
        sculpture, history = optimize_mesh(views, src, rs, cfg.weights, cfg.budget, cfg.lr,
                                           cfg.seed, threads, callback=cb,
                                           edge_reduction=m.edge_reduction)
        renders = [soft_silhouette(sculpture, v.camera, rs) for v in views]

    write_obj(sculpture, out / "sculpture.obj")
    mesh_doc = _mesh_summary(sculpture)
    extra["normal_consistency"] = mesh_doc.pop("normal_consistency")
    extra["mesh"] = mesh_doc
    extra["final_loss"] = history.history[-1]["l_total"]
    history.write_jsonl(out / "history.jsonl")
    cfg.write_json(out / "config.json")
    return write_shadows(out, views, renders, extra)


def run_carve(cfg: RunConfig, out) -> MetricReport:
    """Visual hull of the targets, rendered exactly, plus the init render for comparison."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    views = cfg.shadow_configurations()
    g = cfg.grid
    hull = carve_visual_hull(views, g.resolution, g.extent)
    renders = [occupancy_silhouette(hull, v.camera) for v in views]
    init = VoxelGrid.filled(g.resolution, g.init_logit, g.extent)
    settings = cfg.render_settings()
    init_report = MetricReport.compare([render_silhouette(init, v.camera, settings) for v in views],
                                       [v.target.values for v in views])
    blocky = extract_blocky_mesh(hull.to_grid())
    write_obj(blocky, out / "hull.obj")
    save_grid(hull.to_grid(), out / "hull_grid.npz")
    cfg.write_json(out / "config.json")
    extra = {"occupied_voxels": int(hull.occupied.sum()), "init_mean_iou": init_report.mean_iou,
             "mesh": _mesh_summary(blocky)}
    return write_shadows(out, views, renders, extra)


def run_render(cfg: RunConfig, source, out) -> MetricReport:
    """Render an OBJ (hard silhouette) or a saved grid (volumetric) from the config views."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    source = Path(source)
    views = cfg.shadow_configurations()
    if source.suffix.lower() == ".npz":
        grid = load_grid(source)
        renders = [render_silhouette(grid, v.camera, cfg.render_settings()) for v in views]
        extra = {"source": str(source), "kind": "grid"}
    elif source.suffix.lower() == ".obj":
        mesh = read_obj(source)
        renders = [hard_silhouette(mesh, v.camera) for v in views]
        extra = {"source": str(source), "kind": "mesh", "mesh": _mesh_summary(mesh)}
    else:
        raise ValueError(f"{source}: expected a .obj mesh or .npz grid")
    return write_shadows(out, views, renders, extra)

