"""Voxel shadow art: one sculpture casting three glyph shadows along the axes.

    python3 scripts/shadow_art.py --glyphs L triangle disc --out runs/shadow_art
"""
import argparse
import logging
import time
from pathlib import Path

import numpy as np

from _common import dump, glyph_views, smoothed
from umbra.export import validate_mesh, write_obj
from umbra.optim import optimize_voxel
from umbra.run import save_grid, write_shadows
from umbra.voxel import RenderSettings, VoxelGrid, extract_blocky_mesh, extract_isosurface, render_silhouette


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--glyphs", nargs=3, default=["L", "triangle", "disc"])
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--image-size", type=int, default=64)
    ap.add_argument("--budget", type=int, default=2000)
    ap.add_argument("--lr", type=float, default=5e-2)
    ap.add_argument("--kappa", type=float, default=None, help="opacity scale (default: renderer default)")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", type=Path, default=Path("runs/shadow_art"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out.mkdir(parents=True, exist_ok=True)

    views = glyph_views(args.glyphs, args.image_size)
    settings = RenderSettings(opacity_scale=args.kappa)
    t0 = time.perf_counter()
    grid, run = optimize_voxel(views, VoxelGrid.filled(args.resolution), settings, budget=args.budget,
                               lr=args.lr, threads=args.threads,
                               callback=lambda i, e: i % 100 or logging.info("iter %4d  loss %.4f  IoU %s", i,
                                                                             e["l_total"], np.round(e["iou"], 3)))
    secs = time.perf_counter() - t0

    renders = [render_silhouette(grid, v.camera, settings) for v in views]
    iso, blocky = extract_isosurface(grid), extract_blocky_mesh(grid)
    write_obj(iso, args.out / "sculpture.obj")
    write_obj(blocky, args.out / "sculpture_blocky.obj")
    save_grid(grid, args.out / "grid.npz")
    run.write_jsonl(args.out / "history.jsonl")
    steps = np.diff(smoothed(run.losses()))
    report = write_shadows(args.out, views, renders, {
        "seconds": secs, "max_smoothed_loss_step": float(steps.max()) if len(steps) else 0.0,
        "blocky_mesh": validate_mesh(blocky).to_dict()})
    dump(report.to_dict(), args.out / "metrics.json")
    print(f"mean IoU {report.mean_iou:.4f}  mean Dice {report.mean_dice:.4f}  ({secs:.1f} s) -> {args.out}")


if __name__ == "__main__":
    main()
