"""Carving and optimization against a shape whose silhouettes are known exactly.

Builds a ball-and-bar occupancy, renders its exact axis silhouettes, then
compares the carved visual hull and a voxel optimization from the default
initialization against them.

    python3 scripts/oracle_check.py --resolution 32 --image-size 64
"""
import argparse
import time

import numpy as np

from _common import AXIS_VIEWS
from umbra.geometry import camera_from_view_spec
from umbra.optim import optimize_voxel
from umbra.oracle import BinaryOccupancy, ShadowConfiguration, carve_visual_hull, occupancy_silhouette
from umbra.silhouette import TargetImage, iou
from umbra.voxel import VoxelGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--resolution", type=int, default=32)
    ap.add_argument("--image-size", type=int, default=64)
    ap.add_argument("--extent", type=float, default=1.7)
    ap.add_argument("--budget", type=int, default=500)
    args = ap.parse_args()

    d = args.resolution
    c = (np.arange(d) + 0.5) / d * 2 - 1
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    occ = BinaryOccupancy((x**2 + y**2 + z**2 < 0.6) | ((np.abs(x) < 0.8) & (np.abs(y) < 0.25) & (np.abs(z) < 0.25)),
                          args.extent)
    views = []
    for i, (az, el) in enumerate(AXIS_VIEWS):
        cam = camera_from_view_spec(az, el, 3.0, "orthographic", args.extent / 2, args.image_size, args.image_size)
        views.append(ShadowConfiguration(TargetImage(occupancy_silhouette(occ, cam)), cam, f"axis{i}"))

    hull = carve_visual_hull(views, d, args.extent)
    print("hull contains shape:", bool(np.all(hull.occupied[occ.occupied])))
    print("hull IoU per view:", [round(iou(occupancy_silhouette(hull, v.camera), v.target.values), 4) for v in views])
    t0 = time.perf_counter()
    _, run = optimize_voxel(views, VoxelGrid.filled(d), budget=args.budget)
    print("optimized IoU per view:", np.round(run.history[-1]["iou"], 4), f"({time.perf_counter() - t0:.1f} s)")


if __name__ == "__main__":
    main()
