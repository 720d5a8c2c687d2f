"""Regularizer ablation on the mesh pipeline.

Runs the full loss and three variants, each with one smoothness term removed,
and reports the statistic each term is meant to control.

    python3 scripts/ablation.py --glyphs L T + --out runs/ablation
"""
import argparse
import time
from pathlib import Path

import numpy as np

from _common import dump, glyph_views
from umbra import regularizers as reg
from umbra.export import write_obj
from umbra.mesh import icosphere
from umbra.optim import LossWeights, optimize_mesh
from umbra.softras import SoftRasterSettings

VARIANTS = {"full": {}, "no_edge": {"edge": 0.0}, "no_lap": {"lap": 0.0}, "no_norm": {"norm": 0.0}}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--glyphs", nargs=3, default=["L", "T", "+"])
    ap.add_argument("--level", type=int, default=2)
    ap.add_argument("--image-size", type=int, default=64)
    ap.add_argument("--budget", type=int, default=500)
    ap.add_argument("--out", type=Path, default=Path("runs/ablation"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    views = glyph_views(args.glyphs, args.image_size)
    settings = SoftRasterSettings(1e-4, 0.05)
    rows = {}
    print(f"{'variant':<8} {'max edge':>9} {'mean |lap|':>11} {'normal cons.':>13} {'mean IoU':>9} {'secs':>6}")
    for name, overrides in VARIANTS.items():
        t0 = time.perf_counter()
        mesh, run = optimize_mesh(views, icosphere(args.level, 0.5), settings, LossWeights(**overrides),
                                  budget=args.budget)
        write_obj(mesh, args.out / f"{name}.obj")
        rows[name] = {"max_edge": mesh.edge_lengths().max(),
                      "mean_laplacian": np.linalg.norm(reg.laplacian_vectors(mesh), axis=1).mean(),
                      "normal_consistency": reg.normal_consistency_metric(mesh),
                      "mean_iou": float(np.mean(run.history[-1]["iou"])),
                      "seconds": time.perf_counter() - t0}
        r = rows[name]
        print(f"{name:<8} {r['max_edge']:9.4f} {r['mean_laplacian']:11.4f} {r['normal_consistency']:13.4f} "
              f"{r['mean_iou']:9.4f} {r['seconds']:6.1f}")
    full = rows["full"]
    rows["ratios"] = {"edge": float(rows["no_edge"]["max_edge"] / full["max_edge"]),
                      "laplacian": float(rows["no_lap"]["mean_laplacian"] / full["mean_laplacian"]),
                      "normal": full["normal_consistency"] / rows["no_norm"]["normal_consistency"]}
    print("ratios (>1 means the term helps):", {k: round(v, 3) for k, v in rows["ratios"].items()})
    dump(rows, args.out / "ablation.json")


if __name__ == "__main__":
    main()
