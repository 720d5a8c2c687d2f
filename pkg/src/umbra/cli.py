"""Command-line entry point: ``umbra {optimize,carve,render,metrics,export}``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .config import PIPELINES, ConfigError, parse_config
from .export import validate_mesh, write_obj
from .run import load_grid, run_carve, run_optimize, run_render
from .silhouette import MetricReport, load_target
from .voxel import extract_blocky_mesh, extract_isosurface

log = logging.getLogger("umbra")


def resolve_threads(flag: int | None, default: int = 1) -> int:
    """``--threads`` wins, then ``UMBRA_THREADS``, then the config value."""
    if flag is not None:
        n = flag
    elif os.environ.get("UMBRA_THREADS"):
        try:
            n = int(os.environ["UMBRA_THREADS"])
        except ValueError:
            raise ConfigError(f"UMBRA_THREADS: expected an integer, got {os.environ['UMBRA_THREADS']!r}") from None
    else:
        n = default
    if n < 1:
        raise ConfigError(f"threads must be >= 1, got {n}")
    return n


def _load(args):
    cfg = parse_config(args.config, pipeline=getattr(args, "pipeline", None))
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    cfg.threads = resolve_threads(getattr(args, "threads", None), cfg.threads)
    out = args.output or cfg.output
    if out is None:
        raise ConfigError("no output directory: pass --output or set 'output' in the config")
    return cfg, Path(out)


def _summary(report: MetricReport) -> str:
    rows = [f"  {v.name:<16} IoU {v.iou:.4f}  Dice {v.dice:.4f}" for v in report.views]
    rows.append(f"  {'mean':<16} IoU {report.mean_iou:.4f}  Dice {report.mean_dice:.4f}")
    return "\n".join(rows)


def cmd_optimize(args) -> int:
    cfg, out = _load(args)
    report = run_optimize(cfg, out, cfg.threads)
    print(f"wrote {out}\n{_summary(report)}")
    return 0


def cmd_carve(args) -> int:
    cfg, out = _load(args)
    report = run_carve(cfg, out)
    print(f"wrote {out}\n{_summary(report)}")
    return 0


def cmd_render(args) -> int:
    cfg, out = _load(args)
    report = run_render(cfg, args.input, out)
    print(f"wrote {out}\n{_summary(report)}")
    return 0


def _image_set(path: Path) -> dict[str, Path]:
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff"))
        return {p.name: p for p in files}
    if path.is_file():
        return {path.name: path}
    raise FileNotFoundError(f"{path}: no such file or directory")


def cmd_metrics(args) -> int:
    rendered = _image_set(Path(args.rendered))
    targets = _image_set(Path(args.targets))
    if Path(args.rendered).is_file() and Path(args.targets).is_file():
        pairs = [(next(iter(rendered.values())), next(iter(targets.values())))]
    else:
        common = sorted(set(rendered) & set(targets))
        if not common:
            raise ValueError("no file names in common between the two image sets")
        pairs = [(rendered[n], targets[n]) for n in common]
    r_imgs, t_imgs, names = [], [], []
    for rp, tp in pairs:
        r = load_target(rp, args.threshold, "grayscale")
        t = load_target(tp, args.threshold, "grayscale", args.invert_targets)
        if r.values.shape != t.values.shape:
            raise ValueError(f"dimension mismatch: {rp} {r.values.shape} vs {tp} {t.values.shape}")
        r_imgs.append(r.values)
        t_imgs.append(t.values)
        names.append(Path(rp).stem)
    report = MetricReport.compare(r_imgs, t_imgs, names, args.threshold)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        report.write_json(args.output)
    print(json.dumps(report.to_dict(), indent=2))
    return 0


def cmd_export(args) -> int:
    grid = load_grid(args.grid)
    mesh = (extract_blocky_mesh if args.method == "blocky" else extract_isosurface)(grid, args.iso)
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_obj(mesh, out)
    rep = validate_mesh(mesh)
    print(f"wrote {out}: {mesh.n_vertices} vertices, {mesh.n_faces} faces, "
          f"watertight={rep.watertight}, consistent_orientation={rep.consistent_orientation}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="umbra", description="Multi-view shadow sculpture optimization.")
    p.add_argument("-v", "--verbose", action="store_true", help="log optimization progress")
    sub = p.add_subparsers(dest="command", required=True)

    def run_flags(sp, pipeline: bool = True, seed: bool = True):
        sp.add_argument("--config", required=True, type=Path, help="TOML run configuration")
        sp.add_argument("--output", type=Path, help="output directory (overrides config)")
        sp.add_argument("--threads", type=int, help="worker threads (fallback: $UMBRA_THREADS)")
        if seed:
            sp.add_argument("--seed", type=int)
        if pipeline:
            sp.add_argument("--pipeline", choices=PIPELINES)

    sp = sub.add_parser("optimize", help="optimize a sculpture and write the run directory")
    run_flags(sp)
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("carve", help="visual-hull baseline from the config views")
    run_flags(sp, pipeline=False, seed=False)
    sp.set_defaults(func=cmd_carve)

    sp = sub.add_parser("render", help="render an existing OBJ or grid from the config views")
    run_flags(sp, pipeline=False, seed=False)
    sp.add_argument("--input", required=True, type=Path, help=".obj mesh or .npz grid")
    sp.set_defaults(func=cmd_render)

    sp = sub.add_parser("metrics", help="IoU/Dice between two image sets (matched by file name)")
    sp.add_argument("rendered", help="image file or directory")
    sp.add_argument("targets", help="image file or directory")
    sp.add_argument("--threshold", type=float, default=0.5)
    sp.add_argument("--invert-targets", action="store_true", help="targets are dark-on-light")
    sp.add_argument("--output", type=Path, help="write metrics JSON here")
    sp.set_defaults(func=cmd_metrics)

    sp = sub.add_parser("export", help="convert a saved grid to OBJ")
    sp.add_argument("--grid", required=True, type=Path)
    sp.add_argument("--output", required=True, type=Path, help="OBJ path")
    sp.add_argument("--iso", type=float, default=0.5)
    sp.add_argument("--method", choices=("isosurface", "blocky"), default="isosurface")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError, OSError, FloatingPointError) as exc:
        print(f"umbra: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
