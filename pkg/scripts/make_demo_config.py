"""Write glyph target PNGs and a matching TOML config for the ``umbra`` CLI.

    python3 scripts/make_demo_config.py --dir demo && umbra optimize --config demo/run.toml
"""
import argparse
from pathlib import Path

from umbra.shapes import glyph
from umbra.silhouette import save_image

VIEW_ANGLES = ((0.0, 0.0), (90.0, 0.0), (0.0, 90.0))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--dir", type=Path, default=Path("demo"))
    ap.add_argument("--glyphs", nargs="+", default=["L", "triangle", "disc"])
    ap.add_argument("--pipeline", choices=["voxel", "mesh"], default="voxel")
    ap.add_argument("--size", type=int, default=64)
    ap.add_argument("--resolution", type=int, default=64)
    ap.add_argument("--budget", type=int, default=None)
    args = ap.parse_args()
    if not 1 <= len(args.glyphs) <= 3:
        ap.error("between one and three glyphs")
    args.dir.mkdir(parents=True, exist_ok=True)

    lines = [f'pipeline = "{args.pipeline}"', 'output = "out"', "seed = 0"]
    if args.budget:
        lines.append(f"budget = {args.budget}")
    lines += ["", "[image]", f"width = {args.size}", f"height = {args.size}",
              "", "[grid]", f"resolution = {args.resolution}", "", "[mesh]", "level = 2"]
    for i, (name, (az, el)) in enumerate(zip(args.glyphs, VIEW_ANGLES)):
        # dark shadow on white ground, as a printed target would be
        save_image(1.0 - glyph(name, args.size), args.dir / f"target{i}.png")
        lines += ["", "[[views]]", f'name = "view{i}"', f'image = "target{i}.png"',
                  f"azimuth = {az}", f"elevation = {el}", "invert = true"]
    (args.dir / "run.toml").write_text("\n".join(lines) + "\n")
    print(f"wrote {args.dir / 'run.toml'}")


if __name__ == "__main__":
    main()
