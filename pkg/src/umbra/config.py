"""Run configuration: TOML schema, validation and defaults.

Example::

    pipeline = "voxel"          # or "mesh"
    budget = 2000
    seed = 0

    [image]
    width = 128
    height = 128

    [[views]]
    name = "front"
    image = "targets/front.png"   # relative to this file
    azimuth = 0.0                 # degrees
    elevation = 0.0               # degrees
    distance = 3.0
    projection = "orthographic"   # or "perspective"
    invert = true                 # dark shadow on light ground

    [grid]
    resolution = 128

    [weights]
    l1 = 10.0

Sections ``[grid]``, ``[mesh]`` and ``[weights]`` are optional; every key
falls back to the defaults below.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .geometry import DEFAULT_ORTHO_EXTENT, PROJECTIONS, camera_from_view_spec
from .optim import LossWeights
from .oracle import ShadowConfiguration
from .silhouette import BINARY, GRAYSCALE, load_target
from .softras import SoftRasterSettings
from .voxel import RenderSettings

PIPELINES = ("voxel", "mesh")
DEFAULT_BUDGET = {"voxel": 2000, "mesh": 500}
DEFAULT_LR = {"voxel": 5e-2, "mesh": 1e-2}


class ConfigError(ValueError):
    pass


@dataclass
class ViewSpec:
    image: Path
    name: str = ""
    azimuth: float = 0.0
    elevation: float = 0.0
    distance: float = 3.0
    projection: str = "orthographic"
    fov_or_extent: float | None = None  # degrees of vertical FOV for perspective, window half-height otherwise
    invert: bool = False
    threshold: float = 0.5
    mode: str = BINARY


@dataclass
class GridConfig:
    resolution: int = 128
    extent: float = 1.7
    init_logit: float = 1.0
    kappa: float | None = None
    samples_per_ray: int | None = None
    step_jitter: bool = False
    iso: float = 0.5
    init_from_carving: bool = False


@dataclass
class MeshConfig:
    level: int = 4
    radius: float = 0.5
    sharpness: float = 1e-4
    cutoff: float = 0.05
    edge_reduction: str = "mean"


@dataclass
class RunConfig:
    pipeline: str
    views: list[ViewSpec]
    width: int = 128
    height: int = 128
    grid: GridConfig = field(default_factory=GridConfig)
    mesh: MeshConfig = field(default_factory=MeshConfig)
    weights: LossWeights = field(default_factory=LossWeights)
    budget: int | None = None
    lr: float | None = None
    seed: int = 0
    threads: int = 1
    output: Path | None = None
    source: Path | None = None

    def __post_init__(self):
        if self.budget is None:
            self.budget = DEFAULT_BUDGET[self.pipeline]
        if self.lr is None:
            self.lr = DEFAULT_LR[self.pipeline]

    def render_settings(self) -> RenderSettings:
        g = self.grid
        return RenderSettings(g.samples_per_ray, g.step_jitter, g.kappa)

    def raster_settings(self) -> SoftRasterSettings:
        return SoftRasterSettings(self.mesh.sharpness, self.mesh.cutoff)

    def cameras(self):
        cams = []
        for v in self.views:
            if v.projection == "perspective":
                fov = math.radians(v.fov_or_extent if v.fov_or_extent is not None else 60.0)
            else:
                fov = v.fov_or_extent if v.fov_or_extent is not None else DEFAULT_ORTHO_EXTENT
            cams.append(camera_from_view_spec(math.radians(v.azimuth), math.radians(v.elevation),
                                              v.distance, v.projection, fov, self.width, self.height))
        return cams

    def shadow_configurations(self) -> list[ShadowConfiguration]:
        out = []
        for v, cam in zip(self.views, self.cameras()):
            target = load_target(v.image, v.threshold, v.mode, v.invert)
            out.append(ShadowConfiguration(target, cam, v.name))
        return out

    def to_dict(self) -> dict:
        def conv(obj):
            if isinstance(obj, Path):
                return str(obj)
            if dataclasses.is_dataclass(obj):
                return {f.name: conv(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
            if isinstance(obj, list):
                return [conv(o) for o in obj]
            return obj
        return conv(self)

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def _typed(where: str, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ConfigError(f"{where}: expected a finite number, got {value!r}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise AssertionError(kind)


_FIELD_TYPES = {
    "float": float, "float | None": float, "int": int, "int | None": int,
    "bool": bool, "str": str, "Path": str, "Path | None": str,
}


def _fill(cls, table, where: str, skip=()):
    if not isinstance(table, dict):
        raise ConfigError(f"{where}: expected a table")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in table.items():
        if key not in known or key in skip:
            raise ConfigError(f"{where}.{key}: unknown key")
        kind = _FIELD_TYPES[known[key].type]
        kwargs[key] = _typed(f"{where}.{key}", value, kind)
    return kwargs


def _check(cond: bool, where: str, msg: str):
    if not cond:
        raise ConfigError(f"{where}: {msg}")


def parse_config(path, pipeline: str | None = None) -> RunConfig:
    """Load and validate a TOML run configuration.

    Image paths are resolved relative to the config file and must exist.
    ``pipeline`` overrides the file's choice before defaults are filled.
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"{path}: no such file") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if pipeline is not None:
        raw["pipeline"] = pipeline
    return config_from_dict(raw, base=path.parent, source=path)


def config_from_dict(raw: dict, base=Path("."), source=None) -> RunConfig:
    base = Path(base)
    top_keys = {"pipeline", "views", "image", "grid", "mesh", "weights",
                "budget", "lr", "seed", "threads", "output"}
    for key in raw:
        if key not in top_keys:
            raise ConfigError(f"{key}: unknown key")
    pipeline = _typed("pipeline", raw.get("pipeline", "voxel"), str)
    _check(pipeline in PIPELINES, "pipeline", f"must be one of {PIPELINES}")

    image = raw.get("image", {})
    _check(isinstance(image, dict), "image", "expected a table")
    for key in image:
        _check(key in ("width", "height"), f"image.{key}", "unknown key")
    width = _typed("image.width", image.get("width", 128), int)
    height = _typed("image.height", image.get("height", 128), int)
    _check(width >= 1 and height >= 1, "image", "dimensions must be >= 1")

    views_raw = raw.get("views", [])
    _check(isinstance(views_raw, list), "views", "expected an array of tables")
    _check(len(views_raw) >= 1, "views", "at least one view is required")
    views = []
    for i, table in enumerate(views_raw):
        where = f"views[{i}]"
        kw = _fill(ViewSpec, table, where)
        _check("image" in kw, where, "missing required key 'image'")
        img = Path(kw["image"])
        kw["image"] = img if img.is_absolute() else base / img
        _check(kw["image"].is_file(), f"{where}.image", f"file not found: {kw['image']}")
        kw.setdefault("name", kw["image"].stem)
        spec = ViewSpec(**kw)
        _check(spec.projection in PROJECTIONS, f"{where}.projection", f"must be one of {PROJECTIONS}")
        _check(spec.mode in (BINARY, GRAYSCALE), f"{where}.mode", "must be 'binary' or 'grayscale'")
        _check(spec.distance > 0, f"{where}.distance", "must be positive")
        _check(0 < spec.threshold < 1, f"{where}.threshold", "must lie in (0, 1)")
        if spec.fov_or_extent is not None:
            _check(spec.fov_or_extent > 0, f"{where}.fov_or_extent", "must be positive")
            if spec.projection == "perspective":
                _check(spec.fov_or_extent < 180, f"{where}.fov_or_extent", "field of view must be < 180 degrees")
        views.append(spec)
    names = [v.name for v in views]
    _check(len(set(names)) == len(names), "views", "view names must be unique")

    grid = GridConfig(**_fill(GridConfig, raw.get("grid", {}), "grid"))
    _check(grid.resolution >= 2, "grid.resolution", "must be >= 2")
    _check(grid.extent > 0, "grid.extent", "must be positive")
    _check(0 < grid.iso < 1, "grid.iso", "must lie in (0, 1)")
    _check(grid.kappa is None or grid.kappa > 0, "grid.kappa", "must be positive")
    _check(grid.samples_per_ray is None or grid.samples_per_ray >= 2, "grid.samples_per_ray", "must be >= 2")

    mesh = MeshConfig(**_fill(MeshConfig, raw.get("mesh", {}), "mesh"))
    _check(mesh.level >= 0, "mesh.level", "must be >= 0")
    _check(mesh.radius > 0, "mesh.radius", "must be positive")
    _check(mesh.sharpness > 0, "mesh.sharpness", "must be positive")
    _check(mesh.cutoff > 0, "mesh.cutoff", "must be positive")
    _check(mesh.edge_reduction in ("sum", "mean"), "mesh.edge_reduction", "must be 'sum' or 'mean'")

    wtable = raw.get("weights", {})
    _check(isinstance(wtable, dict), "weights", "expected a table")
    wkw = {}
    for key, value in wtable.items():
        _check(key in {f.name for f in dataclasses.fields(LossWeights)}, f"weights.{key}", "unknown key")
        wkw[key] = _typed(f"weights.{key}", value, float)
        _check(wkw[key] >= 0, f"weights.{key}", "must be >= 0")
    weights = LossWeights(**wkw)

    budget = raw.get("budget")
    if budget is not None:
        budget = _typed("budget", budget, int)
        _check(budget >= 1, "budget", "must be >= 1")
    lr = raw.get("lr")
    if lr is not None:
        lr = _typed("lr", lr, float)
        _check(lr > 0, "lr", "must be positive")
    seed = _typed("seed", raw.get("seed", 0), int)
    threads = _typed("threads", raw.get("threads", 1), int)
    _check(threads >= 1, "threads", "must be >= 1")
    output = raw.get("output")
    if output is not None:
        output = Path(_typed("output", output, str))
        output = output if output.is_absolute() else base / output

    return RunConfig(pipeline, views, width, height, grid, mesh, weights, budget, lr, seed,
                     threads, output, source)
