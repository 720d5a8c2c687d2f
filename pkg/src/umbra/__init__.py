"""Differentiable shadow sculpting from multiple target silhouettes."""
from .config import ConfigError, RunConfig, parse_config
from .export import MeshReport, read_obj, validate_mesh, write_obj
from .geometry import Camera, Ray, camera_from_view_spec, look_at, pixel_ray
from .mesh import TriangleMesh, deform, icosphere
from .optim import (AdamState, GradCheckReport, LossWeights, OptimizationRun, adam_step,
                    gradient_check, image_loss, optimize_mesh, optimize_voxel, total_mesh_loss)
from .oracle import (BinaryOccupancy, ShadowConfiguration, carve_visual_hull, fd_gradient,
                     occupancy_silhouette)
from .regularizers import (edge_length_loss, laplacian_loss, normal_consistency_loss,
                           normal_consistency_metric)
from .silhouette import MetricReport, TargetImage, dice, inconsistency_overlay, iou, load_target
from .softras import SoftRasterSettings, hard_silhouette, soft_silhouette, soft_silhouette_backward
from .voxel import (RenderSettings, VolumeProjector, VoxelGrid, extract_blocky_mesh,
                    extract_isosurface, render_silhouette, render_silhouette_backward)

__version__ = "0.1.0"

__all__ = [
    "AdamState",
    "BinaryOccupancy",
    "Camera",
    "ConfigError",
    "GradCheckReport",
    "LossWeights",
    "MeshReport",
    "MetricReport",
    "OptimizationRun",
    "Ray",
    "RenderSettings",
    "RunConfig",
    "ShadowConfiguration",
    "SoftRasterSettings",
    "TargetImage",
    "TriangleMesh",
    "VolumeProjector",
    "VoxelGrid",
    "adam_step",
    "camera_from_view_spec",
    "carve_visual_hull",
    "deform",
    "dice",
    "edge_length_loss",
    "extract_blocky_mesh",
    "extract_isosurface",
    "fd_gradient",
    "gradient_check",
    "hard_silhouette",
    "icosphere",
    "image_loss",
    "inconsistency_overlay",
    "iou",
    "laplacian_loss",
    "load_target",
    "look_at",
    "normal_consistency_loss",
    "normal_consistency_metric",
    "occupancy_silhouette",
    "optimize_mesh",
    "optimize_voxel",
    "parse_config",
    "pixel_ray",
    "read_obj",
    "render_silhouette",
    "render_silhouette_backward",
    "soft_silhouette",
    "soft_silhouette_backward",
    "total_mesh_loss",
    "validate_mesh",
    "write_obj",
]
