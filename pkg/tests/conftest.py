import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from umbra.geometry import camera_from_view_spec
from umbra.oracle import BinaryOccupancy, ShadowConfiguration, occupancy_silhouette
from umbra.silhouette import TargetImage

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# azimuth, elevation of the three axis-aligned views (+x, +y, +z)
AXIS_VIEWS = ((0.0, 0.0), (math.pi / 2, 0.0), (0.0, math.pi / 2))


def axis_cameras(size, window, n_views=3, projection="orthographic", distance=3.0):
    return [camera_from_view_spec(az, el, distance, projection, window, size, size)
            for az, el in AXIS_VIEWS[:n_views]]


def blob_occupancy(resolution, extent=1.7):
    """Off-center ball joined to a bar: nonconvex, distinct silhouettes per axis."""
    c = -extent / 2 + (np.arange(resolution) + 0.5) * extent / resolution
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    ball = (x - 0.1) ** 2 + y ** 2 + (z + 0.1) ** 2 < 0.35 ** 2
    bar = (np.abs(x + 0.2) < 0.12) & (np.abs(y - 0.1) < 0.45) & (np.abs(z) < 0.15)
    return BinaryOccupancy(ball | bar, extent)


def frame_occupancy(resolution, extent=1.7):
    """Ball crossed by a bar, filling about half of each axis view."""
    c = (np.arange(resolution) + 0.5) / resolution * 2 - 1
    x, y, z = np.meshgrid(c, c, c, indexing="ij")
    ball = x**2 + y**2 + z**2 < 0.6
    bar = (np.abs(x) < 0.8) & (np.abs(y) < 0.25) & (np.abs(z) < 0.25)
    return BinaryOccupancy(ball | bar, extent)


def exact_views(occ, size, n_views=3):
    """Targets that are exact silhouettes of ``occ`` at matched resolution."""
    cams = axis_cameras(size, occ.extent / 2, n_views)
    return [ShadowConfiguration(TargetImage(occupancy_silhouette(occ, c)), c, f"v{i}")
            for i, c in enumerate(cams)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# --- acceptance summary -------------------------------------------------------

ACCEPTANCE = []


def record_acceptance(name: str, passed: bool, detail: str, seconds: float) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {name}: {detail} ({seconds:.1f} s)"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
