# tests/conftest.py

"""
Pytest configuration and fixtures
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np
import pytest
from scipy.spatial.transform import Rotation
from scipy.special import ndtr

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.constants import DEFAULT_SYNTH_FX, DEFAULT_SYNTH_FY, DEFAULT_SYNTH_HEIGHT, DEFAULT_SYNTH_WIDTH
from src.schemas.camera_schema import Intrinsics
from src.tools.calib_tools import ReferenceOctagon
from src.tools.octagon_tools import octagon_vertices
from src.tools.raster_tools import Image
from src.tools.synth_tools import CameraPose, SceneRendererTool, SceneRendererToolConfig, SceneSpec, render_scene


@pytest.fixture
def temp_dir():
    """Create a temporary directory for tests"""
    temp_dir = tempfile.mkdtemp()
    yield temp_dir
    shutil.rmtree(temp_dir)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def blurred_step(shape, normal_angle, offset, sigma=1.0, center=None):
    """
    Analytic Gaussian-blurred step: intensity ndtr((n . (p - c) - offset) / sigma)

    The exact edge is the line n . (p - c) = offset.
    """
    h, w = shape
    if center is None:
        center = ((w - 1) / 2.0, (h - 1) / 2.0)
    ys, xs = np.mgrid[0:h, 0:w].astype(np.float64)
    nx, ny = math.cos(normal_angle), math.sin(normal_angle)
    signed = nx * (xs - center[0]) + ny * (ys - center[1]) - offset
    return Image(ndtr(signed / sigma))


@pytest.fixture
def step_image():
    """Factory for analytic blurred steps"""
    return blurred_step


def octagon_contour(circumradius=100.0, center=(200.0, 200.0), per_side=100):
    """Exact points along a regular octagon outline, (8 * per_side, 2)"""
    vertices = octagon_vertices(circumradius) + np.asarray(center)
    steps = np.arange(per_side) / per_side
    a, b = vertices, np.roll(vertices, -1, axis=0)
    return (a[:, None, :] + steps[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)


@pytest.fixture
def exact_octagon():
    """Exact octagon outline and its vertices"""
    return octagon_contour(), octagon_vertices(100.0) + np.array([200.0, 200.0])


@pytest.fixture
def reference_intrinsics():
    return Intrinsics.centered(DEFAULT_SYNTH_FX, DEFAULT_SYNTH_FY, DEFAULT_SYNTH_WIDTH, DEFAULT_SYNTH_HEIGHT)


def tilted_pose(tilt_deg, azimuth_deg=45.0, distance=6.0, dx=0.0, dy=0.0):
    """Target tilted about an in-plane axis at the given azimuth"""
    az = math.radians(azimuth_deg)
    axis = np.array([math.cos(az), math.sin(az), 0.0])
    rotation = Rotation.from_rotvec(math.radians(tilt_deg) * axis).as_matrix()
    return CameraPose(rotation, np.array([dx, dy, distance]))


@pytest.fixture
def pose_factory():
    return tilted_pose


@pytest.fixture(scope="session")
def clean_scene():
    """Noise-free 30 degree view at 6 m"""
    intr = Intrinsics.centered(DEFAULT_SYNTH_FX, DEFAULT_SYNTH_FY, DEFAULT_SYNTH_WIDTH, DEFAULT_SYNTH_HEIGHT)
    spec = SceneSpec(intrinsics=intr, pose=tilted_pose(30.0), octagon=ReferenceOctagon(), contour_noise=0.0)
    return spec, render_scene(spec)


@pytest.fixture(scope="module")
def synth_dataset(tmp_path_factory):
    """Small rendered dataset in the pipeline layout"""
    out = tmp_path_factory.mktemp("synth")
    renderer = SceneRendererTool(SceneRendererToolConfig(contour_noise=0.3, blur=1.0))
    renderer.write_batch(out, n_scenes=6, seed=7)
    return out
