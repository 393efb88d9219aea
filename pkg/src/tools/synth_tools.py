# src/tools/synth_tools.py

"""
Synthetic octagonal-target scenes rendered from known intrinsics and poses.
Used as the ground-truth oracle for tests and for dogfooding the pipeline
through the same PNG + JSON layout it ingests.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import Field
from scipy.ndimage import gaussian_filter
from scipy.spatial.transform import Rotation

from src.config.constants import (
    DEFAULT_BORDER_RATIO,
    DEFAULT_CAMERA_ID,
    DEFAULT_DETECTIONS_FILE,
    DEFAULT_OCTAGON_WIDTH_M,
    DEFAULT_SYNTH_AZIMUTH_MARGIN_DEG,
    DEFAULT_SYNTH_BLUR,
    DEFAULT_SYNTH_CONTOUR_NOISE,
    DEFAULT_SYNTH_DISTANCE_MAX_M,
    DEFAULT_SYNTH_DISTANCE_MIN_M,
    DEFAULT_SYNTH_EXPOSURE,
    DEFAULT_SYNTH_FX,
    DEFAULT_SYNTH_FY,
    DEFAULT_SYNTH_HEIGHT,
    DEFAULT_SYNTH_LATERAL_M,
    DEFAULT_SYNTH_MIN_TILT_DEG,
    DEFAULT_SYNTH_SUPERSAMPLING,
    DEFAULT_SYNTH_TILT_MAX_DEG,
    DEFAULT_SYNTH_TILT_MIN_DEG,
    DEFAULT_SYNTH_WIDTH,
    DEFAULT_TRUTH_FILE,
    SYNTH_BACKGROUND,
    SYNTH_RED,
    SYNTH_WHITE,
)
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import SynthError
from src.schemas.camera_schema import Intrinsics
from src.schemas.detection_schema import BoundingBox
from src.tools.calib_tools import Homography, ReferenceOctagon
from src.tools.octagon_tools import OctagonCorners, order_corners
from src.tools.raster_tools import Image, save_png

logger = logging.getLogger(__name__)

ORTHO_TOL = 1e-10
CONTOUR_SAMPLES_PER_SIDE = 100
HALF_DIAGONAL = math.sqrt(0.5) + 1e-9


@dataclass(frozen=True)
class CameraPose:
    """World-to-camera transform X_cam = R X_world + t (meters)"""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), atol=ORTHO_TOL, rtol=0.0):
            raise SynthError("rotation is not orthonormal")
        if np.linalg.det(R) <= 0:
            raise SynthError("rotation must have determinant +1")
        if t[2] <= 0:
            raise SynthError(f"target center must lie in front of the camera, got depth {t[2]}")
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def fronto_parallel(cls, distance: float, dx: float = 0.0, dy: float = 0.0) -> "CameraPose":
        return cls(np.eye(3), np.array([dx, dy, distance]))

    @property
    def tilt_deg(self) -> float:
        """Angle between the target normal and the optical axis"""
        return float(np.degrees(np.arccos(np.clip(abs(self.rotation[2, 2]), 0.0, 1.0))))


@dataclass(frozen=True)
class SceneSpec:
    intrinsics: Intrinsics
    pose: CameraPose
    octagon: ReferenceOctagon = field(default_factory=ReferenceOctagon)
    width: int = DEFAULT_SYNTH_WIDTH
    height: int = DEFAULT_SYNTH_HEIGHT
    contour_noise: float = 0.0  # px, jitter of the rendered vertices
    blur: float = DEFAULT_SYNTH_BLUR  # px
    exposure: float = DEFAULT_SYNTH_EXPOSURE
    supersampling: int = DEFAULT_SYNTH_SUPERSAMPLING
    occlusion_fraction: float = 0.0  # bottom share of the target hidden
    perturb_vertex: Optional[int] = None
    perturb_fraction: float = 0.0  # radial push, in mean side lengths
    seed: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise SynthError(f"invalid frame size {self.width}x{self.height}")
        if self.contour_noise < 0 or self.blur < 0:
            raise SynthError("noise and blur must be non-negative")
        if self.exposure <= 0:
            raise SynthError(f"exposure must be positive, got {self.exposure}")
        if self.supersampling < 1:
            raise SynthError(f"supersampling must be >= 1, got {self.supersampling}")
        if not 0.0 <= self.occlusion_fraction < 1.0:
            raise SynthError(f"occlusion_fraction must be in [0, 1), got {self.occlusion_fraction}")
        if self.perturb_vertex is not None and not 0 <= self.perturb_vertex < 8:
            raise SynthError(f"perturb_vertex must be in 0..7, got {self.perturb_vertex}")


@dataclass(frozen=True)
class RenderedScene:
    image: Image
    corners: OctagonCorners  # exact projected corners of the red octagon, ordered
    contour: np.ndarray  # dense exact samples of the red octagon outline
    box: BoundingBox  # tight box around the white border
    homography: Homography
    tilt_deg: float


def project_points(points: np.ndarray, intr: Intrinsics, pose: CameraPose) -> np.ndarray:
    """Pinhole projection of (N, 3) world points (or (N, 2) plane points at Z = 0)"""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[None, :]
    if pts.shape[1] == 2:
        pts = np.hstack([pts, np.zeros((len(pts), 1))])
    cam = pts @ pose.rotation.T + pose.translation
    depth = cam[:, 2]
    if np.any(depth <= 0):
        raise SynthError(f"{int(np.sum(depth <= 0))} point(s) at non-positive depth")
    u = intr.fx * cam[:, 0] / depth + intr.cx
    v = intr.fy * cam[:, 1] / depth + intr.cy
    return np.stack([u, v], axis=1)


def project_point(point: np.ndarray, intr: Intrinsics, pose: CameraPose) -> Tuple[float, float]:
    u, v = project_points(np.asarray(point, dtype=np.float64).reshape(1, -1), intr, pose)[0]
    return float(u), float(v)


def homography_from_pose(intr: Intrinsics, pose: CameraPose) -> Homography:
    """H = A [r1 r2 t] for the Z = 0 plane"""
    R, t = pose.rotation, pose.translation
    return Homography(intr.matrix() @ np.column_stack([R[:, 0], R[:, 1], t]))


def sample_pose(
    rng: np.random.Generator,
    tilt_range: Tuple[float, float] = (DEFAULT_SYNTH_TILT_MIN_DEG, DEFAULT_SYNTH_TILT_MAX_DEG),
    distance_range: Tuple[float, float] = (DEFAULT_SYNTH_DISTANCE_MIN_M, DEFAULT_SYNTH_DISTANCE_MAX_M),
    azimuth_margin: float = DEFAULT_SYNTH_AZIMUTH_MARGIN_DEG,
    lateral: float = DEFAULT_SYNTH_LATERAL_M,
) -> CameraPose:
    """
    Random pose with the target tilted about an in-plane axis

    Tilt (degrees) and distance (meters) are uniform over their ranges. The
    tilt axis keeps at least azimuth_margin degrees from the image axes:
    tilting about an axis parallel to x or y leaves one focal length
    unobservable.
    """
    tilt_min, tilt_max = tilt_range
    d_min, d_max = distance_range
    if tilt_min < DEFAULT_SYNTH_MIN_TILT_DEG:
        raise SynthError(f"tilt below {DEFAULT_SYNTH_MIN_TILT_DEG} deg makes focal recovery degenerate")
    if tilt_min > tilt_max or tilt_max >= 90.0:
        raise SynthError(f"empty tilt range [{tilt_min}, {tilt_max}]")
    if d_min <= 0 or d_min > d_max:
        raise SynthError(f"invalid distance range [{d_min}, {d_max}]")
    if not 0.0 <= azimuth_margin < 45.0:
        raise SynthError(f"azimuth_margin must be in [0, 45), got {azimuth_margin}")

    tilt = math.radians(rng.uniform(tilt_min, tilt_max))
    quadrant = int(rng.integers(0, 4))
    azimuth = math.radians(90.0 * quadrant + rng.uniform(azimuth_margin, 90.0 - azimuth_margin))
    axis = np.array([math.cos(azimuth), math.sin(azimuth), 0.0])
    rotation = Rotation.from_rotvec(tilt * axis).as_matrix()

    translation = np.array(
        [rng.uniform(-lateral, lateral), rng.uniform(-lateral, lateral), rng.uniform(d_min, d_max)]
    )
    return CameraPose(rotation, translation)


def _clockwise(vertices: np.ndarray) -> np.ndarray:
    """Reorder so turns are positive in image axes (clockwise on screen)"""
    x, y = vertices[:, 0], vertices[:, 1]
    area = np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
    return vertices if area > 0 else vertices[::-1]


def half_planes(vertices: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit inward normals and offsets of a convex polygon: inside iff n . p - d >= 0"""
    a = _clockwise(np.asarray(vertices, dtype=np.float64))
    edges = np.roll(a, -1, axis=0) - a
    normals = np.stack([-edges[:, 1], edges[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    return normals, np.sum(normals * a, axis=1)


def polygon_coverage(
    normals: np.ndarray, offsets: np.ndarray, xs: np.ndarray, ys: np.ndarray, supersampling: int
) -> np.ndarray:
    """
    Covered fraction of each pixel (centers xs x ys) for an intersection of half-planes

    Pixels whose center lies more than half a diagonal inside or outside are
    0 or 1 outright; only the boundary pixels are supersampled s x s.
    """
    depth = normals[:, 0, None, None] * xs[None, None, :] + normals[:, 1, None, None] * ys[None, :, None]
    depth = np.min(depth - offsets[:, None, None], axis=0)
    coverage = (depth > 0.0).astype(np.float64)

    rows, cols = np.nonzero(np.abs(depth) < HALF_DIAGONAL)
    if len(rows):
        s = supersampling
        sub = (np.arange(s) + 0.5) / s - 0.5
        sx = xs[cols][:, None, None] + sub[None, None, :]
        sy = ys[rows][:, None, None] + sub[None, :, None]
        inside = np.ones((len(rows), s, s), dtype=bool)
        for (nx, ny), d in zip(normals, offsets):
            inside &= nx * sx + ny * sy - d >= 0.0
        coverage[rows, cols] = inside.mean(axis=(1, 2))
    return coverage


def _outline_samples(vertices: np.ndarray, per_side: int = CONTOUR_SAMPLES_PER_SIDE) -> np.ndarray:
    steps = np.arange(per_side) / per_side
    a, b = vertices, np.roll(vertices, -1, axis=0)
    return (a[:, None, :] + steps[None, :, None] * (b - a)[:, None, :]).reshape(-1, 2)


def render_scene(spec: SceneSpec) -> RenderedScene:
    """
    Anti-aliased red octagon with a white border on a flat background

    Boundary pixels are supersampled s x s, all others are pure; blur and
    exposure are applied inside the target window afterwards.
    """
    intr, pose = spec.intrinsics, spec.pose
    inner = project_points(spec.octagon.points, intr, pose)
    outer = project_points(spec.octagon.outer_points, intr, pose)

    truth = order_corners(inner)
    contour = _outline_samples(inner)
    H = homography_from_pose(intr, pose)

    in_x = (outer[:, 0] >= 0) & (outer[:, 0] <= spec.width - 1)
    in_y = (outer[:, 1] >= 0) & (outer[:, 1] <= spec.height - 1)
    if not np.all(in_x & in_y):
        raise SynthError(f"octagon leaves the {spec.width}x{spec.height} frame")

    rng = np.random.default_rng(spec.seed)
    inner_r, outer_r = inner.copy(), outer.copy()
    if spec.perturb_vertex is not None and spec.perturb_fraction > 0:
        k = spec.perturb_vertex
        center = inner.mean(axis=0)
        radial = (inner[k] - center) / np.linalg.norm(inner[k] - center)
        mean_side = float(np.mean(np.linalg.norm(np.roll(inner, -1, axis=0) - inner, axis=1)))
        shift = spec.perturb_fraction * mean_side * radial
        inner_r[k] += shift
        outer_r[k] += shift
    if spec.contour_noise > 0:
        jitter = rng.normal(0.0, spec.contour_noise, size=inner.shape)
        inner_r += jitter
        outer_r += jitter

    pad = int(math.ceil(4.0 * spec.blur)) + 2
    x0 = max(0, int(math.floor(outer_r[:, 0].min())) - pad)
    y0 = max(0, int(math.floor(outer_r[:, 1].min())) - pad)
    x1 = min(spec.width, int(math.ceil(outer_r[:, 0].max())) + pad + 1)
    y1 = min(spec.height, int(math.ceil(outer_r[:, 1].max())) + pad + 1)

    xs = np.arange(x0, x1, dtype=np.float64)
    ys = np.arange(y0, y1, dtype=np.float64)
    outer_n, outer_d = half_planes(outer_r)
    inner_n, inner_d = half_planes(inner_r)
    inner_n, inner_d = np.vstack([inner_n, outer_n]), np.concatenate([inner_d, outer_d])
    if spec.occlusion_fraction > 0:
        top, bottom = outer_r[:, 1].min(), outer_r[:, 1].max()
        cutoff = bottom - spec.occlusion_fraction * (bottom - top)
        # Everything below the cutoff row is hidden: -y + cutoff >= 0
        outer_n, outer_d = np.vstack([outer_n, [[0.0, -1.0]]]), np.append(outer_d, -cutoff)
        inner_n, inner_d = np.vstack([inner_n, [[0.0, -1.0]]]), np.append(inner_d, -cutoff)
    in_outer = polygon_coverage(outer_n, outer_d, xs, ys, spec.supersampling)
    in_inner = polygon_coverage(inner_n, inner_d, xs, ys, spec.supersampling)

    background = np.asarray(SYNTH_BACKGROUND)
    white = np.asarray(SYNTH_WHITE)
    red = np.asarray(SYNTH_RED)
    roi = (
        background
        + in_outer[..., None] * (white - background)
        + in_inner[..., None] * (red - white)
    )
    if spec.blur > 0:
        roi = gaussian_filter(roi, sigma=(spec.blur, spec.blur, 0.0), mode="nearest")

    frame = np.empty((spec.height, spec.width, 3))
    frame[...] = np.clip(background * spec.exposure, 0.0, 1.0)
    frame[y0:y1, x0:x1] = np.clip(roi * spec.exposure, 0.0, 1.0)

    box = BoundingBox(
        x=float(outer[:, 0].min()),
        y=float(outer[:, 1].min()),
        w=float(np.ptp(outer[:, 0])),
        h=float(np.ptp(outer[:, 1])),
    )
    return RenderedScene(
        image=Image(frame), corners=truth, contour=contour, box=box, homography=H, tilt_deg=pose.tilt_deg
    )


class SceneRendererToolConfig(BaseToolConfig):
    """Camera and scene distribution for synthetic batches"""

    fx: float = Field(default=DEFAULT_SYNTH_FX, gt=0.0)
    fy: float = Field(default=DEFAULT_SYNTH_FY, gt=0.0)
    width: int = Field(default=DEFAULT_SYNTH_WIDTH, gt=0)
    height: int = Field(default=DEFAULT_SYNTH_HEIGHT, gt=0)
    tilt_min_deg: float = Field(default=DEFAULT_SYNTH_TILT_MIN_DEG)
    tilt_max_deg: float = Field(default=DEFAULT_SYNTH_TILT_MAX_DEG)
    distance_min_m: float = Field(default=DEFAULT_SYNTH_DISTANCE_MIN_M, gt=0.0)
    distance_max_m: float = Field(default=DEFAULT_SYNTH_DISTANCE_MAX_M, gt=0.0)
    lateral_m: float = Field(default=DEFAULT_SYNTH_LATERAL_M, ge=0.0)
    azimuth_margin_deg: float = Field(default=DEFAULT_SYNTH_AZIMUTH_MARGIN_DEG, ge=0.0, lt=45.0)
    contour_noise: float = Field(default=DEFAULT_SYNTH_CONTOUR_NOISE, ge=0.0)
    blur: float = Field(default=DEFAULT_SYNTH_BLUR, ge=0.0)
    exposure: float = Field(default=DEFAULT_SYNTH_EXPOSURE, gt=0.0)
    supersampling: int = Field(default=DEFAULT_SYNTH_SUPERSAMPLING, ge=1)
    octagon_width_m: float = Field(default=DEFAULT_OCTAGON_WIDTH_M, gt=0.0)
    border_ratio: float = Field(default=DEFAULT_BORDER_RATIO, gt=0.0)
    camera: str = Field(default=DEFAULT_CAMERA_ID, min_length=1)


class SceneRendererTool(BaseTool):
    """Samples poses and renders scene batches in the pipeline's dataset layout"""

    def __init__(self, config: SceneRendererToolConfig = None):
        super().__init__(config or SceneRendererToolConfig())
        cfg = self.config
        self.intrinsics = Intrinsics.centered(cfg.fx, cfg.fy, cfg.width, cfg.height)
        self.octagon = ReferenceOctagon(cfg.octagon_width_m, cfg.border_ratio)

    def scene_spec(self, rng: np.random.Generator, seed: int = 0) -> SceneSpec:
        cfg = self.config
        pose = sample_pose(
            rng,
            tilt_range=(cfg.tilt_min_deg, cfg.tilt_max_deg),
            distance_range=(cfg.distance_min_m, cfg.distance_max_m),
            azimuth_margin=cfg.azimuth_margin_deg,
            lateral=cfg.lateral_m,
        )
        return SceneSpec(
            intrinsics=self.intrinsics,
            pose=pose,
            octagon=self.octagon,
            width=cfg.width,
            height=cfg.height,
            contour_noise=cfg.contour_noise,
            blur=cfg.blur,
            exposure=cfg.exposure,
            supersampling=cfg.supersampling,
            seed=seed,
        )

    def render(self, seed: int, index: int) -> RenderedScene:
        """Scene `index` of the batch generated from `seed`"""
        rng = np.random.default_rng([seed, index])
        return render_scene(self.scene_spec(rng, seed=int(rng.integers(0, 2**31))))

    def write_batch(self, out_dir: Union[str, Path], n_scenes: int, seed: int = 0) -> Dict[str, Path]:
        """
        Write f_NNN.png frames plus detections.json and truth.json

        Returns:
            Paths of the two JSON files
        """
        if n_scenes < 1:
            raise SynthError(f"n_scenes must be >= 1, got {n_scenes}")
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)

        detections: List[dict] = []
        frames: Dict[str, dict] = {}
        width = max(3, len(str(n_scenes - 1)))
        for index in range(n_scenes):
            scene = self.render(seed, index)
            name = f"f_{index:0{width}d}.png"
            save_png(scene.image, out / name)
            detections.append(
                {"frame": name, "box": scene.box.to_list(), "ts": float(index), "camera": self.config.camera}
            )
            frames[name] = {
                "corners": scene.corners.corners.tolist(),
                "tilt_deg": scene.tilt_deg,
                "homography": scene.homography.matrix.tolist(),
            }
            logger.debug(f"Rendered {name}: tilt={scene.tilt_deg:.1f} deg")

        truth = {
            "intrinsics": self.intrinsics.model_dump(),
            "width": self.config.width,
            "height": self.config.height,
            "seed": seed,
            "contour_noise": self.config.contour_noise,
            "blur": self.config.blur,
            "frames": frames,
        }
        detections_path = out / DEFAULT_DETECTIONS_FILE
        truth_path = out / DEFAULT_TRUTH_FILE
        detections_path.write_text(json.dumps(detections, indent=2), encoding="utf-8")
        truth_path.write_text(json.dumps(truth, indent=2), encoding="utf-8")
        logger.info(f"Wrote {n_scenes} synthetic scene(s) to {out}")
        return {"detections": detections_path, "truth": truth_path}

    def run(self, out_dir: Union[str, Path], n_scenes: int, seed: int = 0, **kwargs) -> Dict[str, Path]:
        """Required by BaseTool - writes a scene batch"""
        return self.write_batch(out_dir, n_scenes, seed)
