# src/tools/calib_tools.py

"""
Planar calibration from one octagon view: normalized DLT homography and
closed-form focal lengths with the principal point held fixed.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from pydantic import Field

from src.config.constants import (
    DEFAULT_BORDER_RATIO,
    DEFAULT_COND_MAX,
    DEFAULT_CORNER_SIGMA_MIN,
    DEFAULT_OCTAGON_WIDTH_M,
)
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import DegenerateViewError, HomographyError, NegativeFocalError
from src.tools.octagon_tools import OctagonCorners, octagon_vertices

logger = logging.getLogger(__name__)

RANK_EPS = 1e-10
W_EPS = 1e-12
JACOBIAN_STEP = 1e-4  # px


@dataclass(frozen=True)
class ReferenceOctagon:
    """
    Planar target in meters (Z = 0), centered at the origin

    width_m is the across-flats width of the red octagon; the white border
    is border_ratio times its side length. Vertex order matches OctagonCorners.
    """

    width_m: float = DEFAULT_OCTAGON_WIDTH_M
    border_ratio: float = DEFAULT_BORDER_RATIO

    @property
    def circumradius(self) -> float:
        return self.width_m / 2.0 / math.cos(math.pi / 8)

    @property
    def side_m(self) -> float:
        return self.width_m * math.tan(math.pi / 8)

    @property
    def border_m(self) -> float:
        return self.side_m * self.border_ratio

    @property
    def points(self) -> np.ndarray:
        return octagon_vertices(self.circumradius)

    @property
    def outer_points(self) -> np.ndarray:
        """Outer edge of the white border"""
        outer_width = self.width_m + 2.0 * self.border_m
        return octagon_vertices(outer_width / 2.0 / math.cos(math.pi / 8))


@dataclass(frozen=True)
class Homography:
    """3x3 plane-to-image map with unit Frobenius norm and H[2, 2] >= 0"""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise HomographyError(f"homography must be a finite 3x3 matrix, got {m.shape}")
        norm = np.linalg.norm(m)
        if norm == 0:
            raise HomographyError("zero homography")
        m = m / norm
        if m[2, 2] < 0:
            m = -m
        object.__setattr__(self, "matrix", m)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map (N, 2) plane points to pixels"""
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        mapped = np.hstack([pts, np.ones((len(pts), 1))]) @ self.matrix.T
        w = mapped[:, 2]
        if np.any(np.abs(w) < W_EPS):
            raise HomographyError("point mapped to infinity")
        return mapped[:, :2] / w[:, None]


def hartley_normalize(points: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Translate to the centroid and scale to mean distance sqrt(2); returns (points, T)"""
    pts = np.asarray(points, dtype=np.float64)
    centroid = pts.mean(axis=0)
    mean_dist = float(np.mean(np.linalg.norm(pts - centroid, axis=1)))
    if mean_dist <= 0:
        raise HomographyError("all points coincide")
    s = math.sqrt(2.0) / mean_dist
    T = np.array([[s, 0.0, -s * centroid[0]], [0.0, s, -s * centroid[1]], [0.0, 0.0, 1.0]])
    return (pts - centroid) * s, T


def dlt_design_matrix(world: np.ndarray, image: np.ndarray) -> np.ndarray:
    """2N x 9 DLT system A h = 0 for s (u, v, 1) = H (X, Y, 1)"""
    rows = []
    for (X, Y), (u, v) in zip(world, image):
        rows.append([-X, -Y, -1.0, 0.0, 0.0, 0.0, u * X, u * Y, u])
        rows.append([0.0, 0.0, 0.0, -X, -Y, -1.0, v * X, v * Y, v])
    return np.array(rows, dtype=np.float64)


def dlt_homography(world: np.ndarray, image: np.ndarray) -> Homography:
    """Normalized DLT from >= 4 plane/image correspondences"""
    world = np.asarray(world, dtype=np.float64).reshape(-1, 2)
    image = np.asarray(image, dtype=np.float64).reshape(-1, 2)
    if len(world) != len(image) or len(world) < 4:
        raise HomographyError(f"need >= 4 matching points, got {len(world)} and {len(image)}")

    world_n, T_world = hartley_normalize(world)
    image_n, T_image = hartley_normalize(image)
    _, s, vt = np.linalg.svd(dlt_design_matrix(world_n, image_n))
    if s[-2] < RANK_EPS * s[0]:
        raise HomographyError("rank-deficient design matrix (collinear points)")

    H_n = vt[-1].reshape(3, 3)
    return Homography(np.linalg.solve(T_image, H_n @ T_world))


def focal_system(H: Homography, cx: float, cy: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Linear system in (1/fx^2, 1/fy^2) from one plane homography with a known principal point

    With B = A^-T A^-1 = diag(a, b, 1) after moving the principal point to the
    origin (a = 1/fx^2, b = 1/fy^2), the orthonormality of r1, r2 gives
        a h11 h12 + b h21 h22 = -h31 h32
        a (h11^2 - h12^2) + b (h21^2 - h22^2) = -(h31^2 - h32^2)
    """
    shift = np.array([[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]])
    h = shift @ H.matrix
    h = h / np.linalg.norm(h)
    h1, h2 = h[:, 0], h[:, 1]

    system = np.array(
        [
            [h1[0] * h2[0], h1[1] * h2[1]],
            [h1[0] ** 2 - h2[0] ** 2, h1[1] ** 2 - h2[1] ** 2],
        ]
    )
    rhs = -np.array([h1[2] * h2[2], h1[2] ** 2 - h2[2] ** 2])
    return system, rhs


def focal_from_homography(
    H: Homography, cx: float, cy: float, cond_max: float = DEFAULT_COND_MAX
) -> Tuple[float, float]:
    """Closed-form (fx, fy); ill-conditioned or non-positive solutions reject the view"""
    system, rhs = focal_system(H, cx, cy)
    cond = float(np.linalg.cond(system)) if np.any(system) else math.inf
    if not math.isfinite(cond) or cond >= cond_max:
        raise DegenerateViewError(f"focal system condition number {cond:.3g} >= {cond_max:g}")

    alpha, beta = np.linalg.solve(system, rhs)
    if alpha <= 0 or beta <= 0:
        raise NegativeFocalError(f"non-positive 1/f^2: alpha={alpha:.3g}, beta={beta:.3g}")
    return 1.0 / math.sqrt(alpha), 1.0 / math.sqrt(beta)


def focal_std(
    world: np.ndarray,
    image: np.ndarray,
    cx: float,
    cy: float,
    focals: Tuple[float, float],
    corner_sigma: float,
) -> Tuple[float, float]:
    """
    First-order standard deviation of (fx, fy) under isotropic corner noise

    The Jacobian of (1/fx^2, 1/fy^2) with respect to the 16 corner coordinates
    is taken by forward differences through the DLT; f = a^-1/2 then scales it
    by f^3 / 2. Views close to the degenerate configuration get large values.
    """
    image = np.asarray(image, dtype=np.float64).reshape(-1, 2)
    base = 1.0 / np.asarray(focals, dtype=np.float64) ** 2
    flat = image.reshape(-1)
    jacobian = np.empty((2, flat.size))
    for k in range(flat.size):
        moved = flat.copy()
        moved[k] += JACOBIAN_STEP
        system, rhs = focal_system(dlt_homography(world, moved.reshape(-1, 2)), cx, cy)
        jacobian[:, k] = (np.linalg.solve(system, rhs) - base) / JACOBIAN_STEP
    inverse_std = corner_sigma * np.sqrt(np.sum(jacobian**2, axis=1))
    fx_std, fy_std = 0.5 * np.asarray(focals) ** 3 * inverse_std
    return float(fx_std), float(fy_std)


def reprojection_error(H: Homography, world: np.ndarray, image: np.ndarray) -> float:
    """RMS pixel distance between the image points and the mapped world points"""
    try:
        mapped = H.apply(world)
    except HomographyError as e:
        raise DegenerateViewError(str(e)) from e
    residuals = np.linalg.norm(mapped - np.asarray(image, dtype=np.float64).reshape(-1, 2), axis=1)
    return float(np.sqrt(np.mean(residuals**2)))


@dataclass(frozen=True)
class FocalMeasurement:
    fx: float
    fy: float
    homography: Homography
    reprojection_rms: float
    fx_std: Optional[float] = None
    fy_std: Optional[float] = None


class PlanarCalibrationToolConfig(BaseToolConfig):
    """Configuration for per-view calibration"""

    octagon_width_m: float = Field(default=DEFAULT_OCTAGON_WIDTH_M, gt=0.0)
    border_ratio: float = Field(default=DEFAULT_BORDER_RATIO, gt=0.0)
    cond_max: float = Field(default=DEFAULT_COND_MAX, gt=1.0)
    corner_sigma_min: float = Field(default=DEFAULT_CORNER_SIGMA_MIN, gt=0.0)


class PlanarCalibrationTool(BaseTool):
    """Estimates (fx, fy) from the eight ordered corners of one view"""

    def __init__(self, config: PlanarCalibrationToolConfig = None):
        super().__init__(config or PlanarCalibrationToolConfig())
        self.reference = ReferenceOctagon(self.config.octagon_width_m, self.config.border_ratio)

    def calibrate(self, corners: OctagonCorners, cx: float, cy: float) -> FocalMeasurement:
        world = self.reference.points
        try:
            H = dlt_homography(world, corners.corners)
        except HomographyError as e:
            raise DegenerateViewError(str(e)) from e
        fx, fy = focal_from_homography(H, cx, cy, self.config.cond_max)
        rms = reprojection_error(H, world, corners.corners)
        sigma = max(rms, self.config.corner_sigma_min)
        try:
            fx_std, fy_std = focal_std(world, corners.corners, cx, cy, (fx, fy), sigma)
        except (HomographyError, np.linalg.LinAlgError) as e:
            logger.warning(f"Focal uncertainty unavailable for this view: {e}")
            fx_std = fy_std = None
        logger.debug(f"View calibrated: fx={fx:.1f}, fy={fy:.1f}, rms={rms:.3f}px, std=({fx_std}, {fy_std})")
        return FocalMeasurement(
            fx=fx, fy=fy, homography=H, reprojection_rms=rms, fx_std=fx_std, fy_std=fy_std
        )

    def run(self, corners: OctagonCorners, cx: float, cy: float, **kwargs) -> FocalMeasurement:
        """Required by BaseTool - returns the focal measurement"""
        return self.calibrate(corners, cx, cy)
