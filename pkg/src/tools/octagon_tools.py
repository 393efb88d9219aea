# src/tools/octagon_tools.py

"""
Corner extraction from the fitted edges, clockwise ordering and
affine octagon validation.
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from pydantic import Field

from src.config.constants import DEFAULT_AFFINE_TOL, DEFAULT_ENDPOINT_RADIUS
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import AffineRejectError, CornerCountError
from src.tools.line_tools import N_EDGES, EdgeLine

logger = logging.getLogger(__name__)

PARALLEL_EPS = 1e-6
DUPLICATE_EPS = 1e-9


def octagon_vertices(circumradius: float = 1.0) -> np.ndarray:
    """
    Regular octagon with a horizontal top edge, clockwise in image axes (y down)

    Vertex 0 is the left end of the top edge.
    """
    angles = np.deg2rad(-112.5 + 45.0 * np.arange(N_EDGES))
    return circumradius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


@dataclass(frozen=True)
class CanonicalOctagon:
    vertices: np.ndarray

    @classmethod
    def unit(cls) -> "CanonicalOctagon":
        return cls(octagon_vertices(1.0))


@dataclass(frozen=True)
class OctagonCorners:
    """Eight corners, clockwise about their centroid, index 0 at the upper-left"""

    corners: np.ndarray
    frame_id: Optional[str] = None

    def __post_init__(self):
        corners = np.asarray(self.corners, dtype=np.float64)
        if corners.shape != (N_EDGES, 2):
            raise ValueError(f"expected 8 x 2 corners, got {corners.shape}")
        object.__setattr__(self, "corners", corners)

    def translated(self, dx: float, dy: float) -> "OctagonCorners":
        return OctagonCorners(self.corners + np.array([dx, dy]), self.frame_id)

    def side_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.roll(self.corners, -1, axis=0) - self.corners, axis=1)

    def is_clockwise_convex(self) -> bool:
        """All turns share one sign (clockwise on screen means positive with y down)"""
        edges = np.roll(self.corners, -1, axis=0) - self.corners
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        return bool(np.all(cross > 0))


@dataclass(frozen=True)
class AffineCheck:
    passed: bool
    max_residual: float  # pixels
    mean_side: float  # pixels
    shift: int  # cyclic shift of the canonical vertices that fitted best

    @property
    def normalized_residual(self) -> float:
        return self.max_residual / self.mean_side if self.mean_side > 0 else math.inf


def intersect(a: EdgeLine, b: EdgeLine) -> Optional[np.ndarray]:
    """Intersection of two lines, None when they are (near) parallel"""
    cross = a.nx * b.ny - a.ny * b.nx
    if abs(cross) < PARALLEL_EPS:
        return None
    x = (a.d * b.ny - a.ny * b.d) / cross
    y = (a.nx * b.d - a.d * b.nx) / cross
    return np.array([x, y])


def _near_endpoint(line: EdgeLine, point: np.ndarray, radius: float) -> bool:
    d0 = math.hypot(point[0] - line.p0[0], point[1] - line.p0[1])
    d1 = math.hypot(point[0] - line.p1[0], point[1] - line.p1[1])
    return min(d0, d1) <= radius


def corner_candidates(
    lines: Sequence[EdgeLine], endpoint_radius: float = DEFAULT_ENDPOINT_RADIUS
) -> np.ndarray:
    """Pairwise intersections lying within endpoint_radius of an endpoint of both segments"""
    found = []
    for a, b in combinations(lines, 2):
        point = intersect(a, b)
        if point is None:
            continue
        if _near_endpoint(a, point, endpoint_radius) and _near_endpoint(b, point, endpoint_radius):
            found.append(point)
    return np.array(found, dtype=np.float64).reshape(-1, 2)


def validate_count(candidates: np.ndarray) -> np.ndarray:
    """Pass exactly eight corners through; anything else rejects the detection"""
    candidates = np.asarray(candidates, dtype=np.float64).reshape(-1, 2)
    if len(candidates) != N_EDGES:
        raise CornerCountError(f"found {len(candidates)} corner(s), need {N_EDGES}")
    return candidates


def order_corners(corners: np.ndarray, frame_id: Optional[str] = None) -> OctagonCorners:
    """
    Sort clockwise about the centroid, starting at the left of the two uppermost corners

    The anchor assumes the target stands upright.
    """
    pts = validate_count(corners)
    gaps = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    if np.any(gaps[np.triu_indices(N_EDGES, 1)] < DUPLICATE_EPS):
        raise CornerCountError("duplicate corners")

    center = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - center[1], pts[:, 0] - center[0])
    ordered = pts[np.argsort(angles, kind="stable")]

    top_two = np.argsort(ordered[:, 1], kind="stable")[:2]
    anchor = int(top_two[np.argmin(ordered[top_two, 0])])
    return OctagonCorners(np.roll(ordered, -anchor, axis=0), frame_id)


def fit_affine(source: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Least-squares 2x3 affine map taking source points onto target points"""
    design = np.hstack([source, np.ones((len(source), 1))])
    params, *_ = np.linalg.lstsq(design, target, rcond=None)
    return params.T


def affine_octagon_check(
    octagon: OctagonCorners,
    canon: CanonicalOctagon = CanonicalOctagon.unit(),
    tol: float = DEFAULT_AFFINE_TOL,
) -> AffineCheck:
    """
    Best affine image of the canonical octagon over the 8 cyclic correspondences

    Passes when the largest matched-vertex residual is at most tol times the
    mean side length of the detected octagon.
    """
    target = octagon.corners
    mean_side = float(octagon.side_lengths().mean())
    scale = max(mean_side, 1e-12)

    best: Optional[AffineCheck] = None
    for shift in range(N_EDGES):
        source = np.roll(canon.vertices, -shift, axis=0)
        affine = fit_affine(source, target)
        if abs(np.linalg.det(affine[:, :2])) < 1e-12 * scale**2:
            continue
        mapped = source @ affine[:, :2].T + affine[:, 2]
        residual = float(np.max(np.linalg.norm(mapped - target, axis=1)))
        if best is None or residual < best.max_residual:
            best = AffineCheck(
                passed=residual <= tol * mean_side, max_residual=residual, mean_side=mean_side, shift=shift
            )

    if best is None:
        return AffineCheck(passed=False, max_residual=math.inf, mean_side=mean_side, shift=0)
    return best


class OctagonToolConfig(BaseToolConfig):
    """Configuration for corner extraction and validation"""

    endpoint_radius: float = Field(default=DEFAULT_ENDPOINT_RADIUS, ge=0.0)
    affine_tol: float = Field(default=DEFAULT_AFFINE_TOL, gt=0.0)


class OctagonTool(BaseTool):
    """Turns eight edge lines into validated, ordered octagon corners"""

    def __init__(self, config: OctagonToolConfig = None):
        super().__init__(config or OctagonToolConfig())
        self.canon = CanonicalOctagon.unit()

    def corners(self, lines: Sequence[EdgeLine], frame_id: Optional[str] = None) -> OctagonCorners:
        candidates = corner_candidates(lines, self.config.endpoint_radius)
        octagon = order_corners(validate_count(candidates), frame_id)
        check = affine_octagon_check(octagon, self.canon, self.config.affine_tol)
        if not check.passed:
            raise AffineRejectError(
                f"affine residual {check.normalized_residual:.3f} of mean side > {self.config.affine_tol}"
            )
        logger.debug(f"Octagon accepted, affine residual {check.normalized_residual:.4f} of mean side")
        return octagon

    def run(self, lines: Sequence[EdgeLine], frame_id: Optional[str] = None, **kwargs) -> OctagonCorners:
        """Required by BaseTool - returns validated corners"""
        return self.corners(lines, frame_id)
