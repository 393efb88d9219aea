# src/tools/edge_tools.py

"""
Subpixel contour extraction: Canny non-maximum suppression along the
gradient normal, Devernay parabolic correction, and greedy chaining.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import Field
from scipy.ndimage import map_coordinates
from scipy.spatial import cKDTree

from src.config.constants import DEFAULT_CHAIN_DISTANCE, DEFAULT_MAG_THRESHOLD
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import NoContourError
from src.tools.raster_tools import GradientField

logger = logging.getLogger(__name__)

MAX_OFFSET = 0.5


@dataclass(frozen=True)
class SubpixelPoint:
    """Contour point with its unit normal (gradient direction)"""

    x: float
    y: float
    nx: float
    ny: float
    strength: float
    degenerate: bool = False  # parabola had no strict maximum, offset forced to 0


@dataclass
class Chain:
    points: List[SubpixelPoint] = field(default_factory=list)
    closed: bool = False

    def __len__(self) -> int:
        return len(self.points)

    def xy(self) -> np.ndarray:
        """(N, 2) array of point coordinates"""
        return np.array([[p.x, p.y] for p in self.points], dtype=np.float64).reshape(-1, 2)

    def centroid(self) -> np.ndarray:
        return self.xy().mean(axis=0)


def sample_magnitude(grad: GradientField, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Bilinear magnitude lookup at (x, y) positions, edge-replicated outside the frame"""
    coords = np.vstack([np.ravel(ys), np.ravel(xs)])
    values = map_coordinates(grad.magnitude, coords, order=1, mode="nearest")
    return values.reshape(np.shape(xs))


def canny_nms(grad: GradientField, mag_threshold: float = DEFAULT_MAG_THRESHOLD) -> List[SubpixelPoint]:
    """
    Pixels that are local gradient maxima along their normal

    A pixel survives when its magnitude is at least mag_threshold * max and
    strictly above the backward neighbour and not below the forward neighbour
    (both bilinear, one pixel along the normal). The asymmetric test keeps a
    single pixel on flat two-pixel ridges.
    """
    if not 0.0 < mag_threshold < 1.0:
        raise ValueError(f"mag_threshold must be in (0, 1), got {mag_threshold}")

    mag = grad.magnitude
    peak = float(mag.max()) if mag.size else 0.0
    if peak <= 0.0:
        return []

    ys, xs = np.nonzero(mag >= mag_threshold * peak)
    m0 = mag[ys, xs]
    nx = grad.gx[ys, xs] / m0
    ny = grad.gy[ys, xs] / m0

    m_minus = sample_magnitude(grad, xs - nx, ys - ny)
    m_plus = sample_magnitude(grad, xs + nx, ys + ny)
    keep = (m0 > m_minus) & (m0 >= m_plus)

    points = [
        SubpixelPoint(x=float(x), y=float(y), nx=float(a), ny=float(b), strength=float(s))
        for x, y, a, b, s in zip(xs[keep], ys[keep], nx[keep], ny[keep], m0[keep])
    ]
    logger.debug(f"NMS kept {len(points)} of {len(xs)} candidate pixels")
    return points


def parabola_offset(m_minus: float, m0: float, m_plus: float) -> Tuple[float, bool]:
    """
    Vertex of the parabola through (-1, m_minus), (0, m0), (1, m_plus)

    Returns (offset, ok). When the three samples do not form a strict maximum
    the offset is 0 and ok is False. Offsets are clamped to +/-0.5.
    """
    curvature = m_minus - 2.0 * m0 + m_plus
    if curvature >= 0.0:
        return 0.0, False
    delta = (m_minus - m_plus) / (2.0 * curvature)
    return float(np.clip(delta, -MAX_OFFSET, MAX_OFFSET)), True


def devernay_refine_points(
    points: Sequence[SubpixelPoint], grad: GradientField
) -> List[SubpixelPoint]:
    """Move Canny survivors to the parabolic magnitude peak along their normals"""
    if not points:
        return []
    xy = np.array([[p.x, p.y] for p in points], dtype=np.float64)
    n = np.array([[p.nx, p.ny] for p in points], dtype=np.float64)
    m0 = np.array([p.strength for p in points], dtype=np.float64)
    m_minus = sample_magnitude(grad, xy[:, 0] - n[:, 0], xy[:, 1] - n[:, 1])
    m_plus = sample_magnitude(grad, xy[:, 0] + n[:, 0], xy[:, 1] + n[:, 1])

    curvature = m_minus - 2.0 * m0 + m_plus
    ok = curvature < 0.0
    safe = np.where(ok, curvature, -1.0)
    delta = np.where(ok, np.clip((m_minus - m_plus) / (2.0 * safe), -MAX_OFFSET, MAX_OFFSET), 0.0)
    moved = xy + delta[:, None] * n
    return [
        SubpixelPoint(
            x=float(x), y=float(y), nx=p.nx, ny=p.ny, strength=p.strength, degenerate=not bool(good)
        )
        for (x, y), p, good in zip(moved, points, ok)
    ]


def devernay_refine(p: SubpixelPoint, grad: GradientField) -> SubpixelPoint:
    """Move a Canny survivor to the parabolic magnitude peak along its normal"""
    return devernay_refine_points([p], grad)[0]


def chain_points(
    points: Sequence[SubpixelPoint], d_chain: float = DEFAULT_CHAIN_DISTANCE
) -> List[Chain]:
    """
    Greedy nearest-neighbour chaining

    From a seed, repeatedly link to the nearest unclaimed point within
    d_chain whose normal is within 90 degrees of the current one; grow
    forward, then backward from the seed. Single points are dropped. Chains
    come back sorted by descending length.
    """
    n = len(points)
    if n == 0:
        return []

    xy = np.array([[p.x, p.y] for p in points], dtype=np.float64)
    normals = np.array([[p.nx, p.ny] for p in points], dtype=np.float64)
    claimed = np.zeros(n, dtype=bool)

    # Compatible neighbours of every point, nearest first
    neighbours: List[List[int]] = []
    for i, ball in enumerate(cKDTree(xy).query_ball_point(xy, d_chain)):
        ball = np.asarray([j for j in ball if j != i], dtype=np.intp)
        if len(ball):
            ball = ball[normals[ball] @ normals[i] > 0.0]
            dist = np.sum((xy[ball] - xy[i]) ** 2, axis=1)
            ball = ball[np.lexsort((ball, dist))]
        neighbours.append(ball.tolist())

    def next_link(current: int) -> Optional[int]:
        return next((j for j in neighbours[current] if not claimed[j]), None)

    # Seeds in raster order for deterministic output
    order = np.lexsort((xy[:, 0], xy[:, 1]))
    chains: List[Chain] = []
    for seed in order:
        if claimed[seed]:
            continue
        claimed[seed] = True
        forward = [int(seed)]
        while (j := next_link(forward[-1])) is not None:
            claimed[j] = True
            forward.append(j)
        backward: List[int] = []
        tail = int(seed)
        while (j := next_link(tail)) is not None:
            claimed[j] = True
            backward.append(j)
            tail = j

        indices = backward[::-1] + forward
        if len(indices) < 2:
            continue
        first, last = xy[indices[0]], xy[indices[-1]]
        closed = len(indices) >= 3 and float(np.hypot(*(first - last))) <= d_chain
        chains.append(Chain(points=[points[i] for i in indices], closed=closed))

    chains.sort(key=len, reverse=True)
    return chains


def select_longest_chain(
    chains: Sequence[Chain], roi_center: Optional[Tuple[float, float]] = None
) -> Chain:
    """The chain with the most points; ties go to the one closest to the ROI center"""
    if not chains:
        raise NoContourError("no contour chain found")

    longest = max(len(c) for c in chains)
    tied = [c for c in chains if len(c) == longest]
    if len(tied) == 1 or roi_center is None:
        return tied[0]
    center = np.asarray(roi_center, dtype=np.float64)
    return min(tied, key=lambda c: float(np.linalg.norm(c.centroid() - center)))


class ContourToolConfig(BaseToolConfig):
    """Configuration for contour extraction"""

    mag_threshold: float = Field(default=DEFAULT_MAG_THRESHOLD, gt=0.0, lt=1.0)
    chain_distance: float = Field(default=DEFAULT_CHAIN_DISTANCE, gt=0.0)


class ContourTool(BaseTool):
    """Extracts the dominant subpixel contour from a gradient field"""

    def __init__(self, config: ContourToolConfig = None):
        super().__init__(config or ContourToolConfig())

    def extract(self, grad: GradientField, roi_center: Optional[Tuple[float, float]] = None) -> Chain:
        survivors = canny_nms(grad, self.config.mag_threshold)
        refined = devernay_refine_points(survivors, grad)
        chains = chain_points(refined, self.config.chain_distance)
        contour = select_longest_chain(chains, roi_center)
        logger.debug(
            f"Contour: {len(contour)} points from {len(chains)} chain(s), closed={contour.closed}"
        )
        return contour

    def run(
        self, grad: GradientField, roi_center: Optional[Tuple[float, float]] = None, **kwargs
    ) -> Chain:
        """Required by BaseTool - returns the selected contour chain"""
        return self.extract(grad, roi_center)
