# src/tools/line_tools.py

"""
Octagon edge estimation: sequential RANSAC over point pairs with support
removal, total-least-squares line fits and perpendicular gradient refinement.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from pydantic import Field

from src.config.constants import (
    DEFAULT_BORDER_RATIO,
    DEFAULT_RANSAC_BATCH,
    DEFAULT_RANSAC_MIN_ITERATIONS,
    DEFAULT_RANSAC_MIN_SUPPORT,
    DEFAULT_RANSAC_P,
    DEFAULT_RANSAC_PAIRS_CAP,
    DEFAULT_RANSAC_RESCORE_TOP,
    DEFAULT_RANSAC_SCORE_POINTS,
    DEFAULT_RANSAC_TOL,
    DEFAULT_REFINE_BOUNDARY,
    DEFAULT_REFINE_SAMPLES,
)
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import EdgeFitError
from src.tools.edge_tools import parabola_offset, sample_magnitude
from src.tools.raster_tools import GradientField

logger = logging.getLogger(__name__)

N_EDGES = 8
END_MARGIN_SIGMAS = 3.0


@dataclass(frozen=True)
class EdgeLine:
    """Line n . x = d with unit normal, plus the segment spanned by its support"""

    nx: float
    ny: float
    d: float
    p0: Tuple[float, float]
    p1: Tuple[float, float]
    support_count: int

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.nx, self.ny])

    @property
    def direction(self) -> np.ndarray:
        return np.array([-self.ny, self.nx])

    @property
    def length(self) -> float:
        return float(np.hypot(self.p1[0] - self.p0[0], self.p1[1] - self.p0[1]))

    @property
    def midpoint(self) -> np.ndarray:
        return (np.asarray(self.p0) + np.asarray(self.p1)) / 2.0

    def distance(self, points: np.ndarray) -> np.ndarray:
        """Perpendicular distance of (N, 2) points"""
        return np.abs(np.asarray(points, dtype=np.float64) @ self.normal - self.d)

    def project(self, point: np.ndarray) -> Tuple[float, float]:
        p = np.asarray(point, dtype=np.float64)
        q = p - (p @ self.normal - self.d) * self.normal
        return float(q[0]), float(q[1])


class RansacConfig(BaseToolConfig):
    """RANSAC parameters for one edge fit"""

    p: float = Field(default=DEFAULT_RANSAC_P, ge=0.0, lt=1.0, description="Success probability")
    tol: float = Field(default=DEFAULT_RANSAC_TOL, gt=0.0, description="Support distance (px)")
    max_pairs_cap: bool = Field(default=DEFAULT_RANSAC_PAIRS_CAP, description="Cap K at N choose 2")
    min_support: int = Field(default=DEFAULT_RANSAC_MIN_SUPPORT, ge=2)
    min_iterations: int = Field(default=DEFAULT_RANSAC_MIN_ITERATIONS, ge=1)
    batch_size: int = Field(default=DEFAULT_RANSAC_BATCH, ge=1)
    score_points: int = Field(default=DEFAULT_RANSAC_SCORE_POINTS, ge=2, description="First-pass points")
    rescore_top: int = Field(default=DEFAULT_RANSAC_RESCORE_TOP, ge=1, description="Exact recounts")


def iteration_count(p: float, i: int, n_points: Optional[int] = None) -> int:
    """
    Iterations needed to draw a same-edge pair with probability p

    w = 1 / (8 - i)^2 is the chance of picking a support point of edge i and
    K = ceil(log(1 - p) / log(1 - w^2)). For the last edge (w = 1) K = 1.
    With n_points given, K is capped at n_points choose 2.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must be in [0, 1), got {p}")
    if not 0 <= i < N_EDGES:
        raise ValueError(f"edge index must be in 0..7, got {i}")

    if i == N_EDGES - 1:
        k = 1
    else:
        w = 1.0 / (N_EDGES - i) ** 2
        k = max(1, math.ceil(math.log(1.0 - p) / math.log(1.0 - w * w)))
    if n_points is not None:
        k = min(k, max(1, math.comb(n_points, 2)))
    return k


def tls_line(points: np.ndarray) -> Tuple[float, float, float]:
    """
    Orthogonal least-squares line (nx, ny, d)

    The normal is the eigenvector of the 2x2 scatter matrix with the smallest
    eigenvalue; d >= 0 fixes the sign.
    """
    pts = np.asarray(points, dtype=np.float64)
    if len(pts) < 2:
        raise EdgeFitError("need at least 2 points for a line")
    centroid = pts.mean(axis=0)
    centered = pts - centroid
    _, vecs = np.linalg.eigh(centered.T @ centered)
    n = vecs[:, 0]
    d = float(n @ centroid)
    if d < 0 or (d == 0 and (n[0] < 0 or (n[0] == 0 and n[1] < 0))):
        n, d = -n, -d
    return float(n[0]), float(n[1]), d


def line_from_support(support: np.ndarray) -> EdgeLine:
    """TLS line through the support with endpoints at the projected extrema"""
    nx, ny, d = tls_line(support)
    normal, tangent = np.array([nx, ny]), np.array([-ny, nx])
    s = support @ tangent
    p0 = d * normal + s.min() * tangent
    p1 = d * normal + s.max() * tangent
    return EdgeLine(
        nx=nx, ny=ny, d=d, p0=(float(p0[0]), float(p0[1])), p1=(float(p1[0]), float(p1[1])),
        support_count=len(support),
    )


def _candidate_pairs(
    n: int, k: int, cfg: RansacConfig, rng: np.random.Generator
) -> Tuple[np.ndarray, np.ndarray]:
    """k random distinct-point pairs (repeats dropped), or every pair when k reaches C(n, 2)"""
    total = math.comb(n, 2)
    if cfg.max_pairs_cap and k >= total:
        a, b = np.triu_indices(n, 1)
        return a, b
    a = rng.integers(n, size=k)
    b = rng.integers(n - 1, size=k)
    b = b + (b >= a)
    keys = np.unique(np.minimum(a, b) * n + np.maximum(a, b))
    return keys // n, keys % n


def _support_counts(
    centered: np.ndarray, normals: np.ndarray, offsets: np.ndarray, tol: float
) -> np.ndarray:
    """Points within tol of each candidate line, counted in float32 on centered coordinates"""
    dist = normals.astype(np.float32) @ centered.T
    dist -= offsets.astype(np.float32)[:, None]
    np.abs(dist, out=dist)
    return np.count_nonzero(dist <= np.float32(tol), axis=1)


def _pair_lines(centered: np.ndarray, a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Unit normals and offsets of the lines through each pair; coincident pairs are dropped"""
    pa, pb = centered[a], centered[b]
    delta = pb - pa
    length = np.hypot(delta[:, 0], delta[:, 1])
    valid = length > 0
    normals = np.stack([-delta[valid, 1], delta[valid, 0]], axis=1) / length[valid, None]
    return normals, np.sum(normals * pa[valid], axis=1)


def ransac_fit_edge(
    points: np.ndarray, cfg: RansacConfig, i: int, rng: np.random.Generator
) -> Tuple[EdgeLine, np.ndarray]:
    """
    Fit edge i: the pair line with the largest support wins, then a TLS fit of that support

    Every candidate is first counted against an evenly strided subset of at
    most score_points points; the rescore_top best are then counted exactly
    against all points. Small point sets are counted in full directly.

    Returns the line and the indices (into `points`) of its support set.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise EdgeFitError(f"edge {i}: only {n} point(s) left")

    k = max(iteration_count(cfg.p, i), cfg.min_iterations)
    a, b = _candidate_pairs(n, k, cfg, rng)

    centered = pts - pts.mean(axis=0)
    normals, offsets = _pair_lines(centered, a, b)
    if len(normals) == 0:
        raise EdgeFitError(f"edge {i}: all sampled pairs were coincident")

    stride = max(1, math.ceil(n / cfg.score_points))
    sample = centered[::stride].astype(np.float32)
    counts = np.concatenate(
        [
            _support_counts(sample, normals[s : s + cfg.batch_size], offsets[s : s + cfg.batch_size], cfg.tol)
            for s in range(0, len(normals), cfg.batch_size)
        ]
    )
    if stride > 1 and len(counts) > cfg.rescore_top:
        top = np.sort(np.argpartition(-counts, cfg.rescore_top - 1)[: cfg.rescore_top])
        exact = np.count_nonzero(np.abs(centered @ normals[top].T - offsets[top]) <= cfg.tol, axis=0)
        best = int(top[np.argmax(exact)])
    elif stride > 1:
        exact = np.count_nonzero(np.abs(centered @ normals.T - offsets) <= cfg.tol, axis=0)
        best = int(np.argmax(exact))
    else:
        best = int(np.argmax(counts))

    support_idx = np.nonzero(np.abs(centered @ normals[best] - offsets[best]) <= cfg.tol)[0]
    if len(support_idx) < cfg.min_support:
        raise EdgeFitError(f"edge {i}: best support {len(support_idx)} < {cfg.min_support}")

    line = line_from_support(pts[support_idx])
    logger.debug(f"Edge {i}: K={k}, pairs={len(a)}, support={len(support_idx)} of {n}")
    return line, support_idx


def fit_all_edges(
    contour: np.ndarray, cfg: RansacConfig, rng: np.random.Generator
) -> Tuple[List[EdgeLine], List[np.ndarray]]:
    """
    Fit the eight octagon edges one at a time, removing each support set

    Returns the lines and their support indices into `contour`. Any failed
    edge aborts with EdgeFitError.
    """
    pts = np.asarray(contour, dtype=np.float64).reshape(-1, 2)
    if len(pts) < N_EDGES * cfg.min_support:
        raise EdgeFitError(f"contour has {len(pts)} points, need {N_EDGES * cfg.min_support}")

    remaining = np.arange(len(pts))
    lines: List[EdgeLine] = []
    supports: List[np.ndarray] = []
    for i in range(N_EDGES):
        line, local = ransac_fit_edge(pts[remaining], cfg, i, rng)
        lines.append(line)
        supports.append(remaining[local])
        remaining = np.delete(remaining, local)
    return lines, supports


def refine_line(
    line: EdgeLine,
    grad: GradientField,
    samples: int = DEFAULT_REFINE_SAMPLES,
    boundary: float = DEFAULT_REFINE_BOUNDARY,
    border_ratio: float = DEFAULT_BORDER_RATIO,
) -> Tuple[EdgeLine, bool]:
    """
    Pull a line onto the nearest gradient ridge along its normal

    `samples` points are spread evenly over the segment interior (a margin of
    3 gradient sigmas is left at each end); each searches along the
    normal for the closest local magnitude maximum (parabolic subpixel peak).
    The allowed shift is boundary * border width, where the border width is the
    segment length times border_ratio. The line is refitted only when more
    than half the samples land within that shift; otherwise it is returned
    unchanged. boundary == 0 disables refinement.

    Returns (line, refined).
    """
    if samples < 2:
        raise ValueError(f"need at least 2 refinement samples, got {samples}")
    if not 0.0 <= boundary <= 1.0:
        raise ValueError(f"boundary must be in [0, 1], got {boundary}")
    if boundary == 0.0:
        return line, False

    limit = boundary * line.length * border_ratio
    radius = max(2, int(math.ceil(limit)) + 1)
    steps = np.arange(-radius, radius + 1, dtype=np.float64)

    # Sample the interior only: near the corners the adjacent edge's ridge bends the profile
    p0, p1 = np.asarray(line.p0), np.asarray(line.p1)
    margin = min(END_MARGIN_SIGMAS * grad.sigma, 0.25 * line.length)
    direction = line.direction if line.direction @ (p1 - p0) >= 0 else -line.direction
    start = p0 + margin * direction
    span = max(line.length - 2.0 * margin, 0.0)
    t = (np.arange(samples) + 0.5) / samples
    base = start[None, :] + (t * span)[:, None] * direction[None, :]
    n = line.normal
    grid = base[:, None, :] + steps[None, :, None] * n[None, None, :]
    profile = sample_magnitude(grad, grid[..., 0], grid[..., 1])

    refined = []
    for row, origin in zip(profile, base):
        offset = _nearest_peak(row, steps)
        if offset is not None and abs(offset) <= limit:
            refined.append(origin + offset * n)

    if len(refined) <= samples / 2:
        logger.debug(f"Refinement kept line: {len(refined)}/{samples} samples within {limit:.2f}px")
        return line, False

    nx, ny, d = tls_line(np.array(refined))
    moved = EdgeLine(nx=nx, ny=ny, d=d, p0=line.p0, p1=line.p1, support_count=line.support_count)
    moved = replace(moved, p0=moved.project(p0), p1=moved.project(p1))
    return moved, True


def _nearest_peak(row: np.ndarray, steps: np.ndarray) -> Optional[float]:
    """Subpixel position of the local maximum closest to step 0"""
    if row.max() <= 0.0:
        return None
    inner = np.arange(1, len(row) - 1)
    is_peak = (row[inner] > row[inner - 1]) & (row[inner] >= row[inner + 1])
    is_peak &= row[inner] >= 0.25 * row.max()
    peaks = inner[is_peak]
    if len(peaks) == 0:
        return None
    k = int(peaks[np.argmin(np.abs(steps[peaks]))])
    delta, _ = parabola_offset(float(row[k - 1]), float(row[k]), float(row[k + 1]))
    return float(steps[k] + delta)


class EdgeFittingToolConfig(BaseToolConfig):
    """Configuration for edge fitting and refinement"""

    ransac: RansacConfig = Field(default_factory=RansacConfig)
    refine_samples: int = Field(default=DEFAULT_REFINE_SAMPLES, ge=2)
    refine_boundary: float = Field(default=DEFAULT_REFINE_BOUNDARY, ge=0.0, le=1.0)
    border_ratio: float = Field(default=DEFAULT_BORDER_RATIO, gt=0.0)


class EdgeFittingTool(BaseTool):
    """Fits and optionally refines the eight octagon edges"""

    def __init__(self, config: EdgeFittingToolConfig = None):
        super().__init__(config or EdgeFittingToolConfig())

    @property
    def refinement_enabled(self) -> bool:
        return self.config.refine_boundary > 0.0

    def fit(
        self,
        contour: np.ndarray,
        rng: np.random.Generator,
        grad: Optional[GradientField] = None,
    ) -> Tuple[List[EdgeLine], int]:
        """Returns the eight lines and how many of them refinement moved"""
        lines, _ = fit_all_edges(contour, self.config.ransac, rng)
        if grad is None or not self.refinement_enabled:
            return lines, 0

        refined_count = 0
        out = []
        for line in lines:
            new_line, moved = refine_line(
                line, grad, self.config.refine_samples, self.config.refine_boundary, self.config.border_ratio
            )
            out.append(new_line)
            refined_count += int(moved)
        return out, refined_count

    def run(
        self, contour: np.ndarray, rng: np.random.Generator, grad: Optional[GradientField] = None, **kwargs
    ):
        """Required by BaseTool - returns (lines, refined_count)"""
        return self.fit(contour, rng, grad)
