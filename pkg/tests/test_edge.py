# tests/test_edge.py

"""
Tests for subpixel contour extraction
"""

import math

import numpy as np
import pytest

from src.lib.exceptions import NoContourError
from src.tools.edge_tools import (
    Chain,
    ContourTool,
    SubpixelPoint,
    canny_nms,
    chain_points,
    devernay_refine,
    parabola_offset,
    select_longest_chain,
)
from src.tools.octagon_tools import octagon_vertices
from src.tools.raster_tools import Image, gaussian_gradient
from src.tools.synth_tools import half_planes, polygon_coverage


def point(x, y, nx=1.0, ny=0.0):
    return SubpixelPoint(x=x, y=y, nx=nx, ny=ny, strength=1.0)


class TestParabola:
    """Test the three-sample parabola vertex"""

    def test_symmetric_samples(self):
        assert parabola_offset(1.0, 2.0, 1.0) == (0.0, True)

    def test_skewed_samples(self):
        delta, ok = parabola_offset(1.0, 2.0, 1.5)
        assert ok
        assert delta == pytest.approx(1.0 / 6.0)

    def test_flat_is_degenerate(self):
        assert parabola_offset(1.0, 1.0, 1.0) == (0.0, False)

    def test_offset_is_clamped(self):
        delta, ok = parabola_offset(0.0, 1.0, 1.2)
        assert ok
        assert delta == 0.5


class TestNms:
    """Test Canny non-maximum suppression with Devernay refinement"""

    def test_vertical_step_gives_one_point_per_row(self, step_image):
        img = step_image((64, 64), normal_angle=0.0, offset=0.0)
        grad = gaussian_gradient(img, sigma=1.0)
        survivors = [p for p in canny_nms(grad, 0.1) if 8 <= p.y <= 55]

        rows = [p.y for p in survivors]
        assert sorted(rows) == list(np.arange(8.0, 56.0))
        refined = [devernay_refine(p, grad) for p in survivors]
        assert all(abs(p.x - 31.5) < 1e-3 for p in refined)

    def test_devernay_rms_on_random_steps(self, step_image):
        rng = np.random.default_rng(42)
        errors = []
        for _ in range(50):
            angle = rng.uniform(0, 2 * math.pi)
            offset = rng.uniform(-3, 3)
            blur = rng.uniform(0.5, 1.5)
            img = step_image((48, 48), normal_angle=angle, offset=offset, sigma=blur)
            grad = gaussian_gradient(img, sigma=1.0)
            n = np.array([math.cos(angle), math.sin(angle)])
            for p in canny_nms(grad, 0.1):
                if not (8 <= p.x <= 39 and 8 <= p.y <= 39):
                    continue
                q = devernay_refine(p, grad)
                errors.append(n @ (np.array([q.x, q.y]) - 23.5) - offset)
        assert len(errors) > 500
        assert math.sqrt(np.mean(np.square(errors))) < 0.1

    def test_threshold_must_be_fraction(self, step_image):
        grad = gaussian_gradient(step_image((16, 16), 0.0, 0.0))
        with pytest.raises(ValueError):
            canny_nms(grad, 1.5)

    def test_flat_image_has_no_edges(self):
        grad = gaussian_gradient(Image(np.full((16, 16), 0.5)))
        assert canny_nms(grad, 0.1) == []


class TestChaining:
    """Test greedy chaining and chain selection"""

    def test_circle_is_one_closed_chain(self):
        angles = np.linspace(0, 2 * np.pi, 200, endpoint=False)
        pts = [
            point(50 + 30 * math.cos(a), 50 + 30 * math.sin(a), math.cos(a), math.sin(a)) for a in angles
        ]
        chains = chain_points(pts, d_chain=2.0)

        assert len(chains) == 1
        assert len(chains[0]) == 200
        assert chains[0].closed

    def test_two_segments_sorted_by_length(self):
        short = [point(10.0, y) for y in np.arange(0, 10, 1.0)]
        long = [point(40.0, y) for y in np.arange(0, 30, 1.0)]
        chains = chain_points(short + long, d_chain=2.0)

        assert [len(c) for c in chains] == [30, 10]
        assert not chains[0].closed

    def test_isolated_point_dropped(self):
        chains = chain_points([point(0.0, 0.0), point(1.0, 0.0), point(50.0, 50.0)], d_chain=2.0)
        assert [len(c) for c in chains] == [2]

    def test_chaining_is_a_partition(self, rng):
        """Every point lands in exactly one chain or is a dropped singleton"""
        xy = np.vstack([rng.uniform(0, 30, (150, 2)), rng.uniform(100, 400, (20, 2))])
        angles = rng.uniform(0, 2 * np.pi, len(xy))
        pts = [point(x, y, math.cos(a), math.sin(a)) for (x, y), a in zip(xy, angles)]
        chains = chain_points(pts, d_chain=2.0)

        chained = [(p.x, p.y) for c in chains for p in c.points]
        seen = set(chained)
        assert len(chained) == len(seen)
        dropped = [p for p in pts if (p.x, p.y) not in seen]
        assert len(chained) + len(dropped) == len(pts)
        for i, p in enumerate(dropped):
            for q in dropped[i + 1 :]:
                linkable = math.hypot(p.x - q.x, p.y - q.y) <= 2.0 and p.nx * q.nx + p.ny * q.ny > 0
                assert not linkable

    def test_opposite_normals_not_linked(self):
        chains = chain_points([point(0.0, 0.0, 1.0, 0.0), point(1.0, 0.0, -1.0, 0.0)], d_chain=2.0)
        assert chains == []

    def test_no_chains_raises(self):
        with pytest.raises(NoContourError):
            select_longest_chain([])

    def test_tie_goes_to_roi_center(self):
        a = Chain(points=[point(0.0, 0.0), point(0.0, 1.0)])
        b = Chain(points=[point(10.0, 10.0), point(10.0, 11.0)])
        assert select_longest_chain([a, b], roi_center=(9.0, 9.0)) is b


class TestContourTool:
    """Test contour extraction on a rendered mask"""

    def test_octagon_mask_gives_ring_contour(self):
        vertices = octagon_vertices(40.0) + 50.0
        axis = np.arange(100, dtype=np.float64)
        mask = polygon_coverage(*half_planes(vertices), axis, axis, 4)
        grad = gaussian_gradient(Image(mask), sigma=1.0)

        contour = ContourTool().extract(grad, roi_center=(50.0, 50.0))
        radii = np.linalg.norm(contour.xy() - 50.0, axis=1)

        assert len(contour) > 150
        assert radii.min() > 40.0 * math.cos(math.pi / 8) - 1.5
        assert radii.max() < 40.0 + 1.5
