# tests/test_raster.py

"""
Tests for PNG decoding, HSV conversion, red masking and gradients
"""

import colorsys

import numpy as np
import pytest
from PIL import Image as PILImage

from src.lib.exceptions import RasterError
from src.tools.raster_tools import (
    Image,
    RasterTool,
    RedThresholds,
    gaussian_gradient,
    gaussian_kernels,
    chroma,
    load_png,
    png_size,
    red_mask,
    rgb_to_hsv,
    save_png,
)


def hsv_to_rgb(h, s, v):
    return np.array(colorsys.hsv_to_rgb(h, s, v))


class TestImage:
    """Test the Image container"""

    def test_rejects_out_of_range_samples(self):
        with pytest.raises(RasterError):
            Image(np.full((4, 4), 1.5))

    def test_rejects_non_finite(self):
        data = np.zeros((4, 4))
        data[1, 1] = np.nan
        with pytest.raises(RasterError):
            Image(data)

    def test_rejects_bad_channel_count(self):
        with pytest.raises(RasterError):
            Image(np.zeros((4, 4, 2)))

    def test_crop_is_clipped(self):
        img = Image(np.zeros((10, 20, 3)))
        roi = img.crop(-5, 2, 8, 50)
        assert (roi.height, roi.width) == (8, 8)

    def test_empty_crop_raises(self):
        with pytest.raises(RasterError):
            Image(np.zeros((10, 10))).crop(5, 5, 5, 8)


class TestPng:
    """Test PNG loading"""

    def test_rgb_8bit(self, tmp_path):
        data = np.zeros((3, 4, 3), dtype=np.uint8)
        data[0, 0] = (255, 128, 0)
        PILImage.fromarray(data, mode="RGB").save(tmp_path / "a.png")

        img = load_png(tmp_path / "a.png")
        assert img.channels == 3
        assert img.data[0, 0] == pytest.approx([1.0, 128 / 255, 0.0])

    def test_gray_16bit(self, tmp_path):
        data = np.array([[0, 65535], [32768, 1000]], dtype=np.uint16)
        PILImage.fromarray(data).save(tmp_path / "g.png")

        img = load_png(tmp_path / "g.png")
        assert img.channels == 1
        assert img.data == pytest.approx(data / 65535.0)

    def test_alpha_is_dropped(self, tmp_path):
        data = np.full((2, 2, 4), 200, dtype=np.uint8)
        PILImage.fromarray(data, mode="RGBA").save(tmp_path / "rgba.png")

        img = load_png(tmp_path / "rgba.png")
        assert img.data.shape == (2, 2, 3)

    def test_not_a_png(self, tmp_path):
        PILImage.new("RGB", (4, 4)).save(tmp_path / "a.jpg", format="JPEG")
        with pytest.raises(RasterError):
            load_png(tmp_path / "a.jpg")

    def test_missing_file(self, tmp_path):
        with pytest.raises(RasterError):
            load_png(tmp_path / "nope.png")

    def test_save_then_load_8bit(self, tmp_path):
        data = np.round(np.random.default_rng(0).random((5, 6, 3)) * 255) / 255
        save_png(Image(data), tmp_path / "x.png")
        assert load_png(tmp_path / "x.png").data == pytest.approx(data, abs=1e-12)


    def test_size_from_header(self, tmp_path):
        PILImage.new("RGB", (7, 5)).save(tmp_path / "s.png")
        assert png_size(tmp_path / "s.png") == (7, 5)

    def test_size_of_missing_file(self, tmp_path):
        with pytest.raises(RasterError):
            png_size(tmp_path / "nope.png")

    def test_region_matches_crop(self, tmp_path):
        data = np.round(np.random.default_rng(3).random((12, 10, 3)) * 255) / 255
        save_png(Image(data), tmp_path / "r.png")
        region = load_png(tmp_path / "r.png", region=(2, 3, 7, 9))
        assert region.data == pytest.approx(data[3:9, 2:7], abs=1e-12)

    def test_region_clipped_to_frame(self, tmp_path):
        save_png(Image(np.full((6, 6, 3), 0.5)), tmp_path / "c.png")
        assert load_png(tmp_path / "c.png", region=(-4, 2, 20, 4)).data.shape == (2, 6, 3)
        with pytest.raises(RasterError):
            load_png(tmp_path / "c.png", region=(8, 0, 12, 4))


class TestHsv:
    """Test RGB -> HSV conversion and red masking"""

    def test_pure_red(self):
        hsv = rgb_to_hsv(Image(np.array([[[1.0, 0.0, 0.0]]])))
        assert hsv.data[0, 0] == pytest.approx([0.0, 1.0, 1.0])

    def test_gray_is_achromatic(self):
        hsv = rgb_to_hsv(Image(np.full((1, 1, 3), 0.4)))
        assert hsv.data[0, 0] == pytest.approx([0.0, 0.0, 0.4])

    def test_matches_colorsys(self):
        rgb = np.random.default_rng(3).random((20, 20, 3))
        hsv = rgb_to_hsv(Image(rgb)).data
        expected = np.array([colorsys.rgb_to_hsv(*px) for px in rgb.reshape(-1, 3)]).reshape(rgb.shape)
        # hue is circular
        hue_gap = np.abs(hsv[..., 0] - expected[..., 0])
        assert np.all(np.minimum(hue_gap, 1.0 - hue_gap) < 1e-9)
        assert hsv[..., 1:] == pytest.approx(expected[..., 1:], abs=1e-12)

    def test_single_channel_rejected(self):
        with pytest.raises(RasterError):
            rgb_to_hsv(Image(np.zeros((2, 2))))

    def test_red_band_wraps_through_zero(self):
        pixels = np.array([[hsv_to_rgb(0.97, 0.9, 0.8), hsv_to_rgb(0.02, 0.9, 0.8), hsv_to_rgb(0.5, 0.9, 0.8)]])
        mask = red_mask(rgb_to_hsv(Image(pixels)))
        assert mask.bits.tolist() == [[True, True, False]]

    def test_low_saturation_excluded(self):
        pixels = np.array([[hsv_to_rgb(0.0, 0.2, 0.8), hsv_to_rgb(0.0, 0.5, 0.8)]])
        mask = red_mask(rgb_to_hsv(Image(pixels)))
        assert mask.bits.tolist() == [[False, True]]

    def test_non_wrapping_band(self):
        pixels = np.array([[hsv_to_rgb(0.3, 0.9, 0.8), hsv_to_rgb(0.6, 0.9, 0.8)]])
        thresholds = RedThresholds(hue_low=0.25, hue_high=0.35)
        assert red_mask(rgb_to_hsv(Image(pixels)), thresholds).bits.tolist() == [[True, False]]


class TestChroma:
    """Test the chroma channel used for refinement"""

    def test_max_minus_min(self):
        data = np.random.default_rng(1).random((4, 4, 3))
        assert chroma(Image(data)).data == pytest.approx(data.max(axis=-1) - data.min(axis=-1))

    def test_linear_in_red_coverage(self):
        red, white = np.array([0.8, 0.05, 0.1]), np.full(3, 0.95)
        coverage = np.linspace(0.0, 1.0, 11)
        mixed = coverage[:, None] * red + (1.0 - coverage[:, None]) * white
        values = chroma(Image(mixed[None, :, :])).data[0]
        assert np.diff(values) == pytest.approx(np.full(10, 0.075))

    def test_gray_passes_through(self):
        gray = Image(np.full((3, 3), 0.4))
        assert chroma(gray) is gray


class TestGradient:
    """Test Gaussian-derivative gradients"""

    def test_kernels_normalized(self):
        smooth, deriv = gaussian_kernels(1.5)
        k = np.arange(len(deriv)) - len(deriv) // 2
        assert smooth.sum() == pytest.approx(1.0)
        assert np.sum(k * deriv) == pytest.approx(1.0)

    def test_ramp_is_exact(self):
        ys, xs = np.mgrid[0:40, 0:40].astype(np.float64)
        img = Image(0.1 + 0.01 * xs + 0.005 * ys)
        grad = gaussian_gradient(img, sigma=1.0)
        inner = (slice(5, -5), slice(5, -5))
        assert grad.gx[inner] == pytest.approx(0.01, abs=1e-6)
        assert grad.gy[inner] == pytest.approx(0.005, abs=1e-6)

    def test_sinusoid_matches_derivative(self):
        omega = 2 * np.pi / 128
        xs = np.tile(np.arange(256, dtype=np.float64), (16, 1))
        img = Image(0.5 + 0.4 * np.sin(omega * xs))
        grad = gaussian_gradient(img, sigma=1.0)
        expected = 0.4 * omega * np.cos(omega * xs)
        assert grad.gx[:, 8:-8] == pytest.approx(expected[:, 8:-8], abs=1e-4)
        assert np.max(np.abs(grad.gy)) < 1e-12

    def test_linear_in_the_image(self):
        rng = np.random.default_rng(2)
        first, second = rng.random((30, 30)), rng.random((30, 30))
        combined = gaussian_gradient(Image(0.3 * first + 0.5 * second), sigma=1.5)
        g1, g2 = gaussian_gradient(Image(first), sigma=1.5), gaussian_gradient(Image(second), sigma=1.5)
        assert np.max(np.abs(combined.gx - (0.3 * g1.gx + 0.5 * g2.gx))) < 1e-9
        assert np.max(np.abs(combined.gy - (0.3 * g1.gy + 0.5 * g2.gy))) < 1e-9

    def test_constant_image_has_zero_gradient(self):
        grad = gaussian_gradient(Image(np.full((12, 12), 0.3)))
        assert np.max(grad.magnitude) < 1e-12

    def test_invalid_sigma(self):
        with pytest.raises(RasterError):
            gaussian_gradient(Image(np.zeros((8, 8))), sigma=0.0)

    def test_needs_single_channel(self):
        with pytest.raises(RasterError):
            gaussian_gradient(Image(np.zeros((8, 8, 3))))


class TestRasterTool:
    """Test the raster stage tool"""

    def test_mask_gradient_of_red_square(self):
        data = np.full((40, 40, 3), 0.4)
        data[10:30, 12:28] = (0.8, 0.05, 0.1)
        mask, grad = RasterTool().mask_gradient(Image(data))

        assert int(mask.bits.sum()) == 20 * 16
        assert grad.magnitude[20, 12] > grad.magnitude[20, 20]

    def test_image_gradient_follows_chroma(self):
        data = np.full((40, 40, 3), 0.95)
        data[:, 20:] = (0.8, 0.05, 0.1)
        grad = RasterTool().image_gradient(Image(data))
        assert int(np.argmax(grad.magnitude[20])) in (19, 20)
        assert grad.magnitude[20, 5] < 1e-12

    def test_run_returns_all_fields(self):
        result = RasterTool().run(Image(np.full((16, 16, 3), 0.5)))
        assert set(result) == {"mask", "mask_gradient", "image_gradient"}
