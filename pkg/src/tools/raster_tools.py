# src/tools/raster_tools.py

"""
Raster substrate: PNG decoding, RGB -> HSV, red masking and
Gaussian-derivative gradient fields.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from PIL import Image as PILImage
from PIL import UnidentifiedImageError
from pydantic import Field
from scipy.ndimage import correlate1d

from src.config.constants import (
    DEFAULT_GRADIENT_SIGMA,
    DEFAULT_HUE_HIGH,
    DEFAULT_HUE_LOW,
    DEFAULT_SAT_MIN,
    DEFAULT_VAL_MAX,
    DEFAULT_VAL_MIN,
)
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import RasterError

logger = logging.getLogger(__name__)

# PIL mode -> (full-scale value, keep alpha-free channels)
_PNG_MODES = {
    "1": 1.0,
    "L": 255.0,
    "LA": 255.0,
    "P": 255.0,
    "RGB": 255.0,
    "RGBA": 255.0,
    "I;16": 65535.0,
    "I;16B": 65535.0,
    "I;16L": 65535.0,
    "I": 65535.0,
}


@dataclass(frozen=True)
class Image:
    """Row-major float image with samples in [0, 1]; shape (H, W) or (H, W, 3)"""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim not in (2, 3) or (data.ndim == 3 and data.shape[2] != 3):
            raise RasterError(f"image must be (H, W) or (H, W, 3), got shape {data.shape}")
        if not np.all(np.isfinite(data)):
            raise RasterError("image contains non-finite samples")
        if data.size and (data.min() < 0.0 or data.max() > 1.0):
            raise RasterError("image samples must lie in [0, 1]")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return int(self.data.shape[0])

    @property
    def width(self) -> int:
        return int(self.data.shape[1])

    @property
    def channels(self) -> int:
        return 1 if self.data.ndim == 2 else 3

    def crop(self, x0: int, y0: int, x1: int, y1: int) -> "Image":
        """Sub-image [y0:y1, x0:x1] (half-open, clipped to the frame)"""
        x0, y0 = max(0, x0), max(0, y0)
        x1, y1 = min(self.width, x1), min(self.height, y1)
        if x1 <= x0 or y1 <= y0:
            raise RasterError(f"empty crop [{x0}:{x1}, {y0}:{y1}]")
        return Image(self.data[y0:y1, x0:x1])


@dataclass(frozen=True)
class GradientField:
    """Per-pixel derivatives of the Gaussian-smoothed image"""

    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    sigma: float

    @property
    def shape(self) -> Tuple[int, int]:
        return self.magnitude.shape


@dataclass(frozen=True)
class BinaryMask:
    bits: np.ndarray

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    def as_image(self) -> Image:
        """The mask as a {0, 1} scalar image"""
        return Image(self.bits.astype(np.float64))


class RedThresholds(BaseToolConfig):
    """Red band in HSV; the hue band wraps through 0 when hue_low > hue_high"""

    hue_low: float = Field(default=DEFAULT_HUE_LOW, ge=0.0, le=1.0)
    hue_high: float = Field(default=DEFAULT_HUE_HIGH, ge=0.0, le=1.0)
    sat_min: float = Field(default=DEFAULT_SAT_MIN, ge=0.0, le=1.0)
    val_min: float = Field(default=DEFAULT_VAL_MIN, ge=0.0, le=1.0)
    val_max: float = Field(default=DEFAULT_VAL_MAX, ge=0.0, le=1.0)


Region = Tuple[int, int, int, int]


def _open_png(pil: PILImage.Image, path: Union[str, Path]) -> str:
    if pil.format != "PNG":
        raise RasterError(f"{path}: not a PNG file ({pil.format})")
    if pil.mode not in _PNG_MODES:
        raise RasterError(f"{path}: unsupported PNG mode {pil.mode}")
    return pil.mode


def png_size(path: Union[str, Path]) -> Tuple[int, int]:
    """(width, height) from the PNG header, without decoding pixels"""
    try:
        with PILImage.open(path) as pil:
            _open_png(pil, path)
            return pil.size
    except (OSError, UnidentifiedImageError) as e:
        raise RasterError(f"{path}: cannot read image: {e}") from e


def load_png(path: Union[str, Path], region: Optional[Region] = None) -> Image:
    """
    Decode an 8/16-bit grayscale or RGB PNG into [0, 1] samples; alpha is dropped

    With region = (x0, y0, x1, y1) only that half-open window (clipped to the
    frame) is converted to floats.
    """
    try:
        with PILImage.open(path) as pil:
            mode = _open_png(pil, path)
            scale = _PNG_MODES[mode]
            if region is not None:
                x0, y0 = max(0, region[0]), max(0, region[1])
                x1, y1 = min(pil.width, region[2]), min(pil.height, region[3])
                if x1 <= x0 or y1 <= y0:
                    raise RasterError(f"{path}: empty region [{x0}:{x1}, {y0}:{y1}]")
                pil = pil.crop((x0, y0, x1, y1))
            if mode in ("P", "RGBA"):
                pil = pil.convert("RGB")
            elif mode == "LA":
                pil = pil.convert("L")
            data = np.asarray(pil, dtype=np.float64)
    except (OSError, UnidentifiedImageError) as e:
        raise RasterError(f"{path}: cannot read image: {e}") from e

    if mode == "1":
        data = data.astype(bool).astype(np.float64)
    else:
        data = data / scale
    logger.debug(f"Loaded {path}: mode={mode}, shape={data.shape}")
    return Image(np.clip(data, 0.0, 1.0))


def save_png(image: Image, path: Union[str, Path]) -> None:
    """Write an 8-bit PNG (fast zlib level; frames are mostly flat)"""
    data = np.round(image.data * 255.0).astype(np.uint8)
    pil = PILImage.fromarray(data, mode="L" if image.channels == 1 else "RGB")
    pil.save(path, format="PNG", compress_level=1)


def rgb_to_hsv(img: Image) -> Image:
    """Hexcone RGB -> HSV with H in [0, 1); achromatic pixels get H = 0"""
    if img.channels != 3:
        raise RasterError(f"rgb_to_hsv needs 3 channels, got {img.channels}")

    rgb = img.data
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = rgb.max(axis=-1)
    c = v - rgb.min(axis=-1)

    s = np.zeros_like(v)
    np.divide(c, v, out=s, where=v > 0)

    chroma = c > 0
    safe_c = np.where(chroma, c, 1.0)
    h = np.zeros_like(v)
    r_max = chroma & (v == r)
    g_max = chroma & (v == g) & ~r_max
    b_max = chroma & ~r_max & ~g_max
    h[r_max] = ((g - b)[r_max] / safe_c[r_max]) % 6.0
    h[g_max] = (b - r)[g_max] / safe_c[g_max] + 2.0
    h[b_max] = (r - g)[b_max] / safe_c[b_max] + 4.0
    h = (h / 6.0) % 1.0

    return Image(np.stack([h, s, v], axis=-1))


def red_mask(hsv: Image, thresholds: RedThresholds = RedThresholds()) -> BinaryMask:
    """Pixels whose hue falls in the (wrapping) red band with enough saturation and value"""
    if hsv.channels != 3:
        raise RasterError(f"red_mask needs an HSV image, got {hsv.channels} channel(s)")

    h, s, v = hsv.data[..., 0], hsv.data[..., 1], hsv.data[..., 2]
    if thresholds.hue_low > thresholds.hue_high:
        in_band = (h >= thresholds.hue_low) | (h <= thresholds.hue_high)
    else:
        in_band = (h >= thresholds.hue_low) & (h <= thresholds.hue_high)
    bits = (
        in_band
        & (s >= thresholds.sat_min)
        & (v >= thresholds.val_min)
        & (v <= thresholds.val_max)
    )
    return BinaryMask(bits)


def chroma(img: Image) -> Image:
    """
    max - min over the RGB channels (V * S in hexcone terms)

    Linear in coverage across a red/white boundary, so its gradient ridge sits
    at the half-coverage line whatever the mask thresholds are. Single-channel
    input has no chroma and is returned as is.
    """
    if img.channels == 1:
        return img
    return Image(img.data.max(axis=-1) - img.data.min(axis=-1))


def gaussian_kernels(sigma: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Sampled Gaussian and Gaussian-derivative kernels of radius ceil(3 sigma)

    The smoothing kernel sums to 1; the derivative kernel is scaled so that
    correlating it with a unit ramp gives exactly 1.
    """
    radius = max(1, int(math.ceil(3.0 * sigma)))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-(k**2) / (2.0 * sigma**2))
    smooth = g / g.sum()
    deriv = k * g / np.sum(k**2 * g)
    return smooth, deriv


def gaussian_gradient(img: Image, sigma: float = DEFAULT_GRADIENT_SIGMA) -> GradientField:
    """Separable Gaussian-derivative gradient with edge-replicated borders"""
    if sigma <= 0:
        raise RasterError(f"sigma must be positive, got {sigma}")
    if img.channels != 1:
        raise RasterError(f"gaussian_gradient needs a single channel, got {img.channels}")

    smooth, deriv = gaussian_kernels(sigma)
    data = img.data
    gx = correlate1d(correlate1d(data, smooth, axis=0, mode="nearest"), deriv, axis=1, mode="nearest")
    gy = correlate1d(correlate1d(data, smooth, axis=1, mode="nearest"), deriv, axis=0, mode="nearest")
    return GradientField(gx=gx, gy=gy, magnitude=np.hypot(gx, gy), sigma=sigma)


class RasterToolConfig(BaseToolConfig):
    """Configuration for the raster stage"""

    sigma: float = Field(default=DEFAULT_GRADIENT_SIGMA, gt=0.0)
    thresholds: RedThresholds = Field(default_factory=RedThresholds)


class RasterTool(BaseTool):
    """Turns an RGB region of interest into the two gradient fields the pipeline uses"""

    def __init__(self, config: RasterToolConfig = None):
        super().__init__(config or RasterToolConfig())

    def mask_gradient(self, roi: Image) -> Tuple[BinaryMask, GradientField]:
        """Red mask of the ROI and the gradient of the mask as a {0, 1} image"""
        mask = red_mask(rgb_to_hsv(roi), self.config.thresholds)
        logger.debug(f"Red mask covers {int(mask.bits.sum())} of {mask.bits.size} pixels")
        return mask, gaussian_gradient(mask.as_image(), self.config.sigma)

    def image_gradient(self, roi: Image) -> GradientField:
        """Gradient of the ROI chroma, used for line refinement"""
        return gaussian_gradient(chroma(roi), self.config.sigma)

    def run(self, roi: Image, **kwargs) -> dict:
        """Required by BaseTool - returns mask, mask gradient and image gradient"""
        mask, mask_grad = self.mask_gradient(roi)
        return {"mask": mask, "mask_gradient": mask_grad, "image_gradient": self.image_gradient(roi)}
