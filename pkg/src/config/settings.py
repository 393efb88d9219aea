# src/config/settings.py

import logging
import re
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import dotenv_values
from pydantic import Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from src.lib.exceptions import ConfigError
from .constants import (
    DEFAULT_AFFINE_TOL,
    DEFAULT_BORDER_RATIO,
    DEFAULT_CHAIN_DISTANCE,
    DEFAULT_COND_MAX,
    DEFAULT_CORNER_SIGMA_MIN,
    DEFAULT_ENDPOINT_RADIUS,
    DEFAULT_FALLBACK_MIN_AREA,
    DEFAULT_GRADIENT_SIGMA,
    DEFAULT_HUE_HIGH,
    DEFAULT_HUE_LOW,
    DEFAULT_KALMAN_Q_STD,
    DEFAULT_KALMAN_QUALITY_WEIGHTING,
    DEFAULT_KALMAN_R0_REL,
    DEFAULT_KALMAN_R_DECAY,
    DEFAULT_KALMAN_R_MIN_REL,
    DEFAULT_LOG_DIR,
    DEFAULT_LOG_LEVEL,
    DEFAULT_MAG_THRESHOLD,
    DEFAULT_OCTAGON_WIDTH_M,
    DEFAULT_RANSAC_MIN_ITERATIONS,
    DEFAULT_RANSAC_MIN_SUPPORT,
    DEFAULT_RANSAC_P,
    DEFAULT_RANSAC_PAIRS_CAP,
    DEFAULT_RANSAC_TOL,
    DEFAULT_REFINE_BOUNDARY,
    DEFAULT_REFINE_SAMPLES,
    DEFAULT_ROI_PADDING,
    DEFAULT_SAT_MIN,
    DEFAULT_SEED,
    DEFAULT_USE_FALLBACK_DETECTOR,
    DEFAULT_VAL_MAX,
    DEFAULT_VAL_MIN,
    DEFAULT_WORKERS,
)

logger = logging.getLogger(__name__)

ENV_PREFIX = "OCTCAL_"
_KEY_LINE = re.compile(r"^\s*(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*=")


class Settings(BaseSettings):
    """
    Pipeline settings.

    All default values come from constants.py. Values can be overridden by
    OCTCAL_* environment variables, a key = value config file, or CLI flags.
    """

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX, env_file_encoding="utf-8", case_sensitive=False, extra="forbid"
    )

    # Color segmentation
    hue_low: float = Field(default=DEFAULT_HUE_LOW, ge=0.0, le=1.0, description="Red band start (wraps)")
    hue_high: float = Field(default=DEFAULT_HUE_HIGH, ge=0.0, le=1.0, description="Red band end")
    sat_min: float = Field(default=DEFAULT_SAT_MIN, ge=0.0, le=1.0)
    val_min: float = Field(default=DEFAULT_VAL_MIN, ge=0.0, le=1.0)
    val_max: float = Field(default=DEFAULT_VAL_MAX, ge=0.0, le=1.0)
    gradient_sigma: float = Field(default=DEFAULT_GRADIENT_SIGMA, gt=0.0, description="Gaussian scale (px)")

    # Contour extraction
    mag_threshold: float = Field(default=DEFAULT_MAG_THRESHOLD, gt=0.0, lt=1.0)
    chain_distance: float = Field(default=DEFAULT_CHAIN_DISTANCE, gt=0.0)

    # Edge fitting
    ransac_p: float = Field(default=DEFAULT_RANSAC_P, ge=0.0, lt=1.0)
    ransac_tol: float = Field(default=DEFAULT_RANSAC_TOL, gt=0.0)
    ransac_min_support: int = Field(default=DEFAULT_RANSAC_MIN_SUPPORT, ge=2)
    ransac_min_iterations: int = Field(default=DEFAULT_RANSAC_MIN_ITERATIONS, ge=1)
    ransac_pairs_cap: bool = Field(default=DEFAULT_RANSAC_PAIRS_CAP)
    refine_samples: int = Field(default=DEFAULT_REFINE_SAMPLES, ge=2)
    refine_boundary: float = Field(default=DEFAULT_REFINE_BOUNDARY, ge=0.0, le=1.0)
    border_ratio: float = Field(default=DEFAULT_BORDER_RATIO, gt=0.0)

    # Octagon validation
    endpoint_radius: float = Field(default=DEFAULT_ENDPOINT_RADIUS, ge=0.0)
    affine_tol: float = Field(default=DEFAULT_AFFINE_TOL, gt=0.0)

    # Reference geometry and calibration
    octagon_width_m: float = Field(default=DEFAULT_OCTAGON_WIDTH_M, gt=0.0)
    cond_max: float = Field(default=DEFAULT_COND_MAX, gt=1.0)
    corner_sigma_min: float = Field(default=DEFAULT_CORNER_SIGMA_MIN, gt=0.0)

    # Kalman filter
    kalman_q_std: float = Field(default=DEFAULT_KALMAN_Q_STD, ge=0.0)
    kalman_r0_rel: float = Field(default=DEFAULT_KALMAN_R0_REL, gt=0.0)
    kalman_r_min_rel: float = Field(default=DEFAULT_KALMAN_R_MIN_REL, gt=0.0)
    kalman_r_decay: float = Field(default=DEFAULT_KALMAN_R_DECAY, gt=0.0, le=1.0)
    kalman_quality_weighting: bool = Field(default=DEFAULT_KALMAN_QUALITY_WEIGHTING)

    # Pipeline
    seed: int = Field(default=DEFAULT_SEED)
    roi_padding: float = Field(default=DEFAULT_ROI_PADDING, ge=0.0)
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)
    use_fallback_detector: bool = Field(default=DEFAULT_USE_FALLBACK_DETECTOR)
    fallback_min_area: int = Field(default=DEFAULT_FALLBACK_MIN_AREA, ge=1)
    gt_fx: Optional[float] = Field(default=None, gt=0.0, description="Ground-truth fx (px)")
    gt_fy: Optional[float] = Field(default=None, gt=0.0, description="Ground-truth fy (px)")

    # Logging
    log_level: str = Field(default=DEFAULT_LOG_LEVEL, description="Logging level")
    log_dir: str = Field(default=DEFAULT_LOG_DIR, description="Log directory")


def _read_config_file(path: Path) -> Tuple[Dict[str, Any], Dict[str, int]]:
    """Read a key = value config file, returning values and the line of each key"""
    if not path.is_file():
        raise ConfigError(f"{path}: config file not found")

    key_lines: Dict[str, int] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        match = _KEY_LINE.match(raw)
        if not match:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {stripped!r}")
        key = _normalize_key(match.group(1))
        if key in key_lines:
            first = key_lines[key]
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r} (first set on line {first})")
        key_lines[key] = lineno

    values = {}
    for key, value in dotenv_values(path).items():
        # Empty values fall back to defaults
        if value is None or value.strip() == "":
            continue
        values[_normalize_key(key)] = value.strip()

    return values, key_lines


def _normalize_key(key: str) -> str:
    key = key.strip().lower()
    prefix = ENV_PREFIX.lower()
    return key[len(prefix):] if key.startswith(prefix) else key


def load_settings(path: Optional[str] = None, **overrides: Any) -> Settings:
    """
    Build settings from an optional config file plus explicit overrides

    Args:
        path: Config file with one `key = value` per line
        overrides: Values that take precedence over the file (None values are ignored)

    Returns:
        Validated Settings instance

    Raises:
        ConfigError: with `path:line:` diagnostics for malformed or invalid entries
    """
    values: Dict[str, Any] = {}
    key_lines: Dict[str, int] = {}
    if path:
        values, key_lines = _read_config_file(Path(path))
        logger.info(f"Loaded {len(values)} config value(s) from {path}")

    values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return Settings(**values)
    except ValidationError as e:
        err = e.errors()[0]
        key = str(err["loc"][0]) if err["loc"] else ""
        line = key_lines.get(key)
        where = f"{path}:{line}" if path and line else str(path or "<settings>")
        raise ConfigError(f"{where}: {key}: {err['msg']}") from e


# Global settings instance
settings = Settings()
