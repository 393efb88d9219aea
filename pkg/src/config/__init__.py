# src/config/__init__.py

from .settings import Settings, settings, load_settings
from .constants import (
    DEFAULT_GRADIENT_SIGMA,
    DEFAULT_MAG_THRESHOLD,
    DEFAULT_CHAIN_DISTANCE,
    DEFAULT_RANSAC_P,
    DEFAULT_RANSAC_TOL,
    DEFAULT_REFINE_BOUNDARY,
    DEFAULT_ENDPOINT_RADIUS,
    DEFAULT_AFFINE_TOL,
    DEFAULT_OCTAGON_WIDTH_M,
    DEFAULT_BORDER_RATIO,
    DEFAULT_COND_MAX,
    DEFAULT_LOG_LEVEL,
)

__all__ = [
    "Settings",
    "settings",
    "load_settings",
    "DEFAULT_GRADIENT_SIGMA",
    "DEFAULT_MAG_THRESHOLD",
    "DEFAULT_CHAIN_DISTANCE",
    "DEFAULT_RANSAC_P",
    "DEFAULT_RANSAC_TOL",
    "DEFAULT_REFINE_BOUNDARY",
    "DEFAULT_ENDPOINT_RADIUS",
    "DEFAULT_AFFINE_TOL",
    "DEFAULT_OCTAGON_WIDTH_M",
    "DEFAULT_BORDER_RATIO",
    "DEFAULT_COND_MAX",
    "DEFAULT_LOG_LEVEL",
]
