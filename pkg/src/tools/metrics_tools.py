# src/tools/metrics_tools.py

"""Relative focal error and its effect on monocular depth."""

from typing import Optional, Sequence, Tuple

import numpy as np

from src.schemas.report_schema import ErrorStats


def relative_error(f: float, f_gt: float) -> float:
    """Signed (f - f_gt) / f_gt"""
    if f_gt <= 0:
        raise ValueError(f"ground-truth focal length must be positive, got {f_gt}")
    return (f - f_gt) / f_gt


def depth_from_focal(f: float, x: float, u: float) -> float:
    """Depth Z = f X / u of a point at lateral offset X (m) imaged u pixels off-center"""
    if u == 0:
        raise ValueError("u must be non-zero")
    return f * x / u


def depth_bounds(z: float, eps: float) -> Tuple[float, float]:
    """Range of true depths consistent with depth z under a focal error of +/- eps"""
    if not 0.0 <= eps < 1.0:
        raise ValueError(f"eps must be in [0, 1), got {eps}")
    return z / (1.0 + eps), z / (1.0 - eps)


def error_stats(errors: Sequence[float]) -> Optional[ErrorStats]:
    """Mean and population standard deviation, None for an empty sequence"""
    if not errors:
        return None
    values = np.asarray(errors, dtype=np.float64)
    return ErrorStats(mean=float(values.mean()), std=float(values.std()), count=len(values))
