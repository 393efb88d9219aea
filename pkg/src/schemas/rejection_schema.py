# src/schemas/rejection_schema.py

from enum import Enum


class RejectionReason(str, Enum):
    """Machine-readable reasons a detection does not yield a focal estimate"""

    NO_CONTOUR = "no-contour"  # no chain of red contour points
    EDGE_FIT_FAILURE = "edge-fit-failure"  # fewer than 8 supported edge lines
    CORNER_COUNT = "corner-count"  # intersection count != 8
    AFFINE_REJECT = "affine-reject"  # corners are not an affine octagon
    DEGENERATE_VIEW = "degenerate-view"  # near fronto-parallel or rank-deficient
    NEGATIVE_FOCAL = "negative-focal"  # 1/f^2 solved non-positive
