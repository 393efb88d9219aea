# src/lib/exceptions.py

"""
Exception hierarchy.

Operational errors (bad input files, invalid config) propagate to the caller.
DetectionRejected subclasses mark a single view that cannot be used for
calibration; the pipeline turns them into rejection records.
"""

from src.schemas.rejection_schema import RejectionReason


class OctagonCalibError(Exception):
    """Base class for all package errors"""


class ConfigError(OctagonCalibError):
    """Invalid or malformed configuration"""


class RasterError(OctagonCalibError):
    """Unreadable image or invalid raster operation"""


class IngestError(OctagonCalibError):
    """Dataset directory cannot be ingested"""


class SynthError(OctagonCalibError):
    """Invalid synthetic scene request"""


class FilterError(OctagonCalibError):
    """Invalid Kalman filter input"""


class HomographyError(OctagonCalibError):
    """Homography cannot be estimated or applied"""


class DetectionRejected(OctagonCalibError):
    """A detection was rejected; `reason` says which stage refused it"""

    reason: RejectionReason = RejectionReason.DEGENERATE_VIEW

    def __init__(self, message: str = ""):
        super().__init__(message or self.reason.value)


class NoContourError(DetectionRejected):
    reason = RejectionReason.NO_CONTOUR


class EdgeFitError(DetectionRejected):
    reason = RejectionReason.EDGE_FIT_FAILURE


class CornerCountError(DetectionRejected):
    reason = RejectionReason.CORNER_COUNT


class AffineRejectError(DetectionRejected):
    reason = RejectionReason.AFFINE_REJECT


class DegenerateViewError(DetectionRejected):
    reason = RejectionReason.DEGENERATE_VIEW


class NegativeFocalError(DetectionRejected):
    reason = RejectionReason.NEGATIVE_FOCAL
