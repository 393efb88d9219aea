# src/schemas/report_schema.py

from typing import Dict, List, Optional

from pydantic import BaseModel, Field

from src.schemas.rejection_schema import RejectionReason


class ViewResult(BaseModel):
    """Outcome of calibrating from a single detection"""

    index: int = Field(..., description="Detection index in timestamp order")
    frame: str
    camera: str
    ts: float
    accepted: bool
    reason: Optional[RejectionReason] = Field(None, description="Set when rejected")
    detail: Optional[str] = Field(None, description="Human-readable rejection detail")

    fx: Optional[float] = None
    fy: Optional[float] = None
    reprojection_rms: Optional[float] = Field(None, description="Homography RMS residual (px)")
    fx_std: Optional[float] = Field(None, description="Propagated standard deviation of fx (px)")
    fy_std: Optional[float] = Field(None, description="Propagated standard deviation of fy (px)")
    lines_refined: int = Field(default=0, description="Edge lines moved by refinement")
    corners: Optional[List[List[float]]] = Field(None, description="Ordered corners (px)")

    # Relative errors, only when ground truth is supplied
    rel_err_fx: Optional[float] = None
    rel_err_fy: Optional[float] = None


class TrajectoryPoint(BaseModel):
    """Filtered estimate after one accepted measurement"""

    t: int
    fx: float
    fy: float
    p11: float
    p22: float
    accepted_count: int


class ErrorStats(BaseModel):
    """Mean and standard deviation of per-view relative errors"""

    mean: float
    std: float
    count: int


class CameraSummary(BaseModel):
    """Per-camera calibration outcome"""

    camera: str
    detections: int
    accepted: int
    final_fx: Optional[float] = None
    final_fy: Optional[float] = None
    rel_err_fx: Optional[float] = None
    rel_err_fy: Optional[float] = None
    raw_fx_errors: Optional[ErrorStats] = None
    raw_fy_errors: Optional[ErrorStats] = None
    trajectory: List[TrajectoryPoint] = Field(default_factory=list)


class CalibrationReport(BaseModel):
    """Complete result of a calibration run"""

    seed: int
    refinement_enabled: bool = Field(..., description="False when refine_boundary is 0")
    detections: int
    accepted: int
    missing_frames: int = 0
    invalid_boxes: int = 0
    gt_fx: Optional[float] = None
    gt_fy: Optional[float] = None

    rejections: Dict[str, int] = Field(default_factory=dict, description="Count per reason")
    views: List[ViewResult] = Field(default_factory=list)
    cameras: List[CameraSummary] = Field(default_factory=list)
