# src/schemas/camera_schema.py

import numpy as np
from pydantic import BaseModel, Field


class Intrinsics(BaseModel):
    """Skewless pinhole intrinsics; the principal point is held at the image center"""

    fx: float = Field(..., gt=0.0, description="Horizontal focal length (px)")
    fy: float = Field(..., gt=0.0, description="Vertical focal length (px)")
    cx: float = Field(..., description="Principal point x (px)")
    cy: float = Field(..., description="Principal point y (px)")

    @classmethod
    def centered(cls, fx: float, fy: float, width: int, height: int) -> "Intrinsics":
        """Intrinsics with the principal point at the center of a width x height frame"""
        cx, cy = principal_point(width, height)
        return cls(fx=fx, fy=fy, cx=cx, cy=cy)

    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, 0.0, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]])


def principal_point(width: int, height: int) -> tuple[float, float]:
    """Image center with pixel centers at integer coordinates"""
    return (width - 1) / 2.0, (height - 1) / 2.0
