# src/schemas/detection_schema.py

from typing import List

from pydantic import BaseModel, Field, field_validator


class BoundingBox(BaseModel):
    """Axis-aligned box in pixels, (x, y) is the top-left corner"""

    x: float = Field(..., description="Left edge (px)")
    y: float = Field(..., description="Top edge (px)")
    w: float = Field(..., gt=0.0, description="Width (px)")
    h: float = Field(..., gt=0.0, description="Height (px)")

    @classmethod
    def from_list(cls, values: List[float]) -> "BoundingBox":
        if len(values) != 4:
            raise ValueError(f"box must have 4 values [x, y, w, h], got {len(values)}")
        x, y, w, h = (float(v) for v in values)
        return cls(x=x, y=y, w=w, h=h)

    def to_list(self) -> List[float]:
        return [self.x, self.y, self.w, self.h]

    @property
    def center(self) -> tuple[float, float]:
        return self.x + self.w / 2.0, self.y + self.h / 2.0

    def padded(self, fraction: float) -> "BoundingBox":
        """Grow the box by `fraction` of its size on every side"""
        dx, dy = self.w * fraction, self.h * fraction
        return BoundingBox(x=self.x - dx, y=self.y - dy, w=self.w + 2 * dx, h=self.h + 2 * dy)

    def clipped(self, width: int, height: int) -> "BoundingBox":
        """Intersect with the [0, width) x [0, height) frame"""
        x0, y0 = max(self.x, 0.0), max(self.y, 0.0)
        x1, y1 = min(self.x + self.w, float(width)), min(self.y + self.h, float(height))
        if x1 <= x0 or y1 <= y0:
            raise ValueError(f"box {self.to_list()} lies outside the {width}x{height} frame")
        return BoundingBox(x=x0, y=y0, w=x1 - x0, h=y1 - y0)

    def contains(self, x: float, y: float) -> bool:
        return self.x <= x <= self.x + self.w and self.y <= y <= self.y + self.h


class DetectionRecord(BaseModel):
    """One octagonal target detected in one frame"""

    frame: str = Field(..., description="Path to the PNG frame")
    box: BoundingBox
    camera: str = Field(..., min_length=1, description="Camera identifier")
    ts: float = Field(..., description="Timestamp (s)")

    @field_validator("box", mode="before")
    @classmethod
    def _box_from_list(cls, value):
        if isinstance(value, (list, tuple)):
            return BoundingBox.from_list(list(value))
        return value
