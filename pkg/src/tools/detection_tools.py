# src/tools/detection_tools.py

"""
Dataset ingestion: detection records from detections.json, or from a
red-blob fallback detector when the directory has no detections file.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from PIL import Image as PILImage
from pydantic import Field, ValidationError
from scipy import ndimage

from src.config.constants import (
    DEFAULT_CAMERA_ID,
    DEFAULT_DETECTIONS_FILE,
    DEFAULT_FALLBACK_ASPECT_MAX,
    DEFAULT_FALLBACK_ASPECT_MIN,
    DEFAULT_FALLBACK_DILATION,
    DEFAULT_FALLBACK_MIN_AREA,
    DEFAULT_USE_FALLBACK_DETECTOR,
)
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import IngestError, RasterError
from src.schemas.detection_schema import BoundingBox, DetectionRecord
from src.tools.raster_tools import Image, RedThresholds, load_png, red_mask, rgb_to_hsv

logger = logging.getLogger(__name__)


@dataclass
class IngestResult:
    dataset_dir: Path
    records: List[DetectionRecord] = field(default_factory=list)
    missing_frames: int = 0
    invalid_boxes: int = 0

    def frame_path(self, record: DetectionRecord) -> Path:
        path = Path(record.frame)
        return path if path.is_absolute() else self.dataset_dir / path


def fallback_detect(
    img: Image,
    thresholds: RedThresholds = RedThresholds(),
    min_area: int = DEFAULT_FALLBACK_MIN_AREA,
    aspect_range: Tuple[float, float] = (DEFAULT_FALLBACK_ASPECT_MIN, DEFAULT_FALLBACK_ASPECT_MAX),
    dilation: float = DEFAULT_FALLBACK_DILATION,
) -> List[BoundingBox]:
    """
    Boxes around red connected components

    Components need at least min_area pixels and a width/height ratio inside
    aspect_range; each box is grown by `dilation` of its size per side and
    clipped to the frame. Boxes come back in raster order of their top-left.
    """
    if img.channels != 3:
        return []
    mask = red_mask(rgb_to_hsv(img), thresholds)
    labels, count = ndimage.label(mask.bits)
    boxes: List[BoundingBox] = []
    for index, region in enumerate(ndimage.find_objects(labels), start=1):
        if region is None:
            continue
        rows, cols = region
        area = int(np.sum(labels[region] == index))
        h, w = rows.stop - rows.start, cols.stop - cols.start
        if area < min_area or not aspect_range[0] <= w / h <= aspect_range[1]:
            continue
        box = BoundingBox(x=cols.start, y=rows.start, w=w, h=h)
        boxes.append(box.padded(dilation).clipped(img.width, img.height))

    boxes.sort(key=lambda b: (b.y, b.x))
    logger.debug(f"Fallback detector: {len(boxes)} box(es) from {count} red component(s)")
    return boxes


def _frame_size(path: Path) -> Tuple[int, int]:
    try:
        with PILImage.open(path) as pil:
            return pil.size
    except OSError as e:
        raise RasterError(f"{path}: cannot read image: {e}") from e


def _load_detections(path: Path) -> List[DetectionRecord]:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise IngestError(f"{path}:{e.lineno}: malformed JSON: {e.msg}") from e
    if not isinstance(raw, list):
        raise IngestError(f"{path}: expected a JSON array of detections")

    records = []
    for i, item in enumerate(raw):
        try:
            records.append(DetectionRecord.model_validate(item))
        except ValidationError as e:
            err = e.errors()[0]
            loc = ".".join(str(p) for p in err["loc"])
            raise IngestError(f"{path}: detection {i}: {loc}: {err['msg']}") from e
    return records


def _fallback_records(dataset_dir: Path, cfg: "DetectionToolConfig") -> List[DetectionRecord]:
    records = []
    for ts, png in enumerate(sorted(dataset_dir.glob("*.png"))):
        boxes = fallback_detect(
            load_png(png),
            cfg.thresholds,
            cfg.min_area,
            (cfg.aspect_min, cfg.aspect_max),
            cfg.dilation,
        )
        records.extend(
            DetectionRecord(frame=png.name, box=box, camera=DEFAULT_CAMERA_ID, ts=float(ts)) for box in boxes
        )
    return records


class DetectionToolConfig(BaseToolConfig):
    """Ingestion and fallback detector settings"""

    use_fallback: bool = Field(default=DEFAULT_USE_FALLBACK_DETECTOR)
    thresholds: RedThresholds = Field(default_factory=RedThresholds)
    min_area: int = Field(default=DEFAULT_FALLBACK_MIN_AREA, ge=1)
    aspect_min: float = Field(default=DEFAULT_FALLBACK_ASPECT_MIN, gt=0.0)
    aspect_max: float = Field(default=DEFAULT_FALLBACK_ASPECT_MAX, gt=0.0)
    dilation: float = Field(default=DEFAULT_FALLBACK_DILATION, ge=0.0)


class DetectionTool(BaseTool):
    """Reads a dataset directory into timestamp-ordered detection records"""

    def __init__(self, config: DetectionToolConfig = None):
        super().__init__(config or DetectionToolConfig())

    def ingest(self, dataset_dir: Union[str, Path]) -> IngestResult:
        """
        Load detections.json (or run the fallback detector) and check frames

        Records whose PNG is missing or whose box lies outside the frame are
        skipped with a warning and counted.

        Raises:
            IngestError: missing directory, malformed JSON, or no usable records
        """
        root = Path(dataset_dir)
        if not root.is_dir():
            raise IngestError(f"{root}: not a directory")

        detections_file = root / DEFAULT_DETECTIONS_FILE
        if detections_file.is_file():
            records = _load_detections(detections_file)
        elif self.config.use_fallback:
            logger.info(f"No {DEFAULT_DETECTIONS_FILE} in {root}, running fallback detector")
            records = _fallback_records(root, self.config)
        else:
            raise IngestError(f"{root}: no {DEFAULT_DETECTIONS_FILE} and fallback detector disabled")

        if not records:
            raise IngestError(f"{root}: no detection records")

        result = IngestResult(dataset_dir=root)
        for record in records:
            frame = result.frame_path(record)
            if not frame.is_file():
                logger.warning(f"Frame {frame} not found, skipping detection")
                result.missing_frames += 1
                continue
            width, height = _frame_size(frame)
            try:
                record.box.clipped(width, height)
            except ValueError as e:
                logger.warning(f"Skipping detection in {record.frame}: {e}")
                result.invalid_boxes += 1
                continue
            result.records.append(record)

        if not result.records:
            raise IngestError(f"{root}: none of {len(records)} detection(s) has a usable frame")

        result.records.sort(key=lambda r: r.ts)
        logger.info(
            f"Ingested {len(result.records)} detection(s) from {root} "
            f"({result.missing_frames} missing frame(s), {result.invalid_boxes} invalid box(es))"
        )
        return result

    def run(self, dataset_dir: Union[str, Path], **kwargs) -> IngestResult:
        """Required by BaseTool - returns ingested records"""
        return self.ingest(dataset_dir)


def ingest(
    dataset_dir: Union[str, Path], use_fallback: bool = DEFAULT_USE_FALLBACK_DETECTOR
) -> IngestResult:
    """Ingest with default detector settings"""
    return DetectionTool(DetectionToolConfig(use_fallback=use_fallback)).ingest(dataset_dir)
