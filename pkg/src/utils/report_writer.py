# src/utils/report_writer.py

"""
Report artifacts: report.json, one trajectory CSV per camera, the rejection
histogram and a per-view table. CSVs follow RFC 4180 and print floats with
repr() so identical runs give identical bytes.
"""

import csv
import logging
import re
from pathlib import Path
from typing import Dict, Iterable, List, Union

from pydantic import ValidationError

from src.config.constants import (
    DEFAULT_REJECTIONS_FILE,
    DEFAULT_REPORT_FILE,
    DEFAULT_TRAJECTORY_PREFIX,
    DEFAULT_VIEWS_FILE,
)
from src.lib.exceptions import IngestError
from src.schemas.report_schema import CalibrationReport

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ["t", "fx", "fy", "P11", "P22", "accepted_count"]
REJECTION_COLUMNS = ["reason", "count"]
VIEW_COLUMNS = [
    "index",
    "frame",
    "camera",
    "ts",
    "accepted",
    "reason",
    "fx",
    "fy",
    "reprojection_rms",
    "fx_std",
    "fy_std",
    "lines_refined",
    "rel_err_fx",
    "rel_err_fy",
]


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _write_csv(path: Path, header: List[str], rows: Iterable[Iterable]) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])


def trajectory_filename(camera: str) -> str:
    return f"{DEFAULT_TRAJECTORY_PREFIX}{re.sub(r'[^A-Za-z0-9_.-]', '_', camera)}.csv"


def write_report(report: CalibrationReport, out_dir: Union[str, Path]) -> Dict[str, Path]:
    """Write every artifact into out_dir, returning their paths by name"""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: Dict[str, Path] = {}

    paths["report"] = out / DEFAULT_REPORT_FILE
    paths["report"].write_text(report.model_dump_json(indent=2), encoding="utf-8")

    for camera in report.cameras:
        path = out / trajectory_filename(camera.camera)
        _write_csv(
            path,
            TRAJECTORY_COLUMNS,
            ([p.t, p.fx, p.fy, p.p11, p.p22, p.accepted_count] for p in camera.trajectory),
        )
        paths[f"trajectory:{camera.camera}"] = path

    paths["rejections"] = out / DEFAULT_REJECTIONS_FILE
    _write_csv(paths["rejections"], REJECTION_COLUMNS, sorted(report.rejections.items()))

    paths["views"] = out / DEFAULT_VIEWS_FILE
    _write_csv(
        paths["views"],
        VIEW_COLUMNS,
        (
            [
                v.index,
                v.frame,
                v.camera,
                v.ts,
                v.accepted,
                v.reason,
                v.fx,
                v.fy,
                v.reprojection_rms,
                v.fx_std,
                v.fy_std,
                v.lines_refined,
                v.rel_err_fx,
                v.rel_err_fy,
            ]
            for v in report.views
        ),
    )

    logger.info(f"Wrote {len(paths)} report artifact(s) to {out}")
    return paths


def load_report(out_dir: Union[str, Path]) -> CalibrationReport:
    """Read report.json back from an output directory"""
    path = Path(out_dir)
    if path.is_dir():
        path = path / DEFAULT_REPORT_FILE
    if not path.is_file():
        raise IngestError(f"{path}: report not found")
    try:
        return CalibrationReport.model_validate_json(path.read_text(encoding="utf-8"))
    except ValidationError as e:
        raise IngestError(f"{path}: invalid report: {e.errors()[0]['msg']}") from e
