# src/agents/calibration_agent.py

import logging
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, List, Optional, Union

import numpy as np
from pydantic import Field

from src.config.constants import DEFAULT_ROI_PADDING, DEFAULT_SEED, DEFAULT_WORKERS
from src.config.settings import Settings
from src.lib.base_agent import BaseAgent, BaseAgentConfig
from src.lib.exceptions import DetectionRejected, HomographyError, RasterError
from src.schemas.camera_schema import principal_point
from src.schemas.detection_schema import DetectionRecord
from src.schemas.rejection_schema import RejectionReason
from src.schemas.report_schema import CalibrationReport, CameraSummary, TrajectoryPoint, ViewResult
from src.tools.calib_tools import PlanarCalibrationTool, PlanarCalibrationToolConfig
from src.tools.detection_tools import DetectionTool, DetectionToolConfig
from src.tools.edge_tools import ContourTool, ContourToolConfig
from src.tools.filter_tools import FocalObservation, KalmanFilterTool, KalmanFilterToolConfig
from src.tools.line_tools import EdgeFittingTool, EdgeFittingToolConfig, RansacConfig
from src.tools.metrics_tools import error_stats, relative_error
from src.tools.octagon_tools import OctagonTool, OctagonToolConfig
from src.tools.raster_tools import Image, RasterTool, RasterToolConfig, RedThresholds, load_png, png_size
from src.utils.report_writer import write_report

logger = logging.getLogger(__name__)


def view_observation(view: ViewResult) -> FocalObservation:
    """Filter input for an accepted view; missing uncertainties count as 0"""
    var_fx = view.fx_std**2 if view.fx_std is not None else 0.0
    var_fy = view.fy_std**2 if view.fy_std is not None else 0.0
    return FocalObservation(view.fx, view.fy, view.reprojection_rms or 0.0, var_fx, var_fy)


class CalibrationAgentConfig(BaseAgentConfig):
    """Configuration for the calibration pipeline"""

    raster: RasterToolConfig = Field(default_factory=RasterToolConfig)
    contour: ContourToolConfig = Field(default_factory=ContourToolConfig)
    edges: EdgeFittingToolConfig = Field(default_factory=EdgeFittingToolConfig)
    octagon: OctagonToolConfig = Field(default_factory=OctagonToolConfig)
    calibration: PlanarCalibrationToolConfig = Field(default_factory=PlanarCalibrationToolConfig)
    kalman: KalmanFilterToolConfig = Field(default_factory=KalmanFilterToolConfig)
    detection: DetectionToolConfig = Field(default_factory=DetectionToolConfig)

    seed: int = Field(default=DEFAULT_SEED)
    roi_padding: float = Field(default=DEFAULT_ROI_PADDING, ge=0.0)
    workers: int = Field(default=DEFAULT_WORKERS, ge=1)
    gt_fx: Optional[float] = Field(default=None, gt=0.0)
    gt_fy: Optional[float] = Field(default=None, gt=0.0)

    @classmethod
    def from_settings(cls, s: Settings) -> "CalibrationAgentConfig":
        thresholds = RedThresholds(
            hue_low=s.hue_low, hue_high=s.hue_high, sat_min=s.sat_min, val_min=s.val_min, val_max=s.val_max
        )
        return cls(
            raster=RasterToolConfig(sigma=s.gradient_sigma, thresholds=thresholds),
            contour=ContourToolConfig(mag_threshold=s.mag_threshold, chain_distance=s.chain_distance),
            edges=EdgeFittingToolConfig(
                ransac=RansacConfig(
                    p=s.ransac_p,
                    tol=s.ransac_tol,
                    max_pairs_cap=s.ransac_pairs_cap,
                    min_support=s.ransac_min_support,
                    min_iterations=s.ransac_min_iterations,
                ),
                refine_samples=s.refine_samples,
                refine_boundary=s.refine_boundary,
                border_ratio=s.border_ratio,
            ),
            octagon=OctagonToolConfig(endpoint_radius=s.endpoint_radius, affine_tol=s.affine_tol),
            calibration=PlanarCalibrationToolConfig(
                octagon_width_m=s.octagon_width_m,
                border_ratio=s.border_ratio,
                cond_max=s.cond_max,
                corner_sigma_min=s.corner_sigma_min,
            ),
            kalman=KalmanFilterToolConfig(
                q_std=s.kalman_q_std,
                r0_rel=s.kalman_r0_rel,
                r_min_rel=s.kalman_r_min_rel,
                r_decay=s.kalman_r_decay,
                quality_weighting=s.kalman_quality_weighting,
            ),
            detection=DetectionToolConfig(
                use_fallback=s.use_fallback_detector, thresholds=thresholds, min_area=s.fallback_min_area
            ),
            seed=s.seed,
            roi_padding=s.roi_padding,
            workers=s.workers,
            gt_fx=s.gt_fx,
            gt_fy=s.gt_fy,
        )


class CalibrationAgent(BaseAgent):
    """
    Agent responsible for:
    1. Ingesting frames and detections
    2. Turning each detection into a per-view (fx, fy) or a rejection
    3. Folding accepted views into one Kalman filter per camera
    4. Writing the report artifacts
    """

    def __init__(self, config: CalibrationAgentConfig = None):
        config = config or CalibrationAgentConfig()
        self.raster_tool = RasterTool(config.raster)
        self.contour_tool = ContourTool(config.contour)
        self.edge_tool = EdgeFittingTool(config.edges)
        self.octagon_tool = OctagonTool(config.octagon)
        self.calibration_tool = PlanarCalibrationTool(config.calibration)
        self.filter_tool = KalmanFilterTool(config.kalman)
        self.detection_tool = DetectionTool(config.detection)
        super().__init__(config)

    @property
    def refinement_enabled(self) -> bool:
        return self.edge_tool.refinement_enabled

    def process_detection(
        self,
        record: DetectionRecord,
        index: int,
        image: Optional[Image] = None,
        frame_path: Optional[Union[str, Path]] = None,
    ) -> ViewResult:
        """
        Run one detection through mask, contour, edges, corners and calibration

        Never raises for a bad view: every failure becomes a rejected ViewResult.
        The RANSAC stream is seeded from (seed, index) so results do not depend
        on worker scheduling.
        """
        base = {"index": index, "frame": record.frame, "camera": record.camera, "ts": record.ts}
        try:
            path = frame_path or record.frame
            width, height = (image.width, image.height) if image is not None else png_size(path)
            roi_box = record.box.padded(self.config.roi_padding).clipped(width, height)
            x0, y0 = int(math.floor(roi_box.x)), int(math.floor(roi_box.y))
            x1, y1 = int(math.ceil(roi_box.x + roi_box.w)), int(math.ceil(roi_box.y + roi_box.h))
            if image is None:
                roi = load_png(path, region=(x0, y0, x1, y1))
            else:
                roi = image.crop(x0, y0, x1, y1)

            _, mask_grad = self.raster_tool.mask_gradient(roi)
            center = (record.box.center[0] - x0, record.box.center[1] - y0)
            contour = self.contour_tool.extract(mask_grad, center)

            rng = np.random.default_rng([self.config.seed, index])
            image_grad = self.raster_tool.image_gradient(roi) if self.refinement_enabled else None
            lines, refined = self.edge_tool.fit(contour.xy(), rng, image_grad)

            corners = self.octagon_tool.corners(lines, record.frame).translated(x0, y0)
            cx, cy = principal_point(width, height)
            measurement = self.calibration_tool.calibrate(corners, cx, cy)
        except DetectionRejected as e:
            logger.info(f"Detection {index} ({record.frame}) rejected: {e.reason.value}: {e}")
            return ViewResult(**base, accepted=False, reason=e.reason, detail=str(e))
        except HomographyError as e:
            logger.info(f"Detection {index} ({record.frame}) rejected: degenerate homography: {e}")
            reason = RejectionReason.DEGENERATE_VIEW
            return ViewResult(**base, accepted=False, reason=reason, detail=str(e))
        except (RasterError, ValueError) as e:
            logger.warning(f"Detection {index} ({record.frame}) unusable: {e}")
            return ViewResult(**base, accepted=False, reason=RejectionReason.NO_CONTOUR, detail=str(e))

        result = ViewResult(
            **base,
            accepted=True,
            fx=measurement.fx,
            fy=measurement.fy,
            reprojection_rms=measurement.reprojection_rms,
            fx_std=measurement.fx_std,
            fy_std=measurement.fy_std,
            lines_refined=refined,
            corners=corners.corners.tolist(),
        )
        if self.config.gt_fx is not None:
            result.rel_err_fx = relative_error(measurement.fx, self.config.gt_fx)
        if self.config.gt_fy is not None:
            result.rel_err_fy = relative_error(measurement.fy, self.config.gt_fy)
        logger.debug(f"Detection {index} accepted: fx={measurement.fx:.1f}, fy={measurement.fy:.1f}")
        return result

    def summarize_camera(self, camera: str, views: List[ViewResult]) -> CameraSummary:
        """Filter one camera's accepted views in order and collect its statistics"""
        accepted = [v for v in views if v.accepted]
        summary = CameraSummary(camera=camera, detections=len(views), accepted=len(accepted))
        if not accepted:
            logger.warning(f"Camera {camera}: no accepted views, nothing to filter")
            return summary

        trajectory = self.filter_tool.filter([view_observation(v) for v in accepted])
        summary.trajectory = [
            TrajectoryPoint(
                t=t,
                fx=float(state.x[0]),
                fy=float(state.x[1]),
                p11=float(state.P[0, 0]),
                p22=float(state.P[1, 1]),
                accepted_count=state.t,
            )
            for t, state in enumerate(trajectory)
        ]
        summary.final_fx, summary.final_fy = summary.trajectory[-1].fx, summary.trajectory[-1].fy

        if self.config.gt_fx is not None:
            summary.rel_err_fx = relative_error(summary.final_fx, self.config.gt_fx)
            summary.raw_fx_errors = error_stats([v.rel_err_fx for v in accepted])
        if self.config.gt_fy is not None:
            summary.rel_err_fy = relative_error(summary.final_fy, self.config.gt_fy)
            summary.raw_fy_errors = error_stats([v.rel_err_fy for v in accepted])
        return summary

    def calibrate(
        self, dataset_dir: Union[str, Path], out_dir: Optional[Union[str, Path]] = None
    ) -> CalibrationReport:
        """
        Full run: parallel per-view map, then an ordered per-camera filter fold

        Args:
            dataset_dir: Directory with PNG frames and detections.json
            out_dir: Where to write report.json and the CSV artifacts (optional)

        Returns:
            The calibration report
        """
        ingested = self.detection_tool.ingest(dataset_dir)
        records = ingested.records
        logger.info(f"Processing {len(records)} detection(s) with {self.config.workers} worker(s)")

        def work(index: int) -> ViewResult:
            record = records[index]
            return self.process_detection(record, index, frame_path=ingested.frame_path(record))

        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                views = list(pool.map(work, range(len(records))))
        else:
            views = [work(i) for i in range(len(records))]

        by_camera: Dict[str, List[ViewResult]] = defaultdict(list)
        for view in views:
            by_camera[view.camera].append(view)
        cameras = [self.summarize_camera(cam, by_camera[cam]) for cam in sorted(by_camera)]

        rejections = {reason.value: 0 for reason in RejectionReason}
        for view in views:
            if not view.accepted:
                rejections[view.reason.value] += 1

        report = CalibrationReport(
            seed=self.config.seed,
            refinement_enabled=self.refinement_enabled,
            detections=len(views),
            accepted=sum(v.accepted for v in views),
            missing_frames=ingested.missing_frames,
            invalid_boxes=ingested.invalid_boxes,
            gt_fx=self.config.gt_fx,
            gt_fy=self.config.gt_fy,
            rejections=rejections,
            views=views,
            cameras=cameras,
        )
        logger.info(f"Calibration finished: {report.accepted}/{report.detections} view(s) accepted")

        if out_dir is not None:
            write_report(report, out_dir)
        return report

    def process(
        self, dataset_dir: Union[str, Path], out_dir: Optional[Union[str, Path]] = None, **kwargs
    ):
        """Required by BaseAgent - runs the calibration pipeline"""
        return self.calibrate(dataset_dir, out_dir)
