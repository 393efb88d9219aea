# tests/test_pipeline.py

"""
Tests for the calibration agent, report artifacts and the command line
"""

import csv
import dataclasses
import json
import time

import numpy as np
import pytest
from typer.testing import CliRunner

from src.agents.calibration_agent import CalibrationAgent, CalibrationAgentConfig
from src.lib.exceptions import IngestError
from src.schemas.detection_schema import DetectionRecord
from src.schemas.rejection_schema import RejectionReason
from src.tools.line_tools import EdgeFittingToolConfig
from src.tools.raster_tools import load_png
from src.tools.synth_tools import CameraPose, SceneRendererTool, SceneRendererToolConfig, SceneSpec, render_scene
from src.utils.report_writer import REJECTION_COLUMNS, TRAJECTORY_COLUMNS, load_report, write_report

GT = (1810.4, 1840.1)
SMALL_FRAME = {"width": 640, "height": 480, "lateral_m": 0.0}


def record_for(scene, frame="frame.png"):
    return DetectionRecord(frame=frame, box=scene.box, camera="cam0", ts=0.0)


def process(scene, agent=None, index=0):
    agent = agent or CalibrationAgent()
    return agent.process_detection(record_for(scene), index, image=scene.image)


def corner_errors(view, scene):
    """Squared corner distances to the renderer's truth"""
    return np.sum((np.asarray(view.corners) - scene.corners.corners) ** 2, axis=1)


def rendered_trials(n, seed, **spec_kwargs):
    """n small-frame scenes with random admissible poses and extra SceneSpec settings"""
    renderer = SceneRendererTool(SceneRendererToolConfig(**SMALL_FRAME))
    rng = np.random.default_rng(seed)
    for index in range(n):
        spec = renderer.scene_spec(rng, seed=index)
        yield render_scene(dataclasses.replace(spec, **spec_kwargs))


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


@pytest.fixture(scope="module")
def gt_agent():
    return CalibrationAgent(CalibrationAgentConfig(gt_fx=GT[0], gt_fy=GT[1]))


class TestProcessDetection:
    """Test single views through the whole chain"""

    def test_clean_view_accepted(self, clean_scene, gt_agent):
        spec, scene = clean_scene
        view = process(scene, gt_agent)

        assert view.accepted, view.detail
        assert view.reason is None
        assert abs(view.rel_err_fx) <= 0.01
        assert abs(view.rel_err_fy) <= 0.01
        assert view.reprojection_rms < 0.5
        assert 0.0 < view.fx_std < 0.05 * view.fx
        assert view.lines_refined >= 0
        assert len(view.corners) == 8

    def test_corners_close_to_truth(self, clean_scene):
        _, scene = clean_scene
        view = process(scene)
        assert np.sqrt(np.mean(corner_errors(view, scene))) <= 0.15

    def test_zero_noise_corner_rms(self):
        agent = CalibrationAgent()
        squared = []
        for index, scene in enumerate(rendered_trials(10, seed=21, contour_noise=0.0)):
            view = process(scene, agent, index)
            if view.accepted:
                squared.extend(corner_errors(view, scene))
        assert len(squared) >= 8 * 8
        assert np.sqrt(np.mean(squared)) <= 0.15

    def test_heavy_blur_corner_rms(self):
        agent = CalibrationAgent()
        squared = []
        for index, scene in enumerate(rendered_trials(20, seed=22, contour_noise=0.3, blur=2.0)):
            view = process(scene, agent, index)
            if view.accepted:
                squared.extend(corner_errors(view, scene))
        assert len(squared) >= 8 * 15
        assert np.sqrt(np.mean(squared)) <= 0.6

    def test_fronto_parallel_rejected(self, reference_intrinsics):
        """Zero tilt leaves the focal system without an fx/fy row"""
        scene = render_scene(SceneSpec(intrinsics=reference_intrinsics, pose=CameraPose.fronto_parallel(3.5)))
        view = process(scene)

        assert not view.accepted
        assert view.reason in {RejectionReason.DEGENERATE_VIEW, RejectionReason.NEGATIVE_FOCAL}

    def test_occluded_targets_rejected(self):
        expected = {
            RejectionReason.CORNER_COUNT,
            RejectionReason.AFFINE_REJECT,
            RejectionReason.EDGE_FIT_FAILURE,
        }
        agent = CalibrationAgent()
        reasons = [
            process(scene, agent, index).reason
            for index, scene in enumerate(rendered_trials(100, seed=31, occlusion_fraction=0.3))
        ]
        assert sum(reason in expected for reason in reasons) >= 99

    def test_perturbed_vertex_rejected(self):
        expected = {RejectionReason.AFFINE_REJECT, RejectionReason.CORNER_COUNT}
        agent = CalibrationAgent()
        trials = rendered_trials(100, seed=32, contour_noise=0.0, perturb_vertex=3, perturb_fraction=0.3)
        reasons = [process(scene, agent, index).reason for index, scene in enumerate(trials)]
        assert sum(reason in expected for reason in reasons) >= 99

    def test_time_per_scene(self):
        """Render plus calibrate of a full-size frame fits the 400-scenes-in-2-minutes budget"""
        renderer = SceneRendererTool(SceneRendererToolConfig(contour_noise=0.3))
        agent = CalibrationAgent()
        process(renderer.render(0, 0), agent)

        start = time.perf_counter()
        for index in range(1, 6):
            process(renderer.render(0, index), agent, index)
        assert (time.perf_counter() - start) / 5 < 0.3

    def test_background_box_has_no_contour(self, clean_scene):
        _, scene = clean_scene
        record = DetectionRecord.model_validate(
            {"frame": "f.png", "box": [5.0, 5.0, 60.0, 60.0], "camera": "cam0", "ts": 0.0}
        )
        view = CalibrationAgent().process_detection(record, 0, image=scene.image)

        assert not view.accepted
        assert view.reason == RejectionReason.NO_CONTOUR

    def test_unreadable_frame_becomes_rejection(self, clean_scene, tmp_path):
        _, scene = clean_scene
        view = CalibrationAgent().process_detection(record_for(scene), 0, frame_path=tmp_path / "gone.png")
        assert not view.accepted
        assert view.reason == RejectionReason.NO_CONTOUR

    def test_region_load_matches_full_frame(self, synth_dataset):
        record = DetectionRecord.model_validate(json.loads((synth_dataset / "detections.json").read_text())[0])
        path = synth_dataset / record.frame
        agent = CalibrationAgent()

        from_disk = agent.process_detection(record, 0, frame_path=path)
        in_memory = agent.process_detection(record, 0, image=load_png(path))
        assert from_disk == in_memory

    def test_same_index_is_reproducible(self, clean_scene):
        _, scene = clean_scene
        agent = CalibrationAgent()
        assert process(scene, agent, index=4) == process(scene, agent, index=4)


class TestCalibrate:
    """Test full runs over a dataset directory"""

    def test_rejection_totality(self, synth_dataset):
        report = CalibrationAgent().calibrate(synth_dataset)

        assert report.detections == 6
        assert report.accepted + sum(report.rejections.values()) == report.detections
        assert set(report.rejections) == {reason.value for reason in RejectionReason}
        assert sum(c.detections for c in report.cameras) == report.detections

    def test_artifacts_written(self, synth_dataset, tmp_path):
        out = tmp_path / "out"
        report = CalibrationAgent(CalibrationAgentConfig(gt_fx=GT[0], gt_fy=GT[1])).calibrate(synth_dataset, out)

        assert (out / "report.json").is_file()
        trajectory = read_csv(out / "trajectory_cam0.csv")
        assert trajectory[0] == TRAJECTORY_COLUMNS
        assert len(trajectory) == report.accepted + 1
        assert [int(row[-1]) for row in trajectory[1:]] == list(range(1, report.accepted + 1))

        rejections = read_csv(out / "rejections.csv")
        assert rejections[0] == REJECTION_COLUMNS
        assert len(rejections) == len(RejectionReason) + 1
        assert len(read_csv(out / "views.csv")) == report.detections + 1

    def test_same_seed_gives_identical_csvs(self, synth_dataset, tmp_path):
        config = CalibrationAgentConfig(seed=3)
        CalibrationAgent(config).calibrate(synth_dataset, tmp_path / "a")
        CalibrationAgent(config).calibrate(synth_dataset, tmp_path / "b")

        for name in ["trajectory_cam0.csv", "rejections.csv", "views.csv"]:
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_workers_do_not_change_result(self, synth_dataset):
        serial = CalibrationAgent(CalibrationAgentConfig(workers=1)).calibrate(synth_dataset)
        threaded = CalibrationAgent(CalibrationAgentConfig(workers=3)).calibrate(synth_dataset)
        assert threaded.model_dump() == serial.model_dump()

    def test_refinement_can_be_skipped(self, synth_dataset):
        agent = CalibrationAgent(CalibrationAgentConfig(edges=EdgeFittingToolConfig(refine_boundary=0.0)))
        report = agent.calibrate(synth_dataset)

        assert not report.refinement_enabled
        assert all(v.lines_refined == 0 for v in report.views)

    def test_ground_truth_columns_optional(self, synth_dataset):
        report = CalibrationAgent().calibrate(synth_dataset)
        assert all(v.rel_err_fx is None for v in report.views)
        assert all(c.rel_err_fx is None for c in report.cameras)

    def test_converges_on_rendered_batch(self, tmp_path):
        data = tmp_path / "data"
        SceneRendererTool(SceneRendererToolConfig(contour_noise=0.3, blur=1.0)).write_batch(data, 30, seed=11)
        report = CalibrationAgent(CalibrationAgentConfig(gt_fx=GT[0], gt_fy=GT[1], workers=4)).calibrate(data)

        camera = report.cameras[0]
        assert camera.accepted >= 15
        assert abs(camera.rel_err_fx) <= 0.05
        assert abs(camera.rel_err_fy) <= 0.05
        p11 = [point.p11 for point in camera.trajectory]
        assert p11[-1] < p11[0]

    def test_noise_does_not_raise_acceptance(self, tmp_path):
        """Acceptance may fluctuate by one scene but must not trend upward with noise"""
        accepted = []
        for sigma in [0.0, 1.0, 3.0]:
            data = tmp_path / f"noise_{sigma}"
            SceneRendererTool(SceneRendererToolConfig(contour_noise=sigma)).write_batch(data, 8, seed=2)
            accepted.append(CalibrationAgent(CalibrationAgentConfig(workers=4)).calibrate(data).accepted)

        assert accepted[1] <= accepted[0] + 1
        assert accepted[2] <= accepted[1] + 1


class TestReportWriter:
    """Test the JSON report round trip"""

    def test_load_report_round_trip(self, synth_dataset, tmp_path):
        report = CalibrationAgent(CalibrationAgentConfig(gt_fx=GT[0], gt_fy=GT[1])).calibrate(synth_dataset)
        write_report(report, tmp_path)
        assert load_report(tmp_path) == report

    def test_missing_report(self, tmp_path):
        with pytest.raises(IngestError, match="report not found"):
            load_report(tmp_path)

    def test_csv_is_crlf(self, synth_dataset, tmp_path):
        write_report(CalibrationAgent().calibrate(synth_dataset), tmp_path)
        assert b"\r\n" in (tmp_path / "rejections.csv").read_bytes()


class TestCli:
    """Test the typer commands"""

    @pytest.fixture
    def runner(self, mocker):
        mocker.patch("main.setup_logging")
        return CliRunner()

    def test_synth_calibrate_report(self, runner, tmp_path):
        from main import app

        data, out = tmp_path / "data", tmp_path / "out"
        result = runner.invoke(app, ["synth", "--scenes", "4", "--noise", "0.3", "--out", str(data), "--seed", "1"])
        assert result.exit_code == 0, result.output
        assert len(json.loads((data / "detections.json").read_text())) == 4

        result = runner.invoke(
            app, ["calibrate", str(data), "--out", str(out), "--seed", "5", "--gt", "1810.4,1840.1"]
        )
        assert result.exit_code == 0, result.output
        report = load_report(out)
        assert report.seed == 5
        assert report.gt_fx == pytest.approx(1810.4)

        result = runner.invoke(app, ["report", str(out)])
        assert result.exit_code == 0, result.output
        assert "cam0" in result.output
        assert "cam0: an object at 50 m is placed between" in result.output

    def test_config_file_is_used(self, runner, synth_dataset, tmp_path):
        from main import app

        config = tmp_path / "octcal.cfg"
        config.write_text("# run settings\nrefine_boundary = 0.0\nseed = 9\n", encoding="utf-8")
        out = tmp_path / "out"
        result = runner.invoke(app, ["calibrate", str(synth_dataset), "--config", str(config), "--out", str(out)])

        assert result.exit_code == 0, result.output
        report = load_report(out)
        assert report.seed == 9
        assert not report.refinement_enabled

    def test_bad_config_exits_with_error(self, runner, synth_dataset, tmp_path, caplog):
        from main import app

        config = tmp_path / "bad.cfg"
        config.write_text("seed = 1\naffine_tol = -3\n", encoding="utf-8")
        result = runner.invoke(app, ["calibrate", str(synth_dataset), "--config", str(config)])

        assert result.exit_code == 1
        assert "bad.cfg:2: affine_tol" in caplog.text

    def test_bad_ground_truth_is_usage_error(self, runner, synth_dataset):
        from main import app

        result = runner.invoke(app, ["calibrate", str(synth_dataset), "--gt", "1810.4"])
        assert result.exit_code == 2

    def test_report_on_empty_directory(self, runner, tmp_path):
        from main import app

        assert runner.invoke(app, ["report", str(tmp_path)]).exit_code == 1
