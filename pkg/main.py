# main.py

import logging
from typing import Optional, Tuple

import typer
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.agents.calibration_agent import CalibrationAgent, CalibrationAgentConfig
from src.config.constants import (
    DEFAULT_CAMERA_ID,
    DEFAULT_REPORT_DEPTH_M,
    DEFAULT_SYNTH_BLUR,
    DEFAULT_SYNTH_CONTOUR_NOISE,
    DEFAULT_SYNTH_TILT_MAX_DEG,
    DEFAULT_SYNTH_TILT_MIN_DEG,
)
from src.config.settings import load_settings, settings
from src.schemas.report_schema import CalibrationReport
from src.tools.metrics_tools import depth_bounds
from src.tools.synth_tools import SceneRendererTool, SceneRendererToolConfig
from src.utils.logging_config import setup_logging
from src.utils.report_writer import load_report

logger = logging.getLogger(__name__)

app = typer.Typer(help="Octagon autocalib - camera focal length self-calibration from stop-sign views")
console = Console()


def parse_gt(value: Optional[str]) -> Tuple[Optional[float], Optional[float]]:
    """'fx,fy' -> (fx, fy)"""
    if not value:
        return None, None
    parts = [p.strip() for p in value.split(",")]
    if len(parts) != 2:
        raise typer.BadParameter(f"expected 'fx,fy', got {value!r}")
    try:
        return float(parts[0]), float(parts[1])
    except ValueError as e:
        raise typer.BadParameter(f"expected two numbers, got {value!r}") from e


def _fmt(value: Optional[float], spec: str = ".2f") -> str:
    return "-" if value is None else format(value, spec)


def print_report(report: CalibrationReport) -> None:
    """Per-camera summary and rejection histogram"""
    table = Table(title="Calibration Results")
    table.add_column("Camera", style="cyan")
    table.add_column("Detections", justify="right")
    table.add_column("Accepted", justify="right")
    table.add_column("fx (px)", style="magenta", justify="right")
    table.add_column("fy (px)", style="magenta", justify="right")
    table.add_column("err fx", justify="right")
    table.add_column("err fy", justify="right")
    for cam in report.cameras:
        table.add_row(
            cam.camera,
            str(cam.detections),
            str(cam.accepted),
            _fmt(cam.final_fx),
            _fmt(cam.final_fy),
            _fmt(cam.rel_err_fx, "+.2%"),
            _fmt(cam.rel_err_fy, "+.2%"),
        )
    console.print(table)

    histogram = Table(title="Rejections")
    histogram.add_column("Reason", style="cyan")
    histogram.add_column("Count", style="magenta", justify="right")
    for reason, count in sorted(report.rejections.items()):
        histogram.add_row(reason, str(count))
    console.print(histogram)

    refinement = "enabled" if report.refinement_enabled else "skipped (B = 0)"
    console.print(
        f"Line refinement: {refinement}; missing frames: {report.missing_frames}; "
        f"invalid boxes: {report.invalid_boxes}"
    )

    for cam in report.cameras:
        errors = [abs(e) for e in (cam.rel_err_fx, cam.rel_err_fy) if e is not None]
        if errors and max(errors) < 1.0:
            low, high = depth_bounds(DEFAULT_REPORT_DEPTH_M, max(errors))
            console.print(
                f"{cam.camera}: an object at {DEFAULT_REPORT_DEPTH_M:.0f} m is placed between "
                f"{low:.2f} and {high:.2f} m"
            )


@app.command()
def calibrate(
    dataset_dir: str = typer.Argument(..., help="Directory with PNG frames and detections.json"),
    config: Optional[str] = typer.Option(None, "--config", "-c", help="Pipeline config file (key = value)"),
    out: str = typer.Option("./out", "--out", "-o", help="Output directory for report and CSVs"),
    seed: Optional[int] = typer.Option(None, "--seed", help="RNG seed (overrides config)"),
    gt: Optional[str] = typer.Option(None, "--gt", help="Ground-truth focal lengths 'fx,fy'"),
    workers: Optional[int] = typer.Option(None, "--workers", "-w", help="Worker threads"),
):
    """Calibrate focal lengths from a dataset of stop-sign detections"""
    logger.info(f"Starting calibration - Dataset: {dataset_dir}, Config: {config}, Out: {out}")
    console.print(Panel("🔄 Loading configuration...", style="blue"))

    try:
        gt_fx, gt_fy = parse_gt(gt)
        run_settings = load_settings(config, seed=seed, workers=workers, gt_fx=gt_fx, gt_fy=gt_fy)
        agent = CalibrationAgent(CalibrationAgentConfig.from_settings(run_settings))
        logger.info("Calibration Agent initialized")

        console.print(Panel("📐 Processing detections...", style="blue"))
        report = agent.calibrate(dataset_dir, out)
        print_report(report)

        summary = f"✅ {report.accepted}/{report.detections} views accepted, artifacts in {out}"
        console.print(Panel(summary, style="green"))

    except typer.BadParameter:
        raise
    except Exception as e:
        logger.exception(f"Fatal error in calibrate command: {e}")
        console.print(Panel(f"❌ Error: {e}", style="red"))
        raise typer.Exit(1)


@app.command()
def synth(
    scenes: int = typer.Option(..., "--scenes", "-n", help="Number of scenes to render"),
    noise: float = typer.Option(DEFAULT_SYNTH_CONTOUR_NOISE, "--noise", help="Contour noise sigma (px)"),
    out: str = typer.Option(..., "--out", "-o", help="Output dataset directory"),
    seed: int = typer.Option(0, "--seed", help="RNG seed"),
    blur: float = typer.Option(DEFAULT_SYNTH_BLUR, "--blur", help="Gaussian blur sigma (px)"),
    tilt_min: float = typer.Option(DEFAULT_SYNTH_TILT_MIN_DEG, "--tilt-min", help="Minimum tilt (deg)"),
    tilt_max: float = typer.Option(DEFAULT_SYNTH_TILT_MAX_DEG, "--tilt-max", help="Maximum tilt (deg)"),
    camera: str = typer.Option(DEFAULT_CAMERA_ID, "--camera", help="Camera id written to detections.json"),
):
    """Render a synthetic dataset with ground truth"""
    logger.info(f"Rendering {scenes} scene(s) - noise={noise}, blur={blur}, seed={seed}, out={out}")
    console.print(Panel(f"🎨 Rendering {scenes} synthetic scene(s)...", style="blue"))

    try:
        renderer = SceneRendererTool(
            SceneRendererToolConfig(
                contour_noise=noise, blur=blur, tilt_min_deg=tilt_min, tilt_max_deg=tilt_max, camera=camera
            )
        )
        paths = renderer.write_batch(out, scenes, seed)

        table = Table(title="Synthetic Dataset")
        table.add_column("Item", style="cyan")
        table.add_column("Value", style="magenta")
        table.add_row("Scenes", str(scenes))
        table.add_row("fx, fy (px)", f"{renderer.intrinsics.fx}, {renderer.intrinsics.fy}")
        table.add_row("Detections", str(paths["detections"]))
        table.add_row("Ground truth", str(paths["truth"]))
        console.print(table)

        console.print(Panel("✅ Rendering complete!", style="green"))

    except Exception as e:
        logger.exception(f"Fatal error in synth command: {e}")
        console.print(Panel(f"❌ Error: {e}", style="red"))
        raise typer.Exit(1)


@app.command()
def report(out_dir: str = typer.Argument(..., help="Output directory of a calibrate run")):
    """Print the summary of a previous calibration run"""
    try:
        print_report(load_report(out_dir))
    except Exception as e:
        logger.exception(f"Fatal error in report command: {e}")
        console.print(Panel(f"❌ Error: {e}", style="red"))
        raise typer.Exit(1)


@app.callback()
def main(verbose: bool = typer.Option(False, "--verbose", "-v", help="Debug output on the console")):
    """Initialize logging before any command runs"""
    level = "DEBUG" if verbose else settings.log_level
    setup_logging(console=True, file=True, level=level, log_dir=settings.log_dir)


if __name__ == "__main__":
    app()
