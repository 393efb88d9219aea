# scripts/tilt_sweep.py

"""
Affine-check residuals of exactly projected octagons over a tilt grid.
Used to pick the affine tolerance so that legitimate perspective views pass.
"""

import logging
import sys
from pathlib import Path
from typing import Dict, List

import numpy as np
import typer
from rich.console import Console
from rich.table import Table

# Add project root to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.config.constants import (  # noqa: E402
    DEFAULT_AFFINE_TOL,
    DEFAULT_SYNTH_DISTANCE_MAX_M,
    DEFAULT_SYNTH_DISTANCE_MIN_M,
    DEFAULT_SYNTH_FX,
    DEFAULT_SYNTH_FY,
    DEFAULT_SYNTH_HEIGHT,
    DEFAULT_SYNTH_WIDTH,
)
from src.schemas.camera_schema import Intrinsics  # noqa: E402
from src.tools.calib_tools import ReferenceOctagon  # noqa: E402
from src.tools.octagon_tools import affine_octagon_check, order_corners  # noqa: E402
from src.tools.synth_tools import project_points, sample_pose  # noqa: E402

logger = logging.getLogger("scripts.tilt_sweep")
console = Console()


def sweep(
    tilts: List[float], samples: int, seed: int, distance_min: float, distance_max: float
) -> Dict[float, np.ndarray]:
    """Normalized max affine residual of `samples` random poses per tilt"""
    intr = Intrinsics.centered(DEFAULT_SYNTH_FX, DEFAULT_SYNTH_FY, DEFAULT_SYNTH_WIDTH, DEFAULT_SYNTH_HEIGHT)
    world = ReferenceOctagon().points
    residuals: Dict[float, np.ndarray] = {}
    for tilt in tilts:
        rng = np.random.default_rng([seed, int(round(tilt * 100))])
        values = []
        for _ in range(samples):
            pose = sample_pose(rng, tilt_range=(tilt, tilt), distance_range=(distance_min, distance_max))
            corners = order_corners(project_points(world, intr, pose))
            values.append(affine_octagon_check(corners, tol=np.inf).normalized_residual)
        residuals[tilt] = np.asarray(values)
        logger.debug(f"tilt {tilt:.1f}: max residual {residuals[tilt].max():.4f}")
    return residuals


def run(
    tilt_min: float = typer.Option(10.0, help="First tilt (deg)"),
    tilt_max: float = typer.Option(80.0, help="Last tilt (deg)"),
    step: float = typer.Option(5.0, help="Tilt step (deg)"),
    samples: int = typer.Option(50, help="Random poses per tilt"),
    seed: int = typer.Option(0, help="RNG seed"),
    tol: float = typer.Option(DEFAULT_AFFINE_TOL, help="Tolerance to report pass rates against"),
    distance_min: float = typer.Option(DEFAULT_SYNTH_DISTANCE_MIN_M, help="Nearest distance (m)"),
    distance_max: float = typer.Option(DEFAULT_SYNTH_DISTANCE_MAX_M, help="Farthest distance (m)"),
):
    """Print affine residuals (fraction of mean side length) per tilt"""
    tilts = list(np.arange(tilt_min, tilt_max + 1e-9, step))
    results = sweep(tilts, samples, seed, distance_min, distance_max)

    table = Table(title=f"Affine residual vs tilt (tol = {tol})")
    table.add_column("Tilt (deg)", style="cyan", justify="right")
    table.add_column("Median", justify="right")
    table.add_column("Max", justify="right")
    table.add_column("Pass rate", style="magenta", justify="right")
    for tilt, values in results.items():
        table.add_row(
            f"{tilt:.1f}",
            f"{np.median(values):.4f}",
            f"{values.max():.4f}",
            f"{np.mean(values <= tol):.0%}",
        )
    console.print(table)


def main():
    logging.basicConfig(level=logging.INFO)
    typer.run(run)


if __name__ == "__main__":
    main()
