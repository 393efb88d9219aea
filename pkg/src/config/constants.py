# src/config/constants.py

"""
Application constants and default configuration values.
These values are used as defaults throughout the application.
Override via the pipeline config file or OCTCAL_* environment variables.
"""

import math

# =============================================================================
# RASTER / COLOR SEGMENTATION
# =============================================================================

# Red band in HSV (hue as a fraction of a full turn, wraps through 0)
DEFAULT_HUE_LOW: float = 0.95
DEFAULT_HUE_HIGH: float = 0.05
DEFAULT_SAT_MIN: float = 0.35
DEFAULT_VAL_MIN: float = 0.15
DEFAULT_VAL_MAX: float = 1.0

# Gaussian scale for gradient computation (pixels)
DEFAULT_GRADIENT_SIGMA: float = 1.0

# =============================================================================
# CONTOUR EXTRACTION
# =============================================================================

DEFAULT_MAG_THRESHOLD: float = 0.1  # fraction of max gradient magnitude
DEFAULT_CHAIN_DISTANCE: float = 2.0  # pixels

# =============================================================================
# EDGE LINE FITTING
# =============================================================================

DEFAULT_RANSAC_P: float = 0.999
DEFAULT_RANSAC_TOL: float = 0.5  # pixels
DEFAULT_RANSAC_MIN_SUPPORT: int = 5
DEFAULT_RANSAC_MIN_ITERATIONS: int = 8
DEFAULT_RANSAC_PAIRS_CAP: bool = True
DEFAULT_RANSAC_BATCH: int = 1024
DEFAULT_RANSAC_SCORE_POINTS: int = 160  # first-pass scoring subset
DEFAULT_RANSAC_RESCORE_TOP: int = 64

# Perpendicular line refinement
DEFAULT_REFINE_SAMPLES: int = 20
DEFAULT_REFINE_BOUNDARY: float = 0.5  # 0.0 disables refinement

# =============================================================================
# REFERENCE GEOMETRY (30 in. stop sign)
# =============================================================================

# Across-flats width of the red inner octagon, meters (28.5 in.)
DEFAULT_OCTAGON_WIDTH_M: float = 0.7239
# White border width divided by the inner octagon side length (0.75 in. / 11.8 in.)
DEFAULT_BORDER_RATIO: float = 0.01905 / (0.7239 * math.tan(math.pi / 8))

# =============================================================================
# OCTAGON VALIDATION
# =============================================================================

DEFAULT_ENDPOINT_RADIUS: float = 10.0  # pixels
DEFAULT_AFFINE_TOL: float = 0.08  # fraction of mean side length, from the tilt sweep

# =============================================================================
# CALIBRATION
# =============================================================================

DEFAULT_COND_MAX: float = 1e4
DEFAULT_CORNER_SIGMA_MIN: float = 0.1  # pixels, floor on the per-view corner noise

# =============================================================================
# KALMAN FILTER
# =============================================================================

DEFAULT_KALMAN_Q_STD: float = 0.01  # pixels
DEFAULT_KALMAN_R0_REL: float = 0.05  # R0 = (0.05 * f_prior)^2
DEFAULT_KALMAN_R_MIN_REL: float = 0.005  # R_min = (0.005 * f_prior)^2
DEFAULT_KALMAN_R_DECAY: float = 0.995
DEFAULT_KALMAN_QUALITY_WEIGHTING: bool = True

# =============================================================================
# PIPELINE
# =============================================================================

DEFAULT_SEED: int = 0
DEFAULT_ROI_PADDING: float = 0.1
DEFAULT_WORKERS: int = 1
DEFAULT_DETECTIONS_FILE: str = "detections.json"
DEFAULT_TRUTH_FILE: str = "truth.json"
DEFAULT_CAMERA_ID: str = "cam0"

# Fallback blob detector
DEFAULT_USE_FALLBACK_DETECTOR: bool = True
DEFAULT_FALLBACK_MIN_AREA: int = 200  # pixels
DEFAULT_FALLBACK_ASPECT_MIN: float = 0.5
DEFAULT_FALLBACK_ASPECT_MAX: float = 2.0
DEFAULT_FALLBACK_DILATION: float = 0.1

# Output artifacts
DEFAULT_REPORT_FILE: str = "report.json"
DEFAULT_VIEWS_FILE: str = "views.csv"
DEFAULT_REJECTIONS_FILE: str = "rejections.csv"
DEFAULT_TRAJECTORY_PREFIX: str = "trajectory_"
DEFAULT_REPORT_DEPTH_M: float = 50.0  # depth used to illustrate focal error in the summary

# =============================================================================
# SYNTHETIC SCENES
# =============================================================================

# Reference camera (fx, fy from a chessboard calibration of a vehicle camera)
DEFAULT_SYNTH_FX: float = 1810.4
DEFAULT_SYNTH_FY: float = 1840.1
DEFAULT_SYNTH_WIDTH: int = 1920
DEFAULT_SYNTH_HEIGHT: int = 1200

DEFAULT_SYNTH_TILT_MIN_DEG: float = 15.0
DEFAULT_SYNTH_TILT_MAX_DEG: float = 60.0
DEFAULT_SYNTH_DISTANCE_MIN_M: float = 6.0
DEFAULT_SYNTH_DISTANCE_MAX_M: float = 12.0
DEFAULT_SYNTH_LATERAL_M: float = 0.5
DEFAULT_SYNTH_AZIMUTH_MARGIN_DEG: float = 15.0
DEFAULT_SYNTH_MIN_TILT_DEG: float = 10.0  # below this focal recovery degenerates

DEFAULT_SYNTH_CONTOUR_NOISE: float = 0.3  # pixels
DEFAULT_SYNTH_BLUR: float = 1.0  # pixels
DEFAULT_SYNTH_EXPOSURE: float = 1.0
DEFAULT_SYNTH_SUPERSAMPLING: int = 4

# Scene colors (linear RGB in [0, 1])
SYNTH_RED = (0.8, 0.05, 0.1)
SYNTH_WHITE = (0.95, 0.95, 0.95)
SYNTH_BACKGROUND = (0.35, 0.45, 0.35)

# =============================================================================
# LOGGING
# =============================================================================

DEFAULT_LOG_LEVEL: str = "INFO"
DEFAULT_LOG_DIR: str = "./logs"
