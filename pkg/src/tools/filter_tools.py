# src/tools/filter_tools.py

"""
Temporal fusion of per-view focal measurements with a Kalman filter whose
state is (fx, fy), with identity transition and measurement matrices and a
decaying measurement covariance widened by each view's own uncertainty.
"""

import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Sequence

import numpy as np
import scipy.linalg
from pydantic import Field

from src.config.constants import (
    DEFAULT_KALMAN_Q_STD,
    DEFAULT_KALMAN_QUALITY_WEIGHTING,
    DEFAULT_KALMAN_R0_REL,
    DEFAULT_KALMAN_R_DECAY,
    DEFAULT_KALMAN_R_MIN_REL,
)
from src.lib.base_tool import BaseTool, BaseToolConfig
from src.lib.exceptions import FilterError

logger = logging.getLogger(__name__)

class FocalObservation(NamedTuple):
    """
    One accepted view as seen by the filter

    quality is the reprojection RMS in pixels; var_fx and var_fy are the
    propagated variances of the view's own estimate, 0 when unknown.
    """

    fx: float
    fy: float
    quality: float = 0.0
    var_fx: float = 0.0
    var_fy: float = 0.0


Measurement = Sequence[float]


@dataclass(frozen=True)
class KalmanState:
    x: np.ndarray  # (fx, fy)
    P: np.ndarray  # 2x2 covariance
    t: int = 0  # number of measurements folded in

    def __post_init__(self):
        x = np.asarray(self.x, dtype=np.float64).reshape(2)
        P = np.asarray(self.P, dtype=np.float64).reshape(2, 2)
        if not np.all(np.isfinite(x)) or not np.all(np.isfinite(P)):
            raise FilterError("Kalman state must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", P)


@dataclass(frozen=True)
class NoiseSchedule:
    """
    Q is constant; the measurement variance after t updates is
    max(r0 * r_decay**t, r_min), per axis.
    """

    Q: np.ndarray
    r0: np.ndarray
    r_decay: float
    r_min: np.ndarray

    def __post_init__(self):
        Q = np.asarray(self.Q, dtype=np.float64).reshape(2, 2)
        r0 = np.asarray(self.r0, dtype=np.float64).reshape(2)
        r_min = np.asarray(self.r_min, dtype=np.float64).reshape(2)
        if np.any(Q != np.diag(np.diag(Q))) or np.any(np.diag(Q) < 0):
            raise FilterError("Q must be diagonal and non-negative")
        if np.any(r_min <= 0) or np.any(r0 <= r_min):
            raise FilterError(f"need r0 > r_min > 0, got r0={r0}, r_min={r_min}")
        if not 0.0 < self.r_decay <= 1.0:
            raise FilterError(f"r_decay must be in (0, 1], got {self.r_decay}")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "r0", r0)
        object.__setattr__(self, "r_min", r_min)

    @classmethod
    def from_prior(
        cls,
        f_prior: Sequence[float],
        q_std: float = DEFAULT_KALMAN_Q_STD,
        r0_rel: float = DEFAULT_KALMAN_R0_REL,
        r_min_rel: float = DEFAULT_KALMAN_R_MIN_REL,
        r_decay: float = DEFAULT_KALMAN_R_DECAY,
    ) -> "NoiseSchedule":
        """Schedule scaled to a focal prior: R0 = (r0_rel f)^2, R_min = (r_min_rel f)^2"""
        f = np.abs(np.asarray(f_prior, dtype=np.float64).reshape(2))
        return cls(
            Q=np.eye(2) * q_std**2,
            r0=(r0_rel * f) ** 2,
            r_decay=r_decay,
            r_min=(r_min_rel * f) ** 2,
        )

    def R(self, t: int, quality: float = 0.0, view_variance: Sequence[float] = (0.0, 0.0)) -> np.ndarray:
        """
        Measurement covariance for the t-th measurement

        The scheduled variance is inflated by (1 + quality) and the view's own
        propagated variance is added on top, so weak views carry little weight.
        """
        variance = np.maximum(self.r0 * self.r_decay**t, self.r_min) * (1.0 + max(quality, 0.0))
        extra = np.asarray(view_variance, dtype=np.float64).reshape(2)
        if not np.all(np.isfinite(extra)) or np.any(extra < 0):
            raise FilterError(f"view variance must be finite and non-negative, got {extra.tolist()}")
        return np.diag(variance + extra)


def predict(state: KalmanState, Q: np.ndarray) -> KalmanState:
    """Identity transition: x stays, P grows by Q"""
    return KalmanState(x=state.x, P=state.P + Q, t=state.t)


def update(state: KalmanState, z: Sequence[float], R: np.ndarray) -> KalmanState:
    """Fold one (fx, fy) measurement in with K = P (P + R)^-1"""
    R = np.asarray(R, dtype=np.float64).reshape(2, 2)
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError as e:
        raise FilterError(f"measurement covariance is not positive definite: {R.tolist()}") from e

    z = np.asarray(z, dtype=np.float64).reshape(2)
    S = state.P + R
    innovation = z - state.x
    # S is p.d. because R is; solve against [P | innovation] in one go
    X = scipy.linalg.solve(S, np.hstack((state.P, innovation[:, None])), assume_a="pos")
    x = state.x + state.P.T @ X[:, -1]
    P = state.P - state.P.T @ X[:, :-1]
    return KalmanState(x=x, P=(P + P.T) / 2.0, t=state.t + 1)


def run_sequence(
    measurements: Sequence[Measurement], schedule: NoiseSchedule, use_quality: bool = True
) -> List[KalmanState]:
    """
    Filter an ordered measurement sequence

    Each item is a FocalObservation or a plain (fx, fy[, quality, var_fx, var_fy])
    tuple. The first measurement initializes x with P = R for t = 0; each
    later one is a predict followed by an update. use_quality=False drops both
    the quality inflation and the view variance. Returns the state after
    every measurement.
    """
    if not measurements:
        raise FilterError("no measurements to filter")

    trajectory: List[KalmanState] = []
    state = None
    for t, measurement in enumerate(measurements):
        fx, fy, quality, var_fx, var_fy = FocalObservation(*measurement)
        if use_quality:
            R = schedule.R(t, quality, (var_fx, var_fy))
        else:
            R = schedule.R(t)
        if state is None:
            state = KalmanState(x=np.array([fx, fy]), P=R, t=1)
        else:
            state = update(predict(state, schedule.Q), (fx, fy), R)
        trajectory.append(state)
    return trajectory


class KalmanFilterToolConfig(BaseToolConfig):
    """Noise schedule parameters, relative to the first accepted measurement"""

    q_std: float = Field(default=DEFAULT_KALMAN_Q_STD, ge=0.0)
    r0_rel: float = Field(default=DEFAULT_KALMAN_R0_REL, gt=0.0)
    r_min_rel: float = Field(default=DEFAULT_KALMAN_R_MIN_REL, gt=0.0)
    r_decay: float = Field(default=DEFAULT_KALMAN_R_DECAY, gt=0.0, le=1.0)
    quality_weighting: bool = Field(default=DEFAULT_KALMAN_QUALITY_WEIGHTING)


class KalmanFilterTool(BaseTool):
    """Runs one filter over one camera's accepted measurements"""

    def __init__(self, config: KalmanFilterToolConfig = None):
        super().__init__(config or KalmanFilterToolConfig())

    def schedule_for(self, first: Measurement) -> NoiseSchedule:
        return NoiseSchedule.from_prior(
            first[:2],
            q_std=self.config.q_std,
            r0_rel=self.config.r0_rel,
            r_min_rel=self.config.r_min_rel,
            r_decay=self.config.r_decay,
        )

    def filter(self, measurements: Sequence[Measurement]) -> List[KalmanState]:
        if not measurements:
            raise FilterError("no measurements to filter")
        schedule = self.schedule_for(measurements[0])
        trajectory = run_sequence(measurements, schedule, self.config.quality_weighting)
        final = trajectory[-1]
        logger.debug(f"Filtered {len(measurements)} measurement(s): fx={final.x[0]:.2f}, fy={final.x[1]:.2f}")
        return trajectory

    def run(self, measurements: Sequence[Measurement], **kwargs) -> List[KalmanState]:
        """Required by BaseTool - returns the state trajectory"""
        return self.filter(measurements)
