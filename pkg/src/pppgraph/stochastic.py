"""Stochastic model shared by the graph smoother and the Kalman filter."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .gnss_models import STATE_DIM


@dataclass(frozen=True)
class StochasticModel:
    """A priori sigmas, process noise and measurement sigmas (meters, seconds).

    ``white_clock`` means the receiver clock carries no information from one
    epoch to the next (zero correlation time).
    """

    prior_position_sigma: float = 1.0
    prior_trop_sigma: float = 0.3
    prior_clock_sigma: float = 3e6
    prior_ambiguity_sigma: float = 100.0
    process_position: float = 5.0
    process_trop: float = 3e-5
    process_clock: float = 2000.0
    process_ambiguity: float = 0.0
    white_clock: bool = True
    code_sigma: float = 1.5
    phase_sigma: float = 0.1

    def prior_sigmas(self) -> np.ndarray:
        p = self.prior_position_sigma
        return np.array([p, p, p, self.prior_trop_sigma, self.prior_clock_sigma])

    def process_variances(self, dt: float) -> np.ndarray:
        """Diagonal process noise over ``dt``; the clock entry is ``inf`` when white."""
        q = np.empty(STATE_DIM)
        q[:3] = self.process_position**2 * dt
        q[3] = self.process_trop**2 * dt
        q[4] = math.inf if self.white_clock else self.process_clock**2 * dt
        return q
