"""Stochastic error processes of the Monte Carlo environment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


def gauss_markov_step(prev, sigma, tau, dt, noise):
    """One exact-discretization step of a stationary first-order Gauss-Markov process.

    Works elementwise on arrays. ``tau = inf`` keeps the state unchanged apart
    from a zero-variance driving term.
    """
    phi = np.exp(-dt / tau)
    return prev * phi + sigma * np.sqrt(1.0 - phi * phi) * noise


def phase_break_decision(prev_visible: bool, visible: bool, attitude_rate: float,
                         rng: np.random.Generator, p_base: float, gain: float) -> bool:
    """Whether the carrier-phase arc breaks at this epoch.

    Reacquisition after masking always breaks. Otherwise a Bernoulli trial
    with probability ``p_base + gain * |attitude_rate|`` clamped to [0, 1]; a
    uniform draw is consumed on every continuing epoch so that the random
    stream does not depend on the outcome.
    """
    if not visible:
        return False
    if not prev_visible:
        return True
    p = min(1.0, max(0.0, p_base + gain * abs(attitude_rate)))
    return bool(rng.random() < p)


@dataclass
class ErrorProcessState:
    """Trial-local state of every error process.

    Mutated in place by :func:`~pppgraph.simulator.scenario.simulate_epoch`,
    which also returns it.
    """

    rng: np.random.Generator
    start_epoch: float
    clock_bias: float
    clock_drift: float
    trop_wet0: float
    trop_wet_rate: float
    iono_zenith: float
    orbit_offset: dict
    orbit_rate: dict
    multipath: dict = field(default_factory=dict)  # sat -> array([l1, l2])
    arc_sequence: dict = field(default_factory=dict)  # sat -> arcs started so far
    arc_ambiguity: dict = field(default_factory=dict)  # sat -> (n1, n2) integer cycles of the open arc
    visible: set = field(default_factory=set)
    last_epoch: Optional[float] = None
    last_attitude: Optional[np.ndarray] = None

    @classmethod
    def initial(cls, cfg, sat_ids, start_epoch: float, rng: np.random.Generator) -> "ErrorProcessState":
        c = 299_792_458.0
        clock_bias = rng.uniform(-cfg.clock_initial_max_m, cfg.clock_initial_max_m)
        drift = cfg.clock_drift_ns_per_s * 1e-9 * c * (1.0 if rng.random() < 0.5 else -1.0)
        trop0 = rng.uniform(cfg.trop_wet_min_m, cfg.trop_wet_max_m)
        trop_rate = rng.uniform(-cfg.trop_wet_rate_m_per_s, cfg.trop_wet_rate_m_per_s)
        iono = rng.uniform(cfg.iono_zenith_min_m, cfg.iono_zenith_max_m)
        offsets = rng.normal(0.0, cfg.orbit_sigma_m, len(sat_ids)) if cfg.orbit_sigma_m > 0 else np.zeros(len(sat_ids))
        signs = np.where(rng.random(len(sat_ids)) < 0.5, -1.0, 1.0)
        return cls(
            rng=rng,
            start_epoch=start_epoch,
            clock_bias=clock_bias,
            clock_drift=drift,
            trop_wet0=trop0,
            trop_wet_rate=trop_rate,
            iono_zenith=iono,
            orbit_offset=dict(zip(sat_ids, offsets)),
            orbit_rate=dict(zip(sat_ids, signs * cfg.orbit_rate_m_per_s)),
        )

    def trop_wet(self, epoch: float) -> float:
        return self.trop_wet0 + self.trop_wet_rate * (epoch - self.start_epoch)


def orbit_error(errs: ErrorProcessState, sat_id: str, t: float) -> float:
    """Line-of-sight orbit error of ``sat_id`` at ``t`` seconds after the trial start."""
    return errs.orbit_offset[sat_id] + errs.orbit_rate[sat_id] * t


def clock_step(bias: float, drift: float, sigma_m: float, dt: float, noise: float) -> float:
    """Random walk plus deterministic drift; ``sigma_m`` is the per-second sigma."""
    return bias + drift * dt + sigma_m * math.sqrt(dt) * noise


def attitude_rate(prev, cur, dt: float) -> float:
    """Norm of the attitude angle rates with yaw wrapped to (-pi, pi]."""
    d = np.asarray(cur, dtype=float) - np.asarray(prev, dtype=float)
    d[2] = (d[2] + math.pi) % (2 * math.pi) - math.pi
    return float(np.linalg.norm(d)) / dt
