"""Observation generation for one Monte Carlo trial."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..gnss_models import (
    F_L1,
    F_L2,
    LAMBDA_L1,
    LAMBDA_L2,
    SPEED_OF_LIGHT,
    ArcId,
    EcefPosition,
    EpochState,
    GnssObservation,
    dry_zenith_at_height,
    ecef_to_geodetic,
    enu_rotation,
    iono_free_coefficients,
)
from .config import ScenarioConfig
from .constellation import Constellation, body_rotation, nominal_constellation, visibility
from .errors import (
    ErrorProcessState,
    attitude_rate,
    clock_step,
    gauss_markov_step,
    orbit_error,
    phase_break_decision,
)
from .trajectory import Trajectory, TrajectorySample

IONO_SHELL_HEIGHT = 350_000.0
EARTH_RADIUS = 6_371_000.0
OBS_DECIMALS = 4
ELEVATION_DECIMALS = 10


@dataclass
class ArcRecord:
    arc_id: ArcId
    start_epoch: float
    end_epoch: float
    ambiguity: float  # ionosphere-free, meters


@dataclass
class EpochTruth:
    epoch: float
    state: EpochState
    ambiguities: dict  # ArcId -> IF ambiguity (m) for arcs observed at this epoch


@dataclass
class SimulationResult:
    config: ScenarioConfig
    observations: list  # one list of GnssObservation per epoch
    truth: list  # EpochTruth per epoch
    arcs: list = field(default_factory=list)  # ArcRecord in start order

    @property
    def n_arcs(self) -> int:
        return len(self.arcs)


def iono_obliquity(elevation: float) -> float:
    """Thin-shell slant factor."""
    x = EARTH_RADIUS * math.cos(elevation) / (EARTH_RADIUS + IONO_SHELL_HEIGHT)
    return 1.0 / math.sqrt(1.0 - x * x)


def if_ambiguity(n1: int, n2: int) -> float:
    c1, c2 = iono_free_coefficients()
    return c1 * n1 * LAMBDA_L1 - c2 * n2 * LAMBDA_L2


def start_epoch_for(cfg: ScenarioConfig, rng: np.random.Generator) -> float:
    if cfg.start_time_s is not None:
        return float(cfg.start_time_s)
    return float(rng.integers(0, 86_400))


def simulate_epoch(truth: TrajectorySample, constellation: Constellation, errs: ErrorProcessState,
                   cfg: ScenarioConfig):
    """Generate the observations of one epoch.

    Returns ``(observations, errs, truth_state, new_arcs, arc_values)`` where
    ``new_arcs`` lists ``(ArcId, IF ambiguity)`` of arcs opened at this epoch
    and ``arc_values`` maps every observed arc to its IF ambiguity.
    """
    rng = errs.rng
    t = truth.epoch
    dt = None if errs.last_epoch is None else t - errs.last_epoch
    if dt is not None:
        noise = rng.standard_normal()
        sigma = cfg.clock_sigma_ns * 1e-9 * SPEED_OF_LIGHT
        errs.clock_bias = clock_step(errs.clock_bias, errs.clock_drift, sigma, dt, noise)
    att_rate = 0.0 if dt is None else attitude_rate(errs.last_attitude, truth.attitude, dt)

    lat, lon, height = ecef_to_geodetic(truth.position)
    frame = (enu_rotation(lat, lon), body_rotation(truth.attitude))
    dry = dry_zenith_at_height(height)
    wet = errs.trop_wet(t)
    truth_state = EpochState(position=truth.position.copy(), trop_wet_zenith=wet, clock_bias=errs.clock_bias)

    sat_pos = constellation.positions(t)
    sat_clk = constellation.clock_biases(t)
    lam = (LAMBDA_L1, LAMBDA_L2)
    iono_scale = (1.0, (F_L1 / F_L2) ** 2)
    phase_sigma = (cfg.thermal_phase_sigma_cycles * LAMBDA_L1, cfg.thermal_phase_sigma_cycles * LAMBDA_L2)
    elapsed = t - errs.start_epoch

    observations = []
    new_arcs = []
    arc_values = {}
    now_visible = set()
    for i, sat in enumerate(constellation.sat_ids):
        vis = visibility(truth.position, sat_pos[i], cfg.elevation_mask_rad, frame=frame)
        prev = sat in errs.visible
        if vis is None:
            if prev:
                errs.multipath.pop(sat, None)
                errs.arc_ambiguity.pop(sat, None)
            continue
        now_visible.add(sat)
        el = vis[0]
        broke = phase_break_decision(prev, True, att_rate, rng, cfg.phase_break_prob, cfg.phase_break_rate_gain)
        if broke:
            k = cfg.ambiguity_max_cycles
            n1, n2 = (int(v) for v in rng.integers(-k, k + 1, 2))
            errs.arc_ambiguity[sat] = (n1, n2)
            seq = errs.arc_sequence.get(sat, 0)
            errs.arc_sequence[sat] = seq + 1
            new_arcs.append((ArcId(sat, seq), if_ambiguity(n1, n2)))
        arc = ArcId(sat, errs.arc_sequence[sat] - 1)
        n1, n2 = errs.arc_ambiguity[sat]
        arc_values[arc] = if_ambiguity(n1, n2)

        mp_noise = rng.standard_normal(2)
        if prev and sat in errs.multipath:
            mp = gauss_markov_step(errs.multipath[sat], cfg.multipath_sigma_m, cfg.multipath_tau_s, dt, mp_noise)
        else:
            mp = cfg.multipath_sigma_m * mp_noise
        errs.multipath[sat] = mp
        thermal = rng.standard_normal(4)
        scale = 1.0 / math.sin(el) if cfg.noise_elevation_scaling else 1.0

        d = sat_pos[i] - truth.position
        rng_geo = math.sqrt(d @ d)
        common = (rng_geo + errs.clock_bias - sat_clk[i] + (dry + wet) / math.sin(el)
                  + orbit_error(errs, sat, elapsed))
        iono_l1 = errs.iono_zenith * iono_obliquity(el)
        pr = [common + iono_l1 * iono_scale[f] + mp[f] + cfg.thermal_code_sigma_m * scale * thermal[f] for f in (0, 1)]
        cp = [common - iono_l1 * iono_scale[f] + (n1, n2)[f] * lam[f] + phase_sigma[f] * scale * thermal[2 + f]
              for f in (0, 1)]
        q = OBS_DECIMALS
        observations.append(
            GnssObservation(
                epoch=t,
                sat_id=sat,
                pr_l1=float(round(pr[0], q)),
                pr_l2=float(round(pr[1], q)),
                cp_l1=float(round(cp[0], q)),
                cp_l2=float(round(cp[1], q)),
                loss_of_lock=broke,
                elevation=round(el, ELEVATION_DECIMALS),
                sat_position=EcefPosition(*(round(float(v), q) for v in sat_pos[i])),
                sat_clock_bias=round(float(sat_clk[i]), q),
            )
        )
    errs.visible = now_visible
    errs.last_epoch = t
    errs.last_attitude = truth.attitude.copy()
    return observations, errs, truth_state, new_arcs, arc_values


def simulate(cfg: ScenarioConfig, seed: int | None = None) -> SimulationResult:
    """Run a full scenario; identical ``cfg`` and ``seed`` give identical output."""
    seed = cfg.seed if seed is None else seed
    rng = np.random.default_rng(seed)
    start = start_epoch_for(cfg, rng)
    constellation = Constellation(nominal_constellation(rng), earth_rotation=cfg.earth_rotation)
    errs = ErrorProcessState.initial(cfg, constellation.sat_ids, start, rng)
    traj = Trajectory(cfg.profile, cfg.duration_s, math.radians(cfg.origin_lat_deg),
                      math.radians(cfg.origin_lon_deg), cfg.origin_height_m, cfg.speed_mps, cfg.climb_rate_mps)
    observations, truth, arcs = [], [], []
    open_arcs: dict = {}
    for k in range(cfg.n_epochs):
        sample = traj.sample(k * cfg.dt, start)
        obs, errs, state, new_arcs, arc_values = simulate_epoch(sample, constellation, errs, cfg)
        for arc, value in new_arcs:
            record = ArcRecord(arc, sample.epoch, sample.epoch, value)
            arcs.append(record)
            open_arcs[arc] = record
        for arc in arc_values:
            open_arcs[arc].end_epoch = sample.epoch
        observations.append(obs)
        truth.append(EpochTruth(sample.epoch, state, arc_values))
    return SimulationResult(cfg, observations, truth, arcs)
