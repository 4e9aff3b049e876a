"""Truth trajectories, constellation geometry and corrupted GNSS observations."""

from .config import ScenarioConfig, format_config, load_config, parse_config, save_config
from .constellation import (
    Constellation,
    SatelliteEphemeris,
    nominal_constellation,
    propagate_constellation,
    visibility,
)
from .errors import ErrorProcessState, gauss_markov_step, orbit_error, phase_break_decision
from .io import read_observations, read_truth, write_observations, write_truth
from .scenario import ArcRecord, EpochTruth, SimulationResult, simulate, simulate_epoch
from .trajectory import TrajectorySample, generate_trajectory

__all__ = [
    "ArcRecord",
    "Constellation",
    "EpochTruth",
    "ErrorProcessState",
    "SatelliteEphemeris",
    "ScenarioConfig",
    "SimulationResult",
    "TrajectorySample",
    "format_config",
    "gauss_markov_step",
    "generate_trajectory",
    "load_config",
    "nominal_constellation",
    "orbit_error",
    "parse_config",
    "phase_break_decision",
    "propagate_constellation",
    "read_observations",
    "read_truth",
    "save_config",
    "simulate",
    "simulate_epoch",
    "visibility",
    "write_observations",
    "write_truth",
]
