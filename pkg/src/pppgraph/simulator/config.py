"""Scenario configuration and its flat ``key = value`` file format."""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

from ..errors import ConfigError
from ..gnss_models import LAMBDA_L1, LAMBDA_L2, if_noise_sigma
from ..stochastic import StochasticModel

PROFILES = ("static", "racetrack", "figure_eight", "ascent")


@dataclass(frozen=True)
class ScenarioConfig:
    # scenario geometry
    profile: str = "racetrack"
    duration_s: float = 1800.0
    rate_hz: float = 1.0
    elevation_mask_rad: float = math.radians(10.0)
    seed: int = 0
    origin_lat_deg: float = 39.65
    origin_lon_deg: float = -79.95
    origin_height_m: float = 1500.0
    speed_mps: float = 60.0
    climb_rate_mps: float = 3.0
    start_time_s: Optional[float] = None  # None draws a start time from the seed
    earth_rotation: bool = True

    # measurement error processes
    thermal_code_sigma_m: float = 0.32
    thermal_phase_sigma_cycles: float = 0.16
    noise_elevation_scaling: bool = False
    multipath_sigma_m: float = 0.4
    multipath_tau_s: float = 15.0
    clock_sigma_ns: float = 30.0
    clock_drift_ns_per_s: float = 100.0
    clock_initial_max_m: float = 1.0e5
    orbit_sigma_m: float = 0.05
    orbit_rate_m_per_s: float = 0.001 / 60.0
    trop_wet_min_m: float = 0.05
    trop_wet_max_m: float = 0.30
    trop_wet_rate_m_per_s: float = 2.0e-6
    iono_zenith_min_m: float = 1.0
    iono_zenith_max_m: float = 10.0
    ambiguity_max_cycles: int = 100
    phase_break_prob: float = 1.0e-4
    phase_break_rate_gain: float = 0.02

    # estimator stochastic model
    prior_position_sigma_m: float = 1.0
    prior_trop_sigma_m: float = 0.3
    prior_clock_sigma_m: float = 3.0e6
    prior_ambiguity_sigma_m: float = 100.0
    process_position_m_per_sqrt_s: float = 5.0
    process_trop_m_per_sqrt_s: float = 3.0e-5
    process_clock_m_per_sqrt_s: float = 2000.0
    process_ambiguity_m_per_sqrt_s: float = 0.0
    clock_correlation_time_s: float = 0.0
    code_sigma_m: Optional[float] = None  # None derives the IF sigma from the error model
    phase_sigma_m: Optional[float] = None

    # smoother and reporting
    relin_threshold_m: float = 0.1
    update_tolerance_m: float = 1.0e-6
    relin_skip: int = 1  # relinearization is checked every n-th update
    convergence_window_s: float = 900.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.profile!r}; expected one of {PROFILES}")
        if not self.rate_hz > 0 or not self.duration_s > 0:
            raise ConfigError("duration_s and rate_hz must be positive")
        for f in fields(self):
            if f.name.endswith(("_sigma_m", "_sigma_ns", "_sigma_cycles")):
                v = getattr(self, f.name)
                if v is not None and v < 0:
                    raise ConfigError(f"{f.name} must be non-negative")
        if self.relin_skip < 1:
            raise ConfigError("relin_skip must be at least 1")
        if self.multipath_tau_s <= 0:
            raise ConfigError("multipath_tau_s must be positive")
        if self.process_ambiguity_m_per_sqrt_s != 0:
            raise ConfigError("ambiguities are random constants; process_ambiguity_m_per_sqrt_s must be 0")

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def n_epochs(self) -> int:
        return int(round(self.duration_s * self.rate_hz))

    def effective_code_sigma(self) -> float:
        if self.code_sigma_m is not None:
            return self.code_sigma_m
        s = math.hypot(self.thermal_code_sigma_m, self.multipath_sigma_m)
        return if_noise_sigma(s, s)

    def effective_phase_sigma(self) -> float:
        if self.phase_sigma_m is not None:
            return self.phase_sigma_m
        c = self.thermal_phase_sigma_cycles
        return if_noise_sigma(c * LAMBDA_L1, c * LAMBDA_L2)

    def stochastic_model(self) -> StochasticModel:
        return StochasticModel(
            prior_position_sigma=self.prior_position_sigma_m,
            prior_trop_sigma=self.prior_trop_sigma_m,
            prior_clock_sigma=self.prior_clock_sigma_m,
            prior_ambiguity_sigma=self.prior_ambiguity_sigma_m,
            process_position=self.process_position_m_per_sqrt_s,
            process_trop=self.process_trop_m_per_sqrt_s,
            process_clock=self.process_clock_m_per_sqrt_s,
            process_ambiguity=self.process_ambiguity_m_per_sqrt_s,
            white_clock=self.clock_correlation_time_s == 0,
            code_sigma=self.effective_code_sigma(),
            phase_sigma=self.effective_phase_sigma(),
        )

    def replace(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def _parse_value(name: str, text: str, default):
    raw = text.strip()
    if raw.lower() in ("none", "auto", ""):
        if name in _OPTIONAL:
            return None
        raise ConfigError(f"{name} requires a value")
    kind = _TYPES[name]
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("true", "yes", "1"):
                return True
            if low in ("false", "no", "0"):
                return False
            raise ValueError(raw)
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {raw!r}") from exc


_DEFAULTS = ScenarioConfig()
_OPTIONAL = {"start_time_s", "code_sigma_m", "phase_sigma_m"}
_TYPES = {
    f.name: (float if f.name in _OPTIONAL else type(getattr(_DEFAULTS, f.name))) for f in fields(ScenarioConfig)
}


def parse_config(text: str) -> ScenarioConfig:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are errors."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = _parse_value(key, value, getattr(_DEFAULTS, key))
    return ScenarioConfig(**values)


def format_config(cfg: ScenarioConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if v is None:
            text = "auto"
        elif isinstance(v, bool):
            text = "true" if v else "false"
        elif isinstance(v, float):
            text = repr(v)
        else:
            text = str(v)
        lines.append(f"{f.name} = {text}")
    return "\n".join(lines) + "\n"


def load_config(path) -> ScenarioConfig:
    return parse_config(Path(path).read_text())


def save_config(cfg: ScenarioConfig, path) -> None:
    Path(path).write_text(format_config(cfg))
