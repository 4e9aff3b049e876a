"""GNSS measurement models for dual-frequency precise point positioning.

Everything here is a pure function of its inputs. Clock and ambiguity terms
are carried in meters (range-equivalent) so that the estimated state vector
has a single unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Optional

import numpy as np

from .errors import ArcMismatchError, DomainError, InvalidArgumentError

SPEED_OF_LIGHT = 299_792_458.0
F_L1 = 1575.42e6
F_L2 = 1227.60e6
LAMBDA_L1 = SPEED_OF_LIGHT / F_L1
LAMBDA_L2 = SPEED_OF_LIGHT / F_L2

EARTH_MU = 3.986005e14
EARTH_ROTATION_RATE = 7.2921151467e-5
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)

# state layout of an epoch variable: x, y, z, wet zenith delay, clock
STATE_DIM = 5
POSITION = slice(0, 3)
TROP = 3
CLOCK = 4


@dataclass(frozen=True)
class EcefPosition:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    @classmethod
    def from_array(cls, a) -> "EcefPosition":
        return cls(float(a[0]), float(a[1]), float(a[2]))


@dataclass(frozen=True)
class EpochState:
    """Receiver position (ECEF), wet zenith delay and clock bias, all in meters.

    Estimators work on increments of ``position``; the absolute coordinate is
    kept so that linearization points are explicit.
    """

    position: np.ndarray
    trop_wet_zenith: float = 0.0
    clock_bias: float = 0.0

    def to_vector(self) -> np.ndarray:
        return np.array([*self.position, self.trop_wet_zenith, self.clock_bias], dtype=float)

    @classmethod
    def from_vector(cls, v) -> "EpochState":
        v = np.asarray(v, dtype=float)
        return cls(position=v[POSITION].copy(), trop_wet_zenith=float(v[TROP]), clock_bias=float(v[CLOCK]))


class ArcId(NamedTuple):
    """A continuous carrier-phase arc: satellite plus per-satellite sequence number."""

    sat_id: str
    sequence: int

    def __str__(self) -> str:
        return f"{self.sat_id}#{self.sequence}"

    @classmethod
    def parse(cls, text: str) -> "ArcId":
        sat, _, seq = text.partition("#")
        return cls(sat, int(seq))


@dataclass(frozen=True)
class AmbiguityState:
    value: float
    arc_id: ArcId


@dataclass(frozen=True)
class GnssObservation:
    epoch: float
    sat_id: str
    pr_l1: float
    pr_l2: float
    cp_l1: float
    cp_l2: float
    loss_of_lock: bool
    elevation: float
    sat_position: EcefPosition
    sat_clock_bias: float


@dataclass(frozen=True)
class IfObservation:
    """Ionosphere-free observation plus the geometry needed to predict it.

    ``dry_zenith`` is the modelled hydrostatic zenith delay at the receiver;
    it is a known correction and is therefore not a function of the state.
    """

    epoch: float
    sat_id: str
    pr_if: float
    cp_if: float
    elevation: float
    sat_position: np.ndarray
    sat_clock_bias: float
    loss_of_lock: bool = False
    dry_zenith: float = 0.0

    def with_dry_zenith(self, dry_zenith: float) -> "IfObservation":
        return replace(self, dry_zenith=float(dry_zenith))


@dataclass(frozen=True)
class Corrections:
    """Additive model terms that the simulation study leaves at zero."""

    relativistic: float = 0.0
    phase_center: float = 0.0
    dcb: float = 0.0
    windup: float = 0.0

    @property
    def code(self) -> float:
        return self.relativistic + self.phase_center + self.dcb

    @property
    def phase(self) -> float:
        return self.relativistic + self.phase_center + self.windup


NO_CORRECTIONS = Corrections()


# ---------------------------------------------------------------------------
# ionosphere-free combination


def iono_free_coefficients(f1: float = F_L1, f2: float = F_L2) -> tuple[float, float]:
    """Return ``(c1, c2)`` such that ``O_IF = c1*O_1 - c2*O_2``; ``c1 - c2 == 1``."""
    if not (f1 > 0 and f2 > 0):
        raise InvalidArgumentError(f"frequencies must be positive, got {f1}, {f2}")
    if f1 == f2:
        raise InvalidArgumentError("ionosphere-free combination needs two distinct frequencies")
    f1s, f2s = f1 * f1, f2 * f2
    den = f1s - f2s
    return f1s / den, f2s / den


def iono_free_combine(o_l1, o_l2, f1: float = F_L1, f2: float = F_L2):
    """First-order ionosphere-free combination of two observables (meters)."""
    c1, c2 = iono_free_coefficients(f1, f2)
    return c1 * o_l1 - c2 * o_l2


def to_iono_free(obs: GnssObservation, dry_zenith: float = 0.0) -> IfObservation:
    return IfObservation(
        epoch=obs.epoch,
        sat_id=obs.sat_id,
        pr_if=float(iono_free_combine(obs.pr_l1, obs.pr_l2)),
        cp_if=float(iono_free_combine(obs.cp_l1, obs.cp_l2)),
        elevation=obs.elevation,
        sat_position=obs.sat_position.as_array(),
        sat_clock_bias=obs.sat_clock_bias,
        loss_of_lock=obs.loss_of_lock,
        dry_zenith=dry_zenith,
    )


def if_noise_sigma(sigma_l1: float, sigma_l2: float) -> float:
    """Standard deviation of the IF combination of independent L1/L2 noise."""
    c1, c2 = iono_free_coefficients()
    return math.hypot(c1 * sigma_l1, c2 * sigma_l2)


# ---------------------------------------------------------------------------
# geometry


def _as_xyz(p) -> np.ndarray:
    if isinstance(p, EcefPosition):
        return p.as_array()
    return np.asarray(p, dtype=float)


def geometric_range(rx, sat) -> float:
    """Euclidean distance between receiver and satellite (meters)."""
    d = _as_xyz(sat) - _as_xyz(rx)
    return float(math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]))


def ecef_to_geodetic(p) -> tuple[float, float, float]:
    """WGS84 latitude, longitude (radians) and ellipsoidal height (meters)."""
    x, y, z = _as_xyz(p)
    lon = math.atan2(y, x)
    rho = math.hypot(x, y)
    lat = math.atan2(z, rho * (1.0 - WGS84_E2))
    height = 0.0
    for _ in range(10):
        sin_lat = math.sin(lat)
        n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
        height = rho / math.cos(lat) - n if abs(lat) < 1.5 else z / sin_lat - n * (1.0 - WGS84_E2)
        new_lat = math.atan2(z, rho * (1.0 - WGS84_E2 * n / (n + height)))
        if abs(new_lat - lat) < 1e-13:
            lat = new_lat
            break
        lat = new_lat
    return lat, lon, height


def geodetic_to_ecef(lat: float, lon: float, height: float) -> np.ndarray:
    sin_lat = math.sin(lat)
    n = WGS84_A / math.sqrt(1.0 - WGS84_E2 * sin_lat * sin_lat)
    return np.array(
        [
            (n + height) * math.cos(lat) * math.cos(lon),
            (n + height) * math.cos(lat) * math.sin(lon),
            (n * (1.0 - WGS84_E2) + height) * sin_lat,
        ]
    )


def enu_rotation(lat: float, lon: float) -> np.ndarray:
    """Rows are the east, north and up unit vectors expressed in ECEF."""
    sl, cl = math.sin(lat), math.cos(lat)
    so, co = math.sin(lon), math.cos(lon)
    return np.array(
        [
            [-so, co, 0.0],
            [-sl * co, -sl * so, cl],
            [cl * co, cl * so, sl],
        ]
    )


# ---------------------------------------------------------------------------
# troposphere and weighting


def standard_atmosphere(height: float) -> tuple[float, float]:
    """Pressure (mbar) and temperature (K) of the standard atmosphere at ``height``."""
    h = max(height, -500.0)
    pressure = 1013.25 * (1.0 - 2.2557e-5 * h) ** 5.2559
    temperature = 288.15 - 0.0065 * h
    return pressure, temperature


def tropo_dry_zenith(height: float, pressure: float = 1013.25, temperature: float = 288.15) -> float:
    """Hopfield hydrostatic zenith delay in meters.

    ``pressure`` and ``temperature`` are surface values at the receiver; the
    dry layer top sits at ``40136 + 148.72 (T - 273.16)`` meters.
    """
    if not temperature > 0:
        raise InvalidArgumentError(f"temperature must be positive, got {temperature}")
    if pressure < 0:
        raise InvalidArgumentError(f"pressure must be non-negative, got {pressure}")
    layer_top = 40136.0 + 148.72 * (temperature - 273.16)
    thickness = max(layer_top - height, 0.0)
    refractivity = 77.64 * pressure / temperature
    return 1e-6 / 5.0 * refractivity * thickness


def dry_zenith_at_height(height: float) -> float:
    """Hopfield dry zenith delay using the standard atmosphere at ``height``."""
    pressure, temperature = standard_atmosphere(height)
    return tropo_dry_zenith(height, pressure, temperature)


def _check_elevation(elevation: float) -> None:
    if not (0.0 < elevation <= math.pi / 2 + 1e-12):
        raise DomainError(f"elevation must lie in (0, pi/2], got {elevation}")


def mapping_function(elevation: float) -> float:
    """Troposphere mapping ``1/sin(el)``, shared by dry and wet components."""
    _check_elevation(elevation)
    return 1.0 / math.sin(elevation)


def elevation_sigma(base_sigma: float, elevation: float) -> float:
    if not base_sigma > 0:
        raise InvalidArgumentError(f"base sigma must be positive, got {base_sigma}")
    _check_elevation(elevation)
    return base_sigma / math.sin(elevation)


# ---------------------------------------------------------------------------
# observation functions


def _common_terms(x: np.ndarray, obs: IfObservation) -> float:
    d = obs.sat_position - x[POSITION]
    rng = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    m = mapping_function(obs.elevation)
    return rng + x[CLOCK] - obs.sat_clock_bias + (obs.dry_zenith + x[TROP]) * m


def _state_vector(state) -> np.ndarray:
    if isinstance(state, EpochState):
        return state.to_vector()
    return np.asarray(state, dtype=float)


def predict_pseudorange(state, obs: IfObservation, corrections: Corrections = NO_CORRECTIONS) -> float:
    """Predicted ionosphere-free pseudorange for ``state`` (EpochState or 5-vector)."""
    return _common_terms(_state_vector(state), obs) + corrections.code


def predict_carrier_phase(
    state, ambiguity, obs: IfObservation, corrections: Corrections = NO_CORRECTIONS
) -> float:
    """Predicted ionosphere-free carrier phase.

    ``ambiguity`` is an :class:`AmbiguityState` (its arc must belong to the
    observed satellite) or a bare float in meters.
    """
    if isinstance(ambiguity, AmbiguityState):
        if ambiguity.arc_id.sat_id != obs.sat_id:
            raise ArcMismatchError(f"arc {ambiguity.arc_id} does not belong to satellite {obs.sat_id}")
        value = ambiguity.value
    else:
        value = float(ambiguity)
    return _common_terms(_state_vector(state), obs) + corrections.phase + value


def observation_jacobian(state, obs: IfObservation, ambiguity: Optional[object] = None) -> np.ndarray:
    """Partials of the predicted measurement.

    Returns ``[d/dx, d/dy, d/dz, d/dTwet, d/dclock]`` for a pseudorange and the
    same with a trailing ``d/dambiguity = 1`` when ``ambiguity`` is given.
    """
    x = _state_vector(state)
    d = obs.sat_position - x[POSITION]
    rng = math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    row = np.empty(STATE_DIM + (ambiguity is not None))
    row[POSITION] = -d / rng
    row[TROP] = mapping_function(obs.elevation)
    row[CLOCK] = 1.0
    if ambiguity is not None:
        row[STATE_DIM] = 1.0
    return row


def elevation_azimuth(rx, sat) -> tuple[float, float]:
    """Local-level elevation and azimuth of ``sat`` seen from ``rx`` (radians)."""
    rx = _as_xyz(rx)
    lat, lon, _ = ecef_to_geodetic(rx)
    enu = enu_rotation(lat, lon) @ (_as_xyz(sat) - rx)
    horiz = math.hypot(enu[0], enu[1])
    return math.atan2(enu[2], horiz), math.atan2(enu[0], enu[1]) % (2 * math.pi)
