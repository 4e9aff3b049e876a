"""Nominal GPS-like constellation (six planes, circular orbits)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..gnss_models import EARTH_MU, EARTH_ROTATION_RATE, ecef_to_geodetic, enu_rotation

GPS_SEMI_MAJOR_AXIS = 26_560_000.0
GPS_INCLINATION = math.radians(55.0)


@dataclass(frozen=True)
class SatelliteEphemeris:
    sat_id: str
    semi_major_axis: float
    inclination: float
    raan: float
    arg_latitude: float  # argument of latitude at t = 0
    clock_offset: float = 0.0  # meters
    clock_drift: float = 0.0  # meters per second

    @property
    def mean_motion(self) -> float:
        return math.sqrt(EARTH_MU / self.semi_major_axis**3)


def nominal_constellation(rng: np.random.Generator | None = None, planes: int = 6,
                          per_plane: int = 5) -> list[SatelliteEphemeris]:
    """Walker-style layout; ``rng`` (if given) draws satellite clock polynomials."""
    sats = []
    for p in range(planes):
        for s in range(per_plane):
            offset = drift = 0.0
            if rng is not None:
                offset = rng.uniform(-3.0e4, 3.0e4)
                drift = rng.uniform(-1.0e-3, 1.0e-3)
            sats.append(
                SatelliteEphemeris(
                    sat_id=f"G{p * per_plane + s + 1:02d}",
                    semi_major_axis=GPS_SEMI_MAJOR_AXIS,
                    inclination=GPS_INCLINATION,
                    raan=math.radians(60.0 * p),
                    arg_latitude=math.radians(360.0 / per_plane * s + 15.0 * p),
                    clock_offset=offset,
                    clock_drift=drift,
                )
            )
    return sats


class Constellation:
    """Vectorized propagation of a set of circular orbits."""

    def __init__(self, ephemerides, earth_rotation: bool = True):
        self.ephemerides = list(ephemerides)
        self.sat_ids = [e.sat_id for e in self.ephemerides]
        self.a = np.array([e.semi_major_axis for e in self.ephemerides])
        self.inc = np.array([e.inclination for e in self.ephemerides])
        self.raan = np.array([e.raan for e in self.ephemerides])
        self.u0 = np.array([e.arg_latitude for e in self.ephemerides])
        self.n = np.sqrt(EARTH_MU / self.a**3)
        self.clk0 = np.array([e.clock_offset for e in self.ephemerides])
        self.clk1 = np.array([e.clock_drift for e in self.ephemerides])
        self.earth_rotation = earth_rotation

    def __len__(self):
        return len(self.ephemerides)

    def positions(self, t: float) -> np.ndarray:
        u = self.u0 + self.n * t
        cu, su = np.cos(u), np.sin(u)
        co, so = np.cos(self.raan), np.sin(self.raan)
        ci, si = np.cos(self.inc), np.sin(self.inc)
        x = self.a * (cu * co - su * ci * so)
        y = self.a * (cu * so + su * ci * co)
        z = self.a * su * si
        if self.earth_rotation:
            th = EARTH_ROTATION_RATE * t
            c, s = math.cos(th), math.sin(th)
            x, y = c * x + s * y, -s * x + c * y
        return np.column_stack([x, y, z])

    def clock_biases(self, t: float) -> np.ndarray:
        return self.clk0 + self.clk1 * t


def propagate_constellation(ephemerides, epoch: float, earth_rotation: bool = True):
    """Positions (ECEF, shape ``(n, 3)``) and clock biases (m) at ``epoch``."""
    c = Constellation(ephemerides, earth_rotation=earth_rotation)
    return c.positions(epoch), c.clock_biases(epoch)


def body_rotation(attitude) -> np.ndarray:
    """Rotation taking ENU vectors into the body frame (forward, right, down)."""
    roll, pitch, yaw = attitude
    # ENU -> NED
    enu_to_ned = np.array([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]])
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    rz = np.array([[cy, sy, 0.0], [-sy, cy, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cp, 0.0, -sp], [0.0, 1.0, 0.0], [sp, 0.0, cp]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cr, sr], [0.0, -sr, cr]])
    return rx @ ry @ rz @ enu_to_ned


def visibility(rx, sat_position, mask: float, attitude=(0.0, 0.0, 0.0), frame=None):
    """Local-level ``(elevation, azimuth)`` if the satellite clears the mask, else ``None``.

    The mask is applied both to the local-level elevation and to the
    elevation above the platform's body x-y plane, so banking hides
    low satellites on the raised-wing side. ``frame`` optionally supplies the precomputed
    ``(enu_rotation, body_rotation)`` pair for the receiver.
    """
    rx = np.asarray(rx, dtype=float)
    if frame is None:
        lat, lon, _ = ecef_to_geodetic(rx)
        frame = (enu_rotation(lat, lon), body_rotation(attitude))
    r_enu, r_body = frame
    los = np.asarray(sat_position, dtype=float) - rx
    los /= np.linalg.norm(los)
    enu = r_enu @ los
    elevation = math.asin(max(-1.0, min(1.0, enu[2])))
    if elevation <= mask:
        return None
    body = r_body @ enu
    if -body[2] <= math.sin(mask):
        return None
    return elevation, math.atan2(enu[0], enu[1]) % (2 * math.pi)
