"""Truth trajectories in a local tangent frame anchored at the scenario origin."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..gnss_models import enu_rotation, geodetic_to_ecef

GRAVITY = 9.80665

RACETRACK_STRAIGHT_M = 2000.0
RACETRACK_RADIUS_M = 800.0
FIGURE_EIGHT_HALF_WIDTH_M = 1500.0
ASCENT_RADIUS_M = 1000.0
ROLL_RAMP_S = 4.0


@dataclass(frozen=True)
class TrajectorySample:
    """Truth platform state at one epoch.

    ``position`` and ``velocity`` are ECEF arrays; ``attitude`` holds roll,
    pitch and yaw (radians) of the body frame relative to the origin's
    east-north-up frame, with yaw measured clockwise from north.
    """

    epoch: float
    position: np.ndarray
    velocity: np.ndarray
    attitude: np.ndarray


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


class _Profile:
    """Analytic local trajectory: ``enu(t)`` and ``enu_velocity(t)`` in meters."""

    def __init__(self, kind: str, duration: float, speed: float, climb_rate: float):
        self.kind = kind
        self.duration = duration
        if kind == "racetrack":
            perimeter = 2 * RACETRACK_STRAIGHT_M + 2 * math.pi * RACETRACK_RADIUS_M
            laps = max(1, round(speed * duration / perimeter))
            self.perimeter = perimeter
            self.speed = laps * perimeter / duration
        elif kind == "figure_eight":
            # mean speed of the lemniscate is close to 3.06 * A * omega
            laps = max(1, round(speed * duration / (6.1 * FIGURE_EIGHT_HALF_WIDTH_M)))
            self.omega = 2 * math.pi * laps / duration
        elif kind == "ascent":
            self.omega = speed / ASCENT_RADIUS_M
            self.climb = climb_rate

    def enu(self, t: float) -> np.ndarray:
        return self._state(t)[0]

    def enu_velocity(self, t: float) -> np.ndarray:
        return self._state(t)[1]

    def _state(self, t: float):
        k = self.kind
        if k == "static":
            return np.zeros(3), np.zeros(3)
        if k == "racetrack":
            return self._racetrack(t)
        if k == "figure_eight":
            a, w = FIGURE_EIGHT_HALF_WIDTH_M, self.omega
            pos = np.array([a * math.sin(w * t), 0.5 * a * math.sin(2 * w * t), 0.0])
            vel = np.array([a * w * math.cos(w * t), a * w * math.cos(2 * w * t), 0.0])
            return pos, vel
        r, w = ASCENT_RADIUS_M, self.omega
        pos = np.array([r * math.sin(w * t), r - r * math.cos(w * t), self.climb * t])
        vel = np.array([r * w * math.cos(w * t), r * w * math.sin(w * t), self.climb])
        return pos, vel

    def _racetrack(self, t: float):
        L, r, v = RACETRACK_STRAIGHT_M, RACETRACK_RADIUS_M, self.speed
        s = (v * t) % self.perimeter
        half_turn = math.pi * r
        if s < L:
            return np.array([-L / 2 + s, -r, 0.0]), np.array([v, 0.0, 0.0])
        s -= L
        if s < half_turn:
            phi = -math.pi / 2 + s / r
            pos = np.array([L / 2 + r * math.cos(phi), r * math.sin(phi), 0.0])
            return pos, v * np.array([-math.sin(phi), math.cos(phi), 0.0])
        s -= half_turn
        if s < L:
            return np.array([L / 2 - s, r, 0.0]), np.array([-v, 0.0, 0.0])
        s -= L
        phi = math.pi / 2 + s / r
        pos = np.array([-L / 2 + r * math.cos(phi), r * math.sin(phi), 0.0])
        return pos, v * np.array([-math.sin(phi), math.cos(phi), 0.0])

    def roll(self, t: float) -> float:
        """Coordinated-turn bank angle, positive right wing down."""
        k = self.kind
        if k in ("static",):
            return 0.0
        if k == "racetrack":
            L, r, v = RACETRACK_STRAIGHT_M, RACETRACK_RADIUS_M, self.speed
            s = (v * t) % self.perimeter
            lap = L + math.pi * r
            s_half = s % lap
            # signed time spent inside the turn segment, ramped at both ends
            if s_half < L:
                inside = -min(s_half, L - s_half) / v
            else:
                inside = min(s_half - L, lap - s_half) / v
            bank = math.atan(v * v / (GRAVITY * r))
            return -bank * float(_smoothstep((inside + ROLL_RAMP_S / 2) / ROLL_RAMP_S))
        if k == "figure_eight":
            a, w = FIGURE_EIGHT_HALF_WIDTH_M, self.omega
            vel = np.array([a * w * math.cos(w * t), a * w * math.cos(2 * w * t)])
            acc = np.array([-a * w * w * math.sin(w * t), -2 * a * w * w * math.sin(2 * w * t)])
        else:
            r, w = ASCENT_RADIUS_M, self.omega
            vel = np.array([r * w * math.cos(w * t), r * w * math.sin(w * t)])
            acc = np.array([-r * w * w * math.sin(w * t), r * w * w * math.cos(w * t)])
        speed = math.hypot(vel[0], vel[1])
        ccw_rate = (vel[0] * acc[1] - vel[1] * acc[0]) / (speed * speed)
        return math.atan(-speed * ccw_rate / GRAVITY)


def _attitude(vel_enu: np.ndarray, roll: float) -> np.ndarray:
    horiz = math.hypot(vel_enu[0], vel_enu[1])
    if horiz < 1e-9:
        return np.array([roll, 0.0, 0.0])
    yaw = math.atan2(vel_enu[0], vel_enu[1])
    pitch = math.atan2(vel_enu[2], horiz)
    return np.array([roll, pitch, yaw])


class Trajectory:
    """Continuous-time trajectory; sample it at arbitrary times."""

    def __init__(self, profile: str, duration: float, origin_lat: float, origin_lon: float,
                 origin_height: float, speed: float = 60.0, climb_rate: float = 3.0):
        self.profile = _Profile(profile, duration, speed, climb_rate)
        self.origin = geodetic_to_ecef(origin_lat, origin_lon, origin_height)
        self.enu_to_ecef = enu_rotation(origin_lat, origin_lon).T

    def position(self, t: float) -> np.ndarray:
        return self.origin + self.enu_to_ecef @ self.profile.enu(t)

    def velocity(self, t: float) -> np.ndarray:
        return self.enu_to_ecef @ self.profile.enu_velocity(t)

    def sample(self, t: float, epoch_offset: float = 0.0) -> TrajectorySample:
        pos_enu, vel_enu = self.profile._state(t)
        return TrajectorySample(
            epoch=epoch_offset + t,
            position=self.origin + self.enu_to_ecef @ pos_enu,
            velocity=self.enu_to_ecef @ vel_enu,
            attitude=_attitude(vel_enu, self.profile.roll(t)),
        )


def generate_trajectory(profile: str, duration: float, rate: float, origin_lat: float = math.radians(39.65),
                        origin_lon: float = math.radians(-79.95), origin_height: float = 1500.0,
                        speed: float = 60.0, climb_rate: float = 3.0, start_epoch: float = 0.0):
    """Sample a trajectory at ``rate`` Hz over ``duration`` seconds.

    Returns ``round(duration * rate)`` samples starting at ``start_epoch``.
    """
    if not (duration > 0 and rate > 0):
        raise ValueError("duration and rate must be positive")
    traj = Trajectory(profile, duration, origin_lat, origin_lon, origin_height, speed, climb_rate)
    n = int(round(duration * rate))
    return [traj.sample(k / rate, start_epoch) for k in range(n)]
