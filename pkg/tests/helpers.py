"""Shared test fixtures: random receiver/satellite geometries and finite differences."""

import math

import numpy as np

from pppgraph.gnss_models import IfObservation, enu_rotation, geodetic_to_ecef

ORBIT_RADIUS = 26_560_000.0


def random_geometry(rng: np.random.Generator, ambiguity: bool = True):
    """A receiver state, a visible satellite observation and an ambiguity value.

    Returns ``(state, obs, ambiguity)``; ``state`` is the 5-vector
    ``[x, y, z, trop_wet, clock]``.
    """
    lat = rng.uniform(-1.2, 1.2)
    lon = rng.uniform(-math.pi, math.pi)
    rx = geodetic_to_ecef(lat, lon, rng.uniform(0.0, 10000.0))
    el = rng.uniform(math.radians(10.0), math.radians(89.0))
    az = rng.uniform(0.0, 2 * math.pi)
    los_enu = np.array([math.cos(el) * math.sin(az), math.cos(el) * math.cos(az), math.sin(el)])
    los = enu_rotation(lat, lon).T @ los_enu
    # distance along the line of sight to the orbit sphere
    b = rx @ los
    dist = -b + math.sqrt(b * b - (rx @ rx - ORBIT_RADIUS**2))
    sat = rx + dist * los
    state = np.concatenate([rx + rng.normal(0.0, 50.0, 3), [rng.uniform(0.0, 0.5), rng.normal(0.0, 1e4)]])
    obs = IfObservation(
        epoch=0.0,
        sat_id="G%02d" % rng.integers(1, 33),
        pr_if=dist + rng.normal(0.0, 10.0),
        cp_if=dist + rng.normal(0.0, 10.0),
        elevation=el,
        sat_position=sat,
        sat_clock_bias=rng.normal(0.0, 1e3),
        dry_zenith=rng.uniform(1.5, 2.4),
    )
    amb = rng.normal(0.0, 20.0) if ambiguity else None
    return state, obs, amb


def central_difference(f, x: np.ndarray, step) -> np.ndarray:
    """Jacobian of vector function ``f`` at ``x`` by central differences; ``step`` per coordinate."""
    x = np.asarray(x, dtype=float)
    steps = np.broadcast_to(np.asarray(step, dtype=float), x.shape)
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = steps[i]
        cols.append((np.atleast_1d(f(x + e)) - np.atleast_1d(f(x - e))) / (2 * steps[i]))
    return np.stack(cols, axis=-1)


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)) / max(np.linalg.norm(b), 1e-300))


def two_landmark_graph(seed: int = 0):
    """The three-epoch, two-ambiguity example graph.

    ``B1`` is observed at epochs 1 and 2, ``B2`` at epochs 2 and 3; the
    epochs form a random-walk chain with a prior on the first. Returns
    ``(graph, keys)`` with ``keys = (B1, B2, X1, X2, X3)``.
    """
    from pppgraph.factor_graph import B, BetweenFactor, FactorGraph, LinearMeasurementFactor, PriorFactor, X

    rng = np.random.default_rng(seed)
    x1, x2, x3, b1, b2 = X(1), X(2), X(3), B("1"), B("2")
    g = FactorGraph()
    for k in (x1, x2, x3, b1, b2):
        g.add_variable(k)

    def lin(keys):
        return LinearMeasurementFactor(keys, [rng.normal(size=(2, k.dim)) for k in keys], rng.normal(size=2),
                                       np.ones(2))

    g.add_factor(PriorFactor(x1, np.zeros(5), np.ones(5)))
    g.add_factor(BetweenFactor(x1, x2, np.ones(5)))
    g.add_factor(BetweenFactor(x2, x3, np.ones(5)))
    for x in (x1, x2, x3):
        for _ in range(3):
            g.add_factor(lin([x]))
    for b, xs in ((b1, (x1, x2)), (b2, (x2, x3))):
        for x in xs:
            g.add_factor(lin([x, b]))
    return g, (b1, b2, x1, x2, x3)
