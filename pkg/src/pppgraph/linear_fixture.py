"""Randomized fully linear PPP-shaped problems.

A fixture has the structure of the PPP estimation problem (per-epoch
five-component states chained by a random walk, constant arc ambiguities,
scalar measurements of the state with or without an ambiguity) but linear
measurement functions, so the filter, the batch solver and the incremental
smoother must agree on the final-epoch estimate to rounding error.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bayes_tree import IncrementalSmoother
from .ekf_baseline import EkfState, ekf_predict, scalar_update
from .factor_graph import B, BetweenFactor, FactorGraph, LinearMeasurementFactor, PriorFactor, X
from .gnss_models import STATE_DIM, ArcId
from .stochastic import StochasticModel


@dataclass
class LinearMeasurement:
    h: np.ndarray  # partials with respect to the epoch state
    arc: object  # ArcId of the measured ambiguity, or None
    z: float
    sigma: float


@dataclass
class LinearFixture:
    model: StochasticModel
    prior_mean: np.ndarray
    dt: float
    epochs: list  # per epoch: list of LinearMeasurement
    ambiguity_prior: dict  # ArcId -> a priori mean
    arc_span: dict = field(default_factory=dict)  # ArcId -> (first epoch, last epoch)

    @property
    def n_epochs(self) -> int:
        return len(self.epochs)


def random_linear_fixture(rng: np.random.Generator, n_epochs: int = 12, n_arcs: int = 5,
                          white_clock: bool = False) -> LinearFixture:
    """Draw a random fixture; every epoch has enough measurements to be observable."""
    model = StochasticModel(
        prior_position_sigma=float(rng.uniform(0.5, 3.0)),
        prior_trop_sigma=float(rng.uniform(0.1, 1.0)),
        prior_clock_sigma=float(rng.uniform(1.0, 10.0)),
        prior_ambiguity_sigma=float(rng.uniform(1.0, 10.0)),
        process_position=float(rng.uniform(0.1, 2.0)),
        process_trop=float(rng.uniform(0.01, 0.1)),
        process_clock=float(rng.uniform(0.5, 5.0)),
        white_clock=white_clock,
    )
    dt = float(rng.uniform(0.5, 2.0))
    spans = {}
    for j in range(n_arcs):
        a = int(rng.integers(0, max(1, n_epochs - 2)))
        b = int(rng.integers(a + 1, n_epochs)) if a + 1 < n_epochs else a
        spans[ArcId(f"L{j:02d}", 0)] = (a, b)
    epochs = []
    for k in range(n_epochs):
        meas = []
        for _ in range(6):
            meas.append(LinearMeasurement(rng.normal(size=STATE_DIM), None, float(rng.normal(scale=5.0)),
                                          float(rng.uniform(0.2, 2.0))))
        for arc, (a, b) in spans.items():
            if a <= k <= b:
                meas.append(LinearMeasurement(rng.normal(size=STATE_DIM), arc, float(rng.normal(scale=5.0)),
                                              float(rng.uniform(0.05, 0.5))))
        epochs.append(meas)
    amb = {arc: float(rng.normal(scale=3.0)) for arc in spans}
    return LinearFixture(model, rng.normal(size=STATE_DIM), dt, epochs, amb, spans)


def _new_arcs(fx: LinearFixture, k: int) -> list:
    return [arc for arc, (a, _) in fx.arc_span.items() if a == k]


def fixture_factors(fx: LinearFixture, k: int) -> tuple[list, dict]:
    """Factors and zero initial values of the variables introduced at epoch ``k``."""
    m = fx.model
    factors = []
    values = {X(k): np.zeros(STATE_DIM)}
    if k == 0:
        factors.append(PriorFactor(X(0), fx.prior_mean, m.prior_sigmas() ** 2))
    else:
        factors.append(BetweenFactor(X(k - 1), X(k), m.process_variances(fx.dt)))
    for arc in _new_arcs(fx, k):
        values[B(arc)] = np.zeros(1)
        factors.append(PriorFactor(B(arc), [fx.ambiguity_prior[arc]], [m.prior_ambiguity_sigma**2]))
    for meas in fx.epochs[k]:
        if meas.arc is None:
            factors.append(LinearMeasurementFactor([X(k)], [meas.h[None, :]], meas.z, [meas.sigma**2]))
        else:
            factors.append(LinearMeasurementFactor([X(k), B(meas.arc)], [meas.h[None, :], np.ones((1, 1))],
                                                   meas.z, [meas.sigma**2]))
    return factors, values


def fixture_graph(fx: LinearFixture, n_epochs: int | None = None) -> tuple[FactorGraph, dict]:
    """Factor graph of the first ``n_epochs`` epochs and zero initial values."""
    graph, values = FactorGraph(), {}
    for k in range(fx.n_epochs if n_epochs is None else n_epochs):
        factors, vals = fixture_factors(fx, k)
        for key, v in vals.items():
            graph.add_variable(key)
            values[key] = v
        for f in factors:
            graph.add_factor(f)
    return graph, values


def fixture_filter(fx: LinearFixture) -> EkfState:
    """Run the Kalman filter through the fixture; returns the final state."""
    m = fx.model
    state = None
    for k, meas in enumerate(fx.epochs):
        if state is None:
            state = EkfState.initial(fx.prior_mean, m)
        else:
            state = ekf_predict(state, fx.dt, m)
        for arc in _new_arcs(fx, k):
            state.add_ambiguity(arc, fx.ambiguity_prior[arc], m.prior_ambiguity_sigma**2)
        state.drop_ambiguities([a for a, (s, e) in fx.arc_span.items() if s <= k <= e])
        for j, z in enumerate(meas):
            pred = float(z.h @ state.mean[:STATE_DIM])
            if z.arc is not None:
                pred += state.ambiguity(z.arc)
            scalar_update(state, z.z - pred, z.h, z.sigma**2, z.arc, (k, j))
        state.check_psd(f"at fixture epoch {k}")
    return state


def fixture_smoother(fx: LinearFixture, update_tolerance: float = 0.0, callback=None) -> IncrementalSmoother:
    """Feed the fixture epoch by epoch to an incremental smoother.

    ``callback(k, smoother)`` is invoked after each epoch.
    """
    sm = IncrementalSmoother(relin_threshold=None, update_tolerance=update_tolerance)
    for k in range(fx.n_epochs):
        factors, values = fixture_factors(fx, k)
        sm.update(factors, values, epoch=k)
        if callback is not None:
            callback(k, sm)
    return sm
