"""Shared PPP preprocessing and the factor-graph PPP estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bayes_tree import IncrementalSmoother
from .errors import NumericalError
from .factor_graph import ArcRegistry, B, FactorGraph, X, add_epoch, add_gnss_factors
from .gnss_models import (
    STATE_DIM,
    GnssObservation,
    IfObservation,
    dry_zenith_at_height,
    ecef_to_geodetic,
    to_iono_free,
)
from .stochastic import StochasticModel

INITIAL_WET_ZENITH = 0.1  # meters; centre of the a priori wet delay


@dataclass
class PreparedEpoch:
    """One epoch of ionosphere-free observations plus its code-only fix.

    ``reference`` is the code-only position, ``reference_clock`` the
    matching receiver clock; ``fix_ok`` is False when fewer than four
    satellites were available and the previous fix was carried forward.
    """

    index: int
    epoch: float
    observations: list
    reference: np.ndarray
    reference_clock: float
    fix_ok: bool = True

    def initial_state(self) -> np.ndarray:
        x = np.empty(STATE_DIM)
        x[:3] = self.reference
        x[3] = INITIAL_WET_ZENITH
        x[4] = self.reference_clock
        return x


def single_point_fix(observations, initial=None, dry_zenith: float = 0.0, iterations: int = 10):
    """Weighted code-only least squares for position and clock.

    Returns ``(position, clock)``. Raises :class:`NumericalError` with fewer
    than four observations or a singular geometry.
    """
    if len(observations) < 4:
        raise NumericalError(f"code-only fix needs 4 satellites, got {len(observations)}")
    x = np.zeros(4) if initial is None else np.asarray(initial, dtype=float).copy()
    sats = np.array([o.sat_position for o in observations])
    pr = np.array([o.pr_if for o in observations])
    sclk = np.array([o.sat_clock_bias for o in observations])
    sin_el = np.sin(np.array([o.elevation for o in observations]))
    trop = dry_zenith / sin_el
    w = sin_el  # sqrt of the 1/sigma^2 weights, sigma ~ 1/sin(el)
    for _ in range(iterations):
        d = sats - x[:3]
        r = np.sqrt((d * d).sum(axis=1))
        H = np.column_stack([-d / r[:, None], np.ones(len(r))])
        res = pr - (r + x[3] - sclk + trop)
        dx, *_ = np.linalg.lstsq(H * w[:, None], res * w, rcond=None)
        if not np.all(np.isfinite(dx)):
            raise NumericalError("singular code-only geometry")
        x += dx
        if np.linalg.norm(dx[:3]) < 1e-4:
            break
    return x[:3].copy(), float(x[3])


def prepare_epochs(epochs) -> list[PreparedEpoch]:
    """IF-combine raw observations, compute code fixes and attach dry delays.

    ``epochs`` is a list of per-epoch observation lists (raw
    :class:`GnssObservation` or already combined :class:`IfObservation`).
    """
    out = []
    prev = None
    prev_clock = 0.0
    for i, obs_list in enumerate(epochs):
        if not obs_list:
            continue
        ifo = [to_iono_free(o) if isinstance(o, GnssObservation) else o for o in obs_list]
        epoch = ifo[0].epoch
        ok = True
        try:
            init = None if prev is None else np.append(prev, prev_clock)
            pos, clk = single_point_fix(ifo, init)
            dry = dry_zenith_at_height(ecef_to_geodetic(pos)[2])
            pos, clk = single_point_fix(ifo, np.append(pos, clk), dry)
        except NumericalError:
            if prev is None:
                raise
            ok = False
            pos, clk = prev.copy(), prev_clock
        dry = dry_zenith_at_height(ecef_to_geodetic(pos)[2])
        ifo = [o.with_dry_zenith(dry) for o in ifo]
        out.append(PreparedEpoch(len(out), epoch, ifo, pos, clk, ok))
        prev, prev_clock = pos, clk
    return out


@dataclass
class GraphRunResult:
    epochs: np.ndarray
    online: np.ndarray  # (n, 5) filtered estimate of each epoch right after its update
    online_sigma: np.ndarray  # (n, 3) position sigmas of the filtered estimate
    smoothed: np.ndarray  # (n, 5) final smoothed trajectory
    online_ambiguities: list  # per epoch: {ArcId: estimate} of the arcs observed at that epoch
    ambiguities: dict  # ArcId -> final smoothed estimate
    records: list
    graph: FactorGraph = None
    n_ambiguities: int = 0
    arcs: list = field(default_factory=list)


class GraphPpp:
    """Incremental factor-graph PPP: one Bayes-tree update per epoch."""

    def __init__(self, model: StochasticModel, relin_threshold: float = 0.1, update_tolerance: float = 1e-6,
                 keep_graph: bool = False, relin_skip: int = 1):
        self.model = model
        self.smoother = IncrementalSmoother(relin_threshold, update_tolerance, relin_skip=relin_skip)
        self.registry = ArcRegistry()
        self.graph = FactorGraph()
        self.values: dict = {}
        self.keep_graph = keep_graph
        self.last: PreparedEpoch | None = None

    def step(self, ep: PreparedEpoch):
        """Add one epoch; returns the list of arcs observed at it."""
        graph = self.graph
        values = self.values
        if self.last is None:
            factors = add_epoch(graph, values, ep.index, ep.initial_state(), self.model)
        else:
            dt = ep.epoch - self.last.epoch
            if not dt > 0:
                raise NumericalError(f"non-increasing epoch time at {ep.epoch}")
            factors = add_epoch(graph, values, ep.index, ep.initial_state(), self.model, dt=dt,
                                displacement=ep.reference - self.last.reference)
        gnss, new_keys = add_gnss_factors(graph, values, ep.index, ep.observations, self.registry, self.model)
        new_values = {X(ep.index): values[X(ep.index)]}
        for k in new_keys:
            new_values[k] = values[k]
        self.smoother.update(factors + gnss, new_values, epoch=ep.epoch)
        if not self.keep_graph:
            # the smoother owns the factors; drop the duplicate bookkeeping
            graph.factors.clear()
            graph._factors_of.clear()
            values.clear()
        self.last = ep
        return [self.registry.current[o.sat_id] for o in ep.observations]

    def run(self, prepared) -> GraphRunResult:
        n = len(prepared)
        online = np.zeros((n, STATE_DIM))
        sig = np.zeros((n, 3))
        online_amb = []
        for i, ep in enumerate(prepared):
            arcs = self.step(ep)
            key = X(ep.index)
            online[i] = self.smoother.estimate(key)
            cov = self.smoother.covariance(key)
            sig[i] = np.sqrt(np.clip(np.diag(cov)[:3], 0.0, None))
            online_amb.append({a: float(self.smoother.estimate(B(a))[0]) for a in arcs})
        smoothed = np.array([self.smoother.estimate(X(ep.index)) for ep in prepared]).reshape(n, STATE_DIM)
        amb = {a: float(self.smoother.estimate(B(a))[0]) for a in self.registry.arcs}
        return GraphRunResult(
            epochs=np.array([ep.epoch for ep in prepared]),
            online=online,
            online_sigma=sig,
            smoothed=smoothed,
            online_ambiguities=online_amb,
            ambiguities=amb,
            records=self.smoother.records,
            graph=self.graph if self.keep_graph else None,
            n_ambiguities=len(self.registry.arcs),
            arcs=list(self.registry.arcs),
        )


def run_graph(prepared, model: StochasticModel, relin_threshold: float = 0.1, update_tolerance: float = 1e-6,
              keep_graph: bool = False, relin_skip: int = 1) -> GraphRunResult:
    return GraphPpp(model, relin_threshold, update_tolerance, keep_graph, relin_skip).run(prepared)


def position_sigma_ok(sigma) -> bool:
    return bool(np.all(np.isfinite(sigma)))


def epoch_dt(prev: float, cur: float) -> float:
    dt = cur - prev
    if not dt > 0 or not math.isfinite(dt):
        raise NumericalError(f"non-increasing epoch time {cur}")
    return dt
