"""Reference PPP extended Kalman filter.

The filter shares the observation functions of :mod:`pppgraph.gnss_models`,
the stochastic model, the code-only reference trajectory and the arc logic
with the factor-graph estimator, so that both consume identical inputs.

State layout: ``[x, y, z, trop_wet, clock, b_1, ..., b_m]`` with one
ionosphere-free ambiguity (meters) per active carrier-phase arc.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NumericalError
from .factor_graph.graph import ArcRegistry
from .gnss_models import (
    CLOCK,
    STATE_DIM,
    elevation_sigma,
    observation_jacobian,
    predict_carrier_phase,
    predict_pseudorange,
)
from .stochastic import StochasticModel

ESTIMATE_COLUMNS = ["epoch_s", "x_m", "y_m", "z_m", "trop_wet_m", "clk_m", "sigma_x", "sigma_y", "sigma_z"]
PSD_TOLERANCE = 1e-9


class EkfState:
    """Mean, covariance and the arc -> state index registry.

    ``clock_diffuse`` marks a clock with infinite variance (white clock
    after a prediction): its covariance row and column are held at zero
    and the next measurement that sees the clock determines it exactly.
    """

    def __init__(self, mean, cov, arcs=None, clock_diffuse: bool = False):
        self.mean = np.array(mean, dtype=float)
        self.cov = np.array(cov, dtype=float)
        n = self.mean.shape[0]
        if n < STATE_DIM or self.cov.shape != (n, n):
            raise InvalidArgumentError("state needs at least 5 entries and a matching square covariance")
        self.arcs: dict = dict(arcs or {})
        self.clock_diffuse = bool(clock_diffuse)

    @classmethod
    def initial(cls, mean, model: StochasticModel) -> "EkfState":
        """Epoch-state mean with the a priori covariance of ``model``."""
        return cls(np.asarray(mean, dtype=float)[:STATE_DIM], np.diag(model.prior_sigmas() ** 2))

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def epoch_state(self) -> np.ndarray:
        return self.mean[:STATE_DIM].copy()

    def copy(self) -> "EkfState":
        return EkfState(self.mean, self.cov, self.arcs, self.clock_diffuse)

    def ambiguity(self, arc) -> float:
        return float(self.mean[self.arcs[arc]])

    def add_ambiguity(self, arc, mean: float, variance: float) -> int:
        """Append an uncorrelated ambiguity state; returns its index."""
        if arc in self.arcs:
            raise InvalidArgumentError(f"arc {arc} already has a state")
        n = self.dim
        self.mean = np.append(self.mean, float(mean))
        cov = np.zeros((n + 1, n + 1))
        cov[:n, :n] = self.cov
        cov[n, n] = variance
        self.cov = cov
        self.arcs[arc] = n
        return n

    def drop_ambiguities(self, keep) -> list:
        """Marginalize out every arc not in ``keep``; returns the dropped arcs."""
        keep = set(keep)
        dropped = [a for a in self.arcs if a not in keep]
        if not dropped:
            return []
        kept = sorted((i, a) for a, i in self.arcs.items() if a in keep)
        idx = np.array(list(range(STATE_DIM)) + [i for i, _ in kept])
        self.mean = self.mean[idx]
        self.cov = self.cov[np.ix_(idx, idx)]
        self.arcs = {a: STATE_DIM + j for j, (_, a) in enumerate(kept)}
        return dropped

    def check_psd(self, context: str = "") -> None:
        """Symmetrize and assert the smallest eigenvalue is above ``-1e-9``."""
        self.cov = 0.5 * (self.cov + self.cov.T)
        if not np.all(np.isfinite(self.cov)) or not np.all(np.isfinite(self.mean)):
            raise NumericalError(f"non-finite filter state {context}".strip())
        low = float(np.linalg.eigvalsh(self.cov)[0])
        if low < -PSD_TOLERANCE:
            raise NumericalError(f"covariance not positive semi-definite (min eigenvalue {low:.3e}) {context}".strip())


def ekf_predict(state: EkfState, dt: float, model: StochasticModel, displacement=None) -> EkfState:
    """Random-walk prediction over ``dt`` seconds.

    The transition is the identity (plus the known ``displacement`` of the
    position, if given); process noise is added to position and wet delay,
    ambiguities are constant and a white clock becomes diffuse.
    """
    if not dt > 0:
        raise InvalidArgumentError(f"prediction interval must be positive, got {dt}")
    out = state.copy()
    if displacement is not None:
        out.mean[:3] += np.asarray(displacement, dtype=float)
    q = model.process_variances(dt)
    idx = np.arange(CLOCK)
    out.cov[idx, idx] += q[:CLOCK]
    if np.isinf(q[CLOCK]):
        out.cov[CLOCK, :] = 0.0
        out.cov[:, CLOCK] = 0.0
        out.clock_diffuse = True
    else:
        out.cov[CLOCK, CLOCK] += q[CLOCK]
    return out


@dataclass
class Innovation:
    label: object
    innovation: float
    variance: float  # innovation variance; inf for the update that resolves a diffuse clock

    @property
    def nis(self) -> float:
        return 0.0 if np.isinf(self.variance) else self.innovation**2 / self.variance


@dataclass
class InnovationRecord:
    epoch: float
    items: list = field(default_factory=list)

    @property
    def nis(self) -> float:
        """Sum of normalized squared innovations (finite-variance ones)."""
        return float(sum(i.nis for i in self.items))

    @property
    def dof(self) -> int:
        return sum(1 for i in self.items if np.isfinite(i.variance))


def scalar_update(state: EkfState, innovation: float, h_state, variance: float, arc=None, label=None) -> Innovation:
    """In-place update with one scalar measurement.

    ``h_state`` holds the partials with respect to the five epoch-state
    entries; a measurement of an ambiguity adds a unit partial for ``arc``.
    The covariance update uses the Joseph form.
    """
    if not variance > 0:
        raise NumericalError(f"non-positive measurement variance for {label}")
    n = state.dim
    h = np.zeros(n)
    h[:STATE_DIM] = h_state
    if arc is not None:
        h[state.arcs[arc]] += 1.0
    P = state.cov
    if state.clock_diffuse and h[CLOCK] != 0.0:
        # infinite clock variance: the measurement pins the clock given the rest
        hc = h[CLOCK]
        h[CLOCK] = 0.0
        u = P @ h
        s = float(h @ u) + variance
        state.mean[CLOCK] += innovation / hc
        P[CLOCK, :] = -u / hc
        P[:, CLOCK] = -u / hc
        P[CLOCK, CLOCK] = s / (hc * hc)
        state.clock_diffuse = False
        return Innovation(label, float(innovation), float("inf"))
    u = P @ h
    terms = h * u
    s = float(terms.sum()) + variance
    if not s > 0 or not np.isfinite(s):
        raise NumericalError(f"singular innovation variance for {label}")
    k = u / s
    state.mean += k * innovation
    # Joseph form (I - k h) P (I - k h)^T + k r k^T. When one state dominates
    # the innovation variance (e.g. a barely constrained clock) its diagonal
    # entry 1 - k_i h_i is formed from the remaining terms to avoid cancellation.
    A = -np.outer(k, h)
    A[np.diag_indices(n)] += 1.0
    i = int(np.argmax(np.abs(terms)))
    A[i, i] = (float(np.delete(terms, i).sum()) + variance) / s
    cov = A @ P @ A.T + variance * np.outer(k, k)
    state.cov = 0.5 * (cov + cov.T)
    return Innovation(label, float(innovation), s)


def ekf_update(state: EkfState, observations, model: StochasticModel, registry: ArcRegistry,
               epoch=None) -> tuple[EkfState, InnovationRecord]:
    """Measurement update with one epoch of ionosphere-free observations.

    New arcs append an ambiguity state centred on ``cp_if - pr_if`` with
    the a priori ambiguity sigma; arcs that are no longer tracked are
    marginalized out. Each satellite contributes a pseudorange and then a
    carrier-phase scalar update, each linearized at the current mean.
    """
    out = state.copy()
    var_b = model.prior_ambiguity_sigma**2
    arcs = []
    for obs in observations:
        arc, is_new = registry.resolve(obs)
        if is_new:
            out.add_ambiguity(arc, obs.cp_if - obs.pr_if, var_b)
        arcs.append(arc)
    registry.end_epoch(o.sat_id for o in observations)
    out.drop_ambiguities(registry.current.values())
    record = InnovationRecord(epoch if epoch is not None else (observations[0].epoch if observations else None))
    for obs, arc in zip(observations, arcs):
        x = out.mean[:STATE_DIM]
        sig = elevation_sigma(model.code_sigma, obs.elevation)
        y = obs.pr_if - predict_pseudorange(x, obs)
        record.items.append(scalar_update(out, y, observation_jacobian(x, obs), sig * sig, None, (obs.sat_id, "code")))
        x = out.mean[:STATE_DIM]
        amb = out.ambiguity(arc)
        sig = elevation_sigma(model.phase_sigma, obs.elevation)
        y = obs.cp_if - predict_carrier_phase(x, amb, obs)
        h = observation_jacobian(x, obs)
        record.items.append(scalar_update(out, y, h, sig * sig, arc, (obs.sat_id, "phase")))
    out.check_psd(f"at epoch {record.epoch}")
    return out, record


@dataclass
class EkfRunResult:
    epochs: np.ndarray
    estimates: np.ndarray  # (n, 5)
    sigmas: np.ndarray  # (n, 3) position standard deviations
    ambiguities: list  # per epoch: {ArcId: estimate}
    innovations: list  # InnovationRecord per epoch
    update_s: np.ndarray = None  # wall time of each predict/update cycle


def run_filter(prepared, model: StochasticModel) -> EkfRunResult:
    """Predict/update loop over prepared epochs (see :func:`pppgraph.ppp.prepare_epochs`).

    The first epoch starts from the same initial state and a priori
    covariance as the graph estimator; later predictions carry the
    displacement of the code-only reference, as the graph's motion factor
    does.
    """
    n = len(prepared)
    est = np.zeros((n, STATE_DIM))
    sig = np.zeros((n, 3))
    ambs, records = [], []
    wall = np.zeros(n)
    registry = ArcRegistry()
    state = None
    last = None
    for i, ep in enumerate(prepared):
        t0 = time.perf_counter()
        if state is None:
            state = EkfState.initial(ep.initial_state(), model)
        else:
            dt = ep.epoch - last.epoch
            if not dt > 0:
                raise NumericalError(f"non-increasing epoch time at {ep.epoch}")
            state = ekf_predict(state, dt, model, ep.reference - last.reference)
        state, rec = ekf_update(state, ep.observations, model, registry, ep.epoch)
        wall[i] = time.perf_counter() - t0
        est[i] = state.mean[:STATE_DIM]
        sig[i] = np.sqrt(np.clip(np.diag(state.cov)[:3], 0.0, None))
        ambs.append({a: state.ambiguity(a) for a in state.arcs})
        records.append(rec)
        last = ep
    return EkfRunResult(np.array([ep.epoch for ep in prepared]), est, sig, ambs, records, wall)


def write_estimates(path, epochs, estimates, sigmas) -> None:
    """Per-epoch estimate CSV (position, wet delay, clock, position sigmas)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(ESTIMATE_COLUMNS)
        for t, x, s in zip(epochs, estimates, sigmas):
            w.writerow([f"{t:.4f}", *(f"{v:.6f}" for v in x[:STATE_DIM]), *(f"{v:.6f}" for v in s[:3])])


def read_estimates(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_estimates`: ``(epochs, estimates (n, 5), sigmas (n, 3))``."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ESTIMATE_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = np.array([[float(v) for v in r] for r in reader if r]).reshape(-1, len(ESTIMATE_COLUMNS))
    return rows[:, 0], rows[:, 1:6], rows[:, 6:9]
