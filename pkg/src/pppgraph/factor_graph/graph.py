"""Factor-graph container and the PPP graph construction steps."""

from __future__ import annotations

from collections import defaultdict

import numpy as np

from ..errors import GraphStructureError
from ..gnss_models import ArcId, IfObservation, elevation_sigma
from ..stochastic import StochasticModel
from .factors import B, BetweenFactor, CarrierPhaseFactor, Factor, PriorFactor, PseudorangeFactor, X, VariableKey


class FactorGraph:
    """Bipartite graph of variables and factors.

    Edges are implicit in each factor's ``keys``; ``factors_of`` indexes them
    from the variable side.
    """

    def __init__(self):
        self.variables: dict[VariableKey, int] = {}
        self.factors: list[Factor] = []
        self._factors_of: dict[VariableKey, list[int]] = defaultdict(list)

    def __len__(self) -> int:
        return len(self.factors)

    def add_variable(self, key: VariableKey) -> None:
        if key in self.variables:
            raise GraphStructureError(f"variable {key} already exists")
        self.variables[key] = key.dim

    def add_factor(self, factor: Factor) -> int:
        for k in factor.keys:
            if k not in self.variables:
                raise GraphStructureError(f"factor references unknown variable {k}")
        self.factors.append(factor)
        idx = len(self.factors) - 1
        for k in factor.keys:
            self._factors_of[k].append(idx)
        return idx

    def factors_of(self, key: VariableKey) -> list[int]:
        return list(self._factors_of.get(key, ()))

    def edges(self):
        """``(factor index, variable key)`` pairs."""
        for i, f in enumerate(self.factors):
            for k in f.keys:
                yield i, k

    def neighbors(self, key: VariableKey) -> set:
        """Variables sharing at least one factor with ``key``."""
        out = set()
        for i in self._factors_of.get(key, ()):
            out.update(self.factors[i].keys)
        out.discard(key)
        return out

    def total_dim(self) -> int:
        return sum(self.variables.values())

    def epoch_keys(self) -> list[VariableKey]:
        return [k for k in self.variables if k.kind == "x"]

    def ambiguity_keys(self) -> list[VariableKey]:
        return [k for k in self.variables if k.kind == "b"]

    def cost(self, values) -> float:
        return sum(f.cost(values) for f in self.factors)


class ArcRegistry:
    """Tracks the open carrier-phase arc of each satellite.

    A new arc starts when a satellite was not observed at the previous epoch
    or its loss-of-lock flag is set.
    """

    def __init__(self):
        self.current: dict[str, ArcId] = {}
        self.count: dict[str, int] = {}
        self._last_seen: set = set()
        self.arcs: list[ArcId] = []

    def resolve(self, obs: IfObservation) -> tuple[ArcId, bool]:
        sat = obs.sat_id
        if sat in self._last_seen and not obs.loss_of_lock and sat in self.current:
            return self.current[sat], False
        seq = self.count.get(sat, 0)
        self.count[sat] = seq + 1
        arc = ArcId(sat, seq)
        self.current[sat] = arc
        self.arcs.append(arc)
        return arc, True

    def end_epoch(self, sat_ids) -> None:
        seen = set(sat_ids)
        for sat in list(self.current):
            if sat not in seen:
                del self.current[sat]
        self._last_seen = seen


def add_epoch(graph: FactorGraph, values: dict, epoch_index: int, initial, model: StochasticModel,
              dt: float = 1.0, prior_mean=None, displacement=None) -> list[Factor]:
    """Add the state variable of ``epoch_index`` and its prior or motion factor.

    The first epoch gets an a priori factor centred on ``prior_mean``
    (defaults to ``initial``); later epochs get a random-walk motion factor
    with the model's process noise, leaving white-clock components free.
    ``displacement`` is an optional known 3-D position change since the
    previous epoch (the walk then acts on the offset from it).
    """
    key = X(epoch_index)
    if epoch_index > 0 and X(epoch_index - 1) not in graph.variables:
        raise GraphStructureError(f"epoch {epoch_index} added before epoch {epoch_index - 1}")
    graph.add_variable(key)
    values[key] = np.asarray(initial, dtype=float).copy()
    if epoch_index == 0 or X(epoch_index - 1) not in graph.variables:
        mean = values[key] if prior_mean is None else prior_mean
        f = PriorFactor(key, mean, model.prior_sigmas() ** 2)
    else:
        offset = np.zeros(key.dim)
        if displacement is not None:
            offset[:3] = displacement
        f = BetweenFactor(X(epoch_index - 1), key, model.process_variances(dt), offset)
    graph.add_factor(f)
    return [f]


def add_gnss_factors(graph: FactorGraph, values: dict, epoch_index: int, observations, registry: ArcRegistry,
                     model: StochasticModel, ambiguity_mode: str = "arc",
                     ambiguity_process_sigma: float = 1e-3, dt: float = 1.0):
    """Add one pseudorange and one carrier-phase factor per satellite.

    With ``ambiguity_mode="arc"`` an ambiguity variable is created only when
    an arc starts, with an a priori factor centred on ``cp_if - pr_if``.
    ``"per_epoch"`` creates a fresh ambiguity every epoch chained to the
    previous one by a random-walk factor (used to compare Jacobian
    sparsity). Returns ``(new_factors, new_ambiguity_keys)``.
    """
    xk = X(epoch_index)
    if xk not in graph.variables:
        raise GraphStructureError(f"epoch {epoch_index} has no state variable")
    new_factors, new_keys = [], []
    for obs in observations:
        arc, is_new = registry.resolve(obs)
        if ambiguity_mode == "arc":
            bk = B(arc)
            if is_new:
                graph.add_variable(bk)
                values[bk] = np.array([obs.cp_if - obs.pr_if])
                new_keys.append(bk)
                new_factors.append(PriorFactor(bk, values[bk], [model.prior_ambiguity_sigma**2]))
        elif ambiguity_mode == "per_epoch":
            bk = B((str(arc), epoch_index))
            graph.add_variable(bk)
            new_keys.append(bk)
            prev = B((str(arc), epoch_index - 1))
            if is_new or prev not in graph.variables:
                values[bk] = np.array([obs.cp_if - obs.pr_if])
                new_factors.append(PriorFactor(bk, values[bk], [model.prior_ambiguity_sigma**2]))
            else:
                values[bk] = values[prev].copy()
                new_factors.append(BetweenFactor(prev, bk, [ambiguity_process_sigma**2 * dt]))
        else:
            raise ValueError(f"unknown ambiguity mode {ambiguity_mode!r}")
        new_factors.append(PseudorangeFactor(xk, obs, elevation_sigma(model.code_sigma, obs.elevation)))
        new_factors.append(CarrierPhaseFactor(xk, bk, obs, elevation_sigma(model.phase_sigma, obs.elevation)))
    registry.end_epoch(o.sat_id for o in observations)
    for f in new_factors:
        graph.add_factor(f)
    return new_factors, new_keys
