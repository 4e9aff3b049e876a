"""Batch Gauss-Newton MAP solver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import NonConvergenceError, UnderConstrainedError
from .linear import LinearSystem, linearize

PIVOT_TOLERANCE = 1e-10
MAX_HALVINGS = 30


@dataclass
class BatchResult:
    values: dict
    cost: float
    iterations: int
    last_epoch_covariance: Optional[np.ndarray]
    converged: bool = True


def retract(values: dict, delta: dict, step: float = 1.0) -> dict:
    out = dict(values)
    for k, d in delta.items():
        out[k] = np.atleast_1d(values[k]) + step * d
    return out


def _unconstrained(system: LinearSystem, H) -> list:
    """Keys participating in the null space of the information matrix."""
    n = H.shape[0]
    diag = H.diagonal()
    scale = max(float(diag.max()) if n else 0.0, 1.0)
    bad = set()
    for k in system.keys:
        if np.any(diag[system.columns(k)] <= PIVOT_TOLERANCE * scale):
            bad.add(k)
    if not bad and n <= 4000:
        null = scipy.linalg.null_space(H.toarray(), rcond=PIVOT_TOLERANCE)
        if null.size:
            weight = np.abs(null).max(axis=1)
            for k in system.keys:
                if np.any(weight[system.columns(k)] > 1e-6):
                    bad.add(k)
    return sorted(bad, key=lambda k: k.sort_key())


def solve_normal_equations(system: LinearSystem):
    """Solve ``A^T A delta = A^T b``; returns ``(delta, factorization)``."""
    A = system.A.tocsc()
    H = (A.T @ A).tocsc()
    g = A.T @ system.b
    diag = H.diagonal()
    if diag.size and np.any(diag <= PIVOT_TOLERANCE * max(diag.max(), 1.0)):
        raise UnderConstrainedError(_unconstrained(system, H))
    try:
        lu = spla.splu(H, permc_spec="COLAMD")
    except RuntimeError as exc:
        raise UnderConstrainedError(_unconstrained(system, H)) from exc
    u = np.abs(lu.U.diagonal())
    if u.size and u.min() <= PIVOT_TOLERANCE * u.max():
        raise UnderConstrainedError(_unconstrained(system, H))
    return lu.solve(g), lu


def last_epoch_key(keys):
    epochs = [k for k in keys if k.kind == "x"]
    return max(epochs, key=lambda k: k.index) if epochs else None


def batch_optimize(graph, initial: dict, max_iterations: int = 100, rel_tol: float = 1e-8,
                   ordering=None, covariance: bool = True) -> BatchResult:
    """Gauss-Newton with step halving on the whitened least-squares cost.

    Stops when the relative cost decrease drops below ``rel_tol`` (or after
    one iteration when every factor is linear). Returns the MAP values and
    the marginal covariance of the latest epoch state.

    Raises
    ------
    UnderConstrainedError
        If the information matrix is singular; names the free variables.
    NonConvergenceError
        If no step along the Gauss-Newton direction reduces the cost.
    """
    values = {k: np.atleast_1d(np.asarray(initial[k], dtype=float)).copy() for k in graph.variables}
    all_linear = all(f.is_linear for f in graph.factors)
    cost = graph.cost(values)
    lu = system = None
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        system = linearize(graph, values, ordering)
        delta_vec, lu = solve_normal_equations(system)
        delta = system.split(delta_vec)
        step = 1.0
        for _ in range(MAX_HALVINGS):
            trial = retract(values, delta, step)
            new_cost = graph.cost(trial)
            if new_cost <= cost * (1.0 + 1e-12) + 1e-300:
                break
            step *= 0.5
        else:
            if cost > 0 and np.linalg.norm(delta_vec) > 1e-9:
                raise NonConvergenceError("cost increased along every step length", values, cost)
            trial, new_cost = values, cost
        decrease = cost - new_cost
        values, prev_cost, cost = trial, cost, new_cost
        if all_linear or decrease <= rel_tol * max(prev_cost, 1e-300) or np.linalg.norm(step * delta_vec) < 1e-12:
            converged = True
            break
    cov = None
    if covariance and system is not None:
        key = last_epoch_key(system.keys)
        if key is not None:
            cols = system.columns(key)
            E = np.zeros((system.shape[1], key.dim))
            E[np.arange(cols.start, cols.stop), np.arange(key.dim)] = 1.0
            cov = lu.solve(E)[cols]
            cov = 0.5 * (cov + cov.T)
    return BatchResult(values, cost, iterations, cov, converged)


def gradient_norm(graph, values, ordering=None) -> float:
    s = linearize(graph, values, ordering)
    return float(np.linalg.norm(s.A.T @ s.b))
