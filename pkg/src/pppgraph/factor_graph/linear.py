"""Sparse linearization of a factor graph."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .factors import GaussianFactor


@dataclass
class LinearSystem:
    """Whitened Jacobian ``A`` (sparse), right-hand side ``b`` and column layout.

    The linearized cost is ``||A delta - b||^2``; ``offsets[key]`` is the
    first column of ``key`` and ``row_offsets[i]`` the first row of factor
    ``i``.
    """

    A: sp.csr_matrix
    b: np.ndarray
    keys: list
    offsets: dict
    row_offsets: list

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def columns(self, key) -> slice:
        o = self.offsets[key]
        return slice(o, o + key.dim)

    def split(self, delta: np.ndarray) -> dict:
        """Map a stacked solution vector back onto variable keys."""
        return {k: delta[self.columns(k)].copy() for k in self.keys}


def column_layout(keys) -> tuple[dict, int]:
    offsets, n = {}, 0
    for k in keys:
        offsets[k] = n
        n += k.dim
    return offsets, n


def default_ordering(variables) -> list:
    return sorted(variables, key=lambda k: k.sort_key())


def assemble(gaussian_factors, keys) -> LinearSystem:
    """Stack already-linearized factors into one sparse system."""
    offsets, n = column_layout(keys)
    rows, cols, vals, rhs, row_offsets = [], [], [], [], []
    r = 0
    for g in gaussian_factors:
        m = g.rows
        row_offsets.append(r)
        cidx = np.concatenate([np.arange(offsets[k], offsets[k] + k.dim) for k in g.keys])
        rows.append(np.repeat(np.arange(r, r + m), cidx.size))
        cols.append(np.tile(cidx, m))
        vals.append(np.asarray(g.A, dtype=float).ravel())
        rhs.append(g.b)
        r += m
    if rows:
        A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(r, n))
        b = np.concatenate(rhs)
    else:
        A = sp.csr_matrix((0, n))
        b = np.zeros(0)
    return LinearSystem(A, b, list(keys), offsets, row_offsets)


def linearize(graph, values, ordering=None) -> LinearSystem:
    """Block-sparse whitened Jacobian of every factor of ``graph`` at ``values``.

    Column blocks follow ``ordering`` (default: epochs by index, then
    ambiguities). The sparsity pattern is exactly the factor-variable
    incidence.
    """
    keys = default_ordering(graph.variables) if ordering is None else list(ordering)
    return assemble([f.linearize(values) for f in graph.factors], keys)


def linearize_factor(factor, values) -> GaussianFactor:
    return factor.linearize(values)
