"""Variable elimination of a linear factor graph into a Gaussian Bayes net."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.linalg.lapack

from ..errors import InvalidArgumentError, UnderConstrainedError
from ..factor_graph.factors import GaussianFactor

PIVOT_TOLERANCE = 1e-10


@dataclass
class Conditional:
    """Square-root Gaussian conditional ``R x_f + S x_parents = d``."""

    frontal: object
    parents: tuple
    R: np.ndarray
    S: np.ndarray
    d: np.ndarray

    @property
    def dim(self) -> int:
        return self.R.shape[0]

    def solve(self, values) -> np.ndarray:
        rhs = self.d
        if self.parents:
            rhs = rhs - self.S @ np.concatenate([np.atleast_1d(values[p]) for p in self.parents])
        return scipy.linalg.solve_triangular(self.R, rhs)


@dataclass
class EliminationNode:
    conditional: Conditional
    remainder: GaussianFactor  # new factor on the parents (may have zero rows)
    consumed: list  # ids of the pool factors absorbed by this node


class BayesNet:
    """Conditionals in elimination order."""

    def __init__(self, conditionals, ordering):
        self.conditionals = list(conditionals)
        self.ordering = list(ordering)

    def __len__(self) -> int:
        return len(self.conditionals)

    def parents(self) -> dict:
        return {c.frontal: tuple(c.parents) for c in self.conditionals}

    def solve(self) -> dict:
        """Back-substitution in reverse elimination order."""
        values = {}
        for c in reversed(self.conditionals):
            values[c.frontal] = c.solve(values)
        return values

    def information(self, keys=None):
        """Dense ``R^T R`` over ``keys`` (default: elimination order)."""
        keys = list(self.ordering if keys is None else keys)
        off, n = {}, 0
        for k in keys:
            off[k] = n
            n += k.dim
        rows = []
        for c in self.conditionals:
            row = np.zeros((c.dim, n))
            row[:, off[c.frontal]:off[c.frontal] + c.dim] = c.R
            j = 0
            for p in c.parents:
                row[:, off[p]:off[p] + p.dim] = c.S[:, j:j + p.dim]
                j += p.dim
            rows.append(row)
        R = np.vstack(rows) if rows else np.zeros((0, n))
        return R.T @ R


class FactorPool:
    """Working set of linear factors indexed by variable."""

    __slots__ = ("factors", "by_var", "_next")

    def __init__(self):
        self.factors = {}
        self.by_var = {}
        self._next = 0

    def add(self, factor: GaussianFactor, fid=None) -> object:
        if fid is None:
            fid = ("r", self._next)
            self._next += 1
        self.factors[fid] = factor
        by_var = self.by_var
        for k in factor.keys:
            lst = by_var.get(k)
            if lst is None:
                by_var[k] = [fid]
            else:
                lst.append(fid)
        return fid

    def take(self, key) -> list:
        out = []
        pop = self.factors.pop
        for i in self.by_var.pop(key, ()):
            f = pop(i, None)
            if f is not None:
                out.append((i, f))
        return out


def eliminate_one(key, factors, position) -> tuple[Conditional, GaussianFactor]:
    """Partial QR of the stacked factors involving ``key``.

    ``position`` maps every involved key to its place in the elimination
    order, which fixes the column order of the parents.
    """
    dimof = {}
    rows = 0
    for f in factors:
        rows += f.b.shape[0]
        for k, d in zip(f.keys, f.dims):
            dimof[k] = d
    dv = dimof.pop(key)
    parents = sorted(dimof, key=position.__getitem__)
    off = {key: 0}
    n = dv
    for k in parents:
        off[k] = n
        n += dimof[k]
    if rows < dv:
        raise UnderConstrainedError([key])
    M = np.zeros((rows, n + 1))
    r = 0
    for f in factors:
        m = f.b.shape[0]
        if m:
            A = f.A
            c = 0
            for k, d in zip(f.keys, f.dims):
                o = off[k]
                M[r:r + m, o:o + d] = A[:, c:c + d]
                c += d
            M[r:r + m, n] = f.b
            r += m
    scale = max(float(np.sqrt((M[:, :dv] ** 2).sum(axis=0)).max()), 1e-300)
    R = _qr_r(M)
    diag = np.abs(R.diagonal()[:dv])
    if diag.size < dv or np.any(diag <= PIVOT_TOLERANCE * scale):
        raise UnderConstrainedError([key])
    cond = Conditional(key, tuple(parents), R[:dv, :dv], R[:dv, dv:n], R[:dv, n])
    top = min(R.shape[0], n)
    pd = tuple(dimof[k] for k in parents)
    rem = GaussianFactor(tuple(parents), R[dv:top, dv:n], R[dv:top, n], pd)
    return cond, rem


_geqrf = scipy.linalg.lapack.dgeqrf


def _qr_r(M: np.ndarray) -> np.ndarray:
    """Upper-triangular factor of the QR decomposition (rows trimmed to rank bound)."""
    qr, _, _, info = _geqrf(M, overwrite_a=1)
    if info != 0:
        raise UnderConstrainedError([], "QR factorization failed")
    k = min(M.shape)
    return np.triu(qr[:k])


def eliminate_pool(pool: FactorPool, ordering, position=None) -> list[EliminationNode]:
    """Eliminate ``ordering`` from ``pool``; remainders are fed back into the pool."""
    if position is None:
        position = {k: i for i, k in enumerate(ordering)}
    nodes = []
    for key in ordering:
        taken = pool.take(key)
        if not taken:
            raise UnderConstrainedError([key])
        cond, rem = eliminate_one(key, [f for _, f in taken], position)
        if rem.keys:
            pool.add(rem)
        nodes.append(EliminationNode(cond, rem, [i for i, _ in taken]))
    return nodes


def _check_ordering(variables, ordering):
    if len(ordering) != len(set(ordering)) or set(ordering) != set(variables):
        raise InvalidArgumentError("ordering must be a permutation of the graph's variables")


def eliminate(factors, ordering, values=None) -> BayesNet:
    """Eliminate linear factors (or a factor graph linearized at ``values``).

    Parameters
    ----------
    factors : FactorGraph or sequence of GaussianFactor
    ordering : sequence of VariableKey
        A permutation of the variables.
    """
    if hasattr(factors, "factors"):
        graph = factors
        variables = list(graph.variables)
        if values is None:
            values = {k: np.zeros(k.dim) for k in variables}
        gaussians = [f.linearize(values) for f in graph.factors]
    else:
        gaussians = list(factors)
        variables = {k for g in gaussians for k in g.keys}
    ordering = list(ordering)
    _check_ordering(variables, ordering)
    pool = FactorPool()
    for i, g in enumerate(gaussians):
        pool.add(g, i)
    nodes = eliminate_pool(pool, ordering)
    return BayesNet([n.conditional for n in nodes], ordering)


def eliminate_multifrontal(factors, ordering, parents, rank: dict, clique_of: dict, uid_start: int = 0) -> list:
    """Eliminate straight into cliques, one dense QR per clique.

    The clique structure is derived symbolically from ``parents`` (the
    neighbours of each variable when it is eliminated) with the same merge
    rule as :func:`~pppgraph.bayes_tree.tree.make_cliques`; each factor is
    then assigned to the clique of its earliest-eliminated variable and the
    cliques are factorized children first, passing each clique's remainder
    on the separator (its ``marginal``) up to the parent.

    Parameters
    ----------
    factors : sequence of (id, GaussianFactor)
        Integer ids are recorded in ``factor_ids`` of the owning clique.
    ordering : sequence
        Elimination order; ``rank`` must already hold the position of every
        variable (and of every separator variable outside ``ordering``).
    parents : dict
        Symbolic parent set of every variable in ``ordering``.
    clique_of : dict
        Variable -> clique index, updated in place.

    Returns
    -------
    list of Clique
        The new cliques, parents before children.
    """
    from .tree import Clique

    rk = rank.__getitem__
    new = []
    varset = {}
    uid = uid_start
    for v in reversed(ordering):
        P = parents[v]
        if P:
            pc = clique_of[min(P, key=rk)]
            vs = varset[pc]
            if len(vs) == len(P) and vs == P:
                pc.frontals.insert(0, v)
                vs.add(v)
                clique_of[v] = pc
                continue
            c = Clique(None, sorted(P, key=rk), uid, frontals=[v])
            c.parent = pc
            pc.children.append(c)
        else:
            c = Clique(None, (), uid, frontals=[v])
        uid += 1
        varset[c] = set(P) | {v}
        clique_of[v] = c
        new.append(c)

    assigned = {c: [] for c in new}
    for fid, f in factors:
        if not f.keys:
            continue
        assigned[clique_of[min(f.keys, key=rk)]].append(f)
        if isinstance(fid, int):
            clique_of[min(f.keys, key=rk)].factor_ids.append(fid)

    for c in reversed(new):
        fs = assigned.pop(c)
        off = {}
        n = 0
        for k in c.frontals:
            off[k] = n
            n += k.dim
        nf = n
        for k in c.separator:
            off[k] = n
            n += k.dim
        rows = 0
        for f in fs:
            rows += f.b.shape[0]
        if rows < nf:
            raise UnderConstrainedError(list(c.frontals))
        M = np.zeros((rows, n + 1))
        r = 0
        for f in fs:
            m = f.b.shape[0]
            if m:
                A = f.A
                j = 0
                for k, d in zip(f.keys, f.dims):
                    o = off[k]
                    M[r:r + m, o:o + d] = A[:, j:j + d]
                    j += d
                M[r:r + m, n] = f.b
                r += m
        scale = max(float(np.sqrt((M[:, :nf] ** 2).sum(axis=0)).max()), 1e-300)
        R = _qr_r(M)
        diag = np.abs(R.diagonal()[:nf])
        if diag.size < nf or np.any(diag <= PIVOT_TOLERANCE * scale):
            bad = []
            for k in c.frontals:
                if np.any(diag[off[k]:off[k] + k.dim] <= PIVOT_TOLERANCE * scale) or diag.size < off[k] + k.dim:
                    bad.append(k)
            raise UnderConstrainedError(bad or list(c.frontals))
        c.set_blocks(R[:nf, :nf], R[:nf, nf:n], R[:nf, n])
        if c.separator:
            top = min(R.shape[0], n)
            sep = tuple(c.separator)
            marg = GaussianFactor(sep, R[nf:top, nf:n], R[nf:top, n], tuple(k.dim for k in sep))
            c.marginal = marg
            if c.parent in assigned:
                assigned[c.parent].append(marg)
    return new
