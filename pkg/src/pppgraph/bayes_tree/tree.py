"""Cliques and the Bayes tree built from an eliminated Bayes net."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import GraphStructureError


class Clique:
    """Frontal variables with their joint conditional on the separator.

    ``conditionals`` are in elimination order, so the last frontal is the
    one whose conditional depends on the separator only.
    """

    __slots__ = ("frontals", "separator", "conditionals", "parent", "children", "marginal", "factor_ids",
                 "R_f", "R_s", "d", "a", "M", "fidx", "sidx", "uid", "slot")

    def __init__(self, conditional, separator, uid=0, frontals=None):
        if conditional is None:
            self.frontals = list(frontals)
            self.conditionals = []
        else:
            self.frontals = [conditional.frontal]
            self.conditionals = [conditional]
        self.separator = list(separator)
        self.parent = None
        self.children = []
        self.marginal = None
        self.factor_ids = []
        self.fidx = self.sidx = None
        self.uid = uid
        self.slot = -1

    def __repr__(self) -> str:
        f = ",".join(str(k) for k in self.frontals)
        s = ",".join(str(k) for k in self.separator)
        return f"Clique({f} | {s})"

    @property
    def variables(self) -> list:
        return self.frontals + self.separator

    def prepend(self, conditional) -> None:
        self.frontals.insert(0, conditional.frontal)
        self.conditionals.insert(0, conditional)

    def finalize(self) -> None:
        """Assemble the clique's square-root block and precompute the solve."""
        off, n = {}, 0
        for k in self.frontals + self.separator:
            off[k] = n
            n += k.dim
        nf = sum(k.dim for k in self.frontals)
        C = np.zeros((nf, n))
        d = np.empty(nf)
        r = 0
        for c in self.conditionals:
            dv = c.dim
            o = off[c.frontal]
            C[r:r + dv, o:o + dv] = c.R
            j = 0
            for p in c.parents:
                op = off[p]
                C[r:r + dv, op:op + p.dim] = c.S[:, j:j + p.dim]
                j += p.dim
            d[r:r + dv] = c.d
            r += dv
        self.set_blocks(C[:, :nf], C[:, nf:], d)

    def set_blocks(self, R_f, R_s, d) -> None:
        """Store the square-root conditional ``R_f x_f + R_s x_s = d``."""
        self.R_f = R_f
        self.R_s = R_s
        self.d = d
        nf = R_f.shape[0]
        rhs = np.empty((nf, R_s.shape[1] + 1))
        rhs[:, 0] = d
        rhs[:, 1:] = self.R_s
        sol = scipy.linalg.solve_triangular(self.R_f, rhs, check_finite=False)
        self.a = sol[:, 0].copy()
        self.M = sol[:, 1:].copy()

    def solve(self, values: dict) -> dict:
        """Frontal values given separator values in ``values``."""
        x = self.a
        if self.separator:
            x = x - self.M @ np.concatenate([np.atleast_1d(values[k]) for k in self.separator])
        out, o = {}, 0
        for k in self.frontals:
            out[k] = x[o:o + k.dim].copy()
            o += k.dim
        return out


def make_cliques(nodes, clique_of: dict, rank: dict, uid_start: int = 0) -> list:
    """Group eliminated nodes into cliques (nodes given in elimination order).

    A node joins the clique holding its earliest-eliminated parent when its
    parent set equals that clique's frontal and separator variables;
    otherwise it starts a new child clique. ``clique_of`` is updated in
    place. Returns the new cliques, roots first.
    """
    new = []
    uid = uid_start
    for node in reversed(nodes):
        cond = node.conditional
        parents = cond.parents
        if not parents:
            c = Clique(cond, (), uid)
            uid += 1
        else:
            first = min(parents, key=rank.__getitem__)
            pc = clique_of[first]
            pvars = pc.frontals + pc.separator
            if len(pvars) == len(parents) and set(pvars) == set(parents):
                pc.prepend(cond)
                pc.factor_ids = list(node.consumed) + pc.factor_ids
                clique_of[cond.frontal] = pc
                continue
            c = Clique(cond, parents, uid)
            uid += 1
            c.parent = pc
            pc.children.append(c)
        c.factor_ids = list(node.consumed)
        c.marginal = node.remainder if parents else None
        clique_of[cond.frontal] = c
        new.append(c)
    for c in new:
        c.finalize()
    return new


def attach(child: Clique, clique_of: dict, rank: dict) -> None:
    """Hang ``child`` under the clique of its earliest-eliminated separator variable."""
    first = min(child.separator, key=rank.__getitem__)
    parent = clique_of[first]
    child.parent = parent
    parent.children.append(child)


class BayesTree:
    """Forest of cliques with a variable -> clique index."""

    def __init__(self):
        self.roots: list = []
        self.clique_of: dict = {}
        self.rank: dict = {}

    @property
    def cliques(self) -> list:
        out, stack = [], list(reversed(self.roots))
        while stack:
            c = stack.pop()
            out.append(c)
            stack.extend(reversed(c.children))
        return out

    def __len__(self) -> int:
        return len(self.cliques)

    def root_of(self, clique):
        while clique.parent is not None:
            clique = clique.parent
        return clique

    def solve(self) -> dict:
        values = {}
        stack = list(self.roots)
        while stack:
            c = stack.pop()
            values.update(c.solve(values))
            stack.extend(c.children)
        return values

    def check_running_intersection(self) -> bool:
        """Raise :class:`GraphStructureError` if the tree is malformed."""
        seen = set()
        for c in self.cliques:
            for k in c.frontals:
                if k in seen:
                    raise GraphStructureError(f"{k} is frontal in two cliques")
                seen.add(k)
                if self.clique_of.get(k) is not c:
                    raise GraphStructureError(f"index of {k} is stale")
            if c.parent is None:
                if c.separator:
                    raise GraphStructureError(f"root {c} has a separator")
            else:
                pvars = set(c.parent.frontals) | set(c.parent.separator)
                if not set(c.separator) <= pvars:
                    raise GraphStructureError(f"separator of {c} not contained in its parent")
                if c not in c.parent.children:
                    raise GraphStructureError(f"{c} missing from its parent's children")
        if seen != set(self.clique_of):
            raise GraphStructureError("variable index does not match the cliques")
        return True

    def structure(self) -> set:
        """Hashable description: ``{(frozenset frontals, frozenset separator, parent frontals)}``."""
        out = set()
        for c in self.cliques:
            parent = frozenset(c.parent.frontals) if c.parent is not None else None
            out.add((frozenset(c.frontals), frozenset(c.separator), parent))
        return out


def build_tree(net) -> BayesTree:
    """Assemble the Bayes tree of a Bayes net produced by :func:`eliminate`."""
    from .elimination import EliminationNode
    from ..factor_graph.factors import GaussianFactor

    tree = BayesTree()
    tree.rank = {c.frontal: i for i, c in enumerate(net.conditionals)}
    nodes = [EliminationNode(c, GaussianFactor(c.parents, np.zeros((0, sum(p.dim for p in c.parents))), np.zeros(0)), [])
             for c in net.conditionals]
    new = make_cliques(nodes, tree.clique_of, tree.rank)
    tree.roots = [c for c in new if c.parent is None]
    return tree
