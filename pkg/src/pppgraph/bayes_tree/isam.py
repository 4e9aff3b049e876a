"""Incremental smoothing on a Bayes tree with fluid relinearization."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from ..errors import GraphStructureError, InvalidArgumentError
from ..factor_graph.factors import EPOCH
from ._backsub import HAVE_NUMBA, CliqueStore
from .elimination import eliminate_multifrontal
from .ordering import adjacency_from_keysets, choose_ordering
from .tree import BayesTree, attach

LOCALITY_COLUMNS = ["epoch", "re_eliminated_vars", "relinearized_vars", "total_vars", "update_ms"]


@dataclass
class UpdateRecord:
    epoch: object
    re_eliminated_vars: int
    relinearized_vars: int
    total_vars: int
    update_ms: float
    reeliminated_cliques: int = 0
    backsubstituted_cliques: int = 0


class _FlatValues:
    """Read-only mapping view of a flat value array."""

    __slots__ = ("array", "slots")

    def __init__(self, array, slots):
        self.array = array
        self.slots = slots

    def __getitem__(self, key):
        o, d = self.slots[key]
        return self.array[o:o + d]

    def __contains__(self, key):
        return key in self.slots


class IncrementalSmoother:
    """Bayes-tree smoother updated one batch of factors at a time.

    Each update removes the part of the tree touched by the new factors or
    by relinearized variables (the cliques holding them and their
    ancestors), re-eliminates it together with the cached marginals of the
    detached sub-trees, reattaches those sub-trees and back-substitutes
    top-down, descending only where the separator moved by more than
    ``update_tolerance``.

    Parameters
    ----------
    relin_threshold : float or None
        Epoch states whose position delta exceeds this (meters, any
        component) are relinearized at the start of the next update.
        ``None`` disables relinearization.
    update_tolerance : float
        Back-substitution stops descending below this change.
    relin_components : sequence of int
        Components of epoch states checked against ``relin_threshold``.
    relin_skip : int
        Relinearization is checked on every ``relin_skip``-th update only.
    partial_check : bool
        Check only the top of the tree: descend from the roots into a
        clique's children only while the clique holds a variable above the
        threshold. ``False`` checks every variable.
    """

    def __init__(self, relin_threshold=0.1, update_tolerance=1e-6, relin_components=(0, 1, 2), relin_skip=1,
                 partial_check=True, compiled=None):
        if relin_skip < 1:
            raise InvalidArgumentError("relin_skip must be at least 1")
        self.relin_skip = int(relin_skip)
        self.partial_check = bool(partial_check)
        self._updates = 0
        if relin_threshold is not None and relin_threshold < 0:
            raise InvalidArgumentError("relinearization threshold must be non-negative")
        if update_tolerance < 0:
            raise InvalidArgumentError("update tolerance must be non-negative")
        self.relin_threshold = relin_threshold
        self.update_tolerance = update_tolerance
        self.relin_components = tuple(relin_components)
        self.tree = BayesTree()
        self.factors = []
        self.gaussians = []
        self.factors_of: dict = {}
        self.slots: dict = {}
        self._n = 0
        self._theta = np.zeros(64)
        self._delta = np.zeros(64)
        self._check_cols = np.zeros(0, dtype=np.int64)
        self._check_owner = []
        self._rank_counter = 0
        self._uid = 0
        self.records: list[UpdateRecord] = []
        self.compiled = HAVE_NUMBA if compiled is None else bool(compiled and HAVE_NUMBA)
        self.store = CliqueStore() if self.compiled else None

    # ------------------------------------------------------------------ state
    def __contains__(self, key) -> bool:
        return key in self.slots

    @property
    def variables(self) -> list:
        return list(self.slots)

    def theta(self, key) -> np.ndarray:
        o, d = self.slots[key]
        return self._theta[o:o + d].copy()

    def delta(self, key) -> np.ndarray:
        o, d = self.slots[key]
        return self._delta[o:o + d].copy()

    def estimate(self, key) -> np.ndarray:
        o, d = self.slots[key]
        return self._theta[o:o + d] + self._delta[o:o + d]

    def estimates(self) -> dict:
        return {k: self.estimate(k) for k in self.slots}

    def covariance(self, key) -> np.ndarray:
        """Marginal covariance of a variable eliminated last in a root clique."""
        c = self.tree.clique_of[key]
        if c.parent is not None or c.frontals[-1] != key:
            raise InvalidArgumentError(f"{key} is not the last variable of a root clique")
        d = key.dim
        R = c.R_f[-d:, -d:]
        rinv = np.linalg.inv(R)
        return rinv @ rinv.T

    def _grow(self, n: int) -> None:
        cap = self._theta.size
        if n <= cap:
            return
        while cap < n:
            cap *= 2
        for name in ("_theta", "_delta"):
            old = getattr(self, name)
            new = np.zeros(cap)
            new[: old.size] = old
            setattr(self, name, new)

    def _add_variable(self, key, value) -> None:
        if key in self.slots:
            raise GraphStructureError(f"variable {key} already exists")
        v = np.atleast_1d(np.asarray(value, dtype=float))
        if v.size != key.dim:
            raise InvalidArgumentError(f"initial value of {key} has wrong dimension")
        o = self._n
        self._grow(o + key.dim)
        self.slots[key] = (o, key.dim)
        self._theta[o:o + key.dim] = v
        self._delta[o:o + key.dim] = 0.0
        self._n += key.dim
        self.factors_of[key] = []
        if key.kind == EPOCH and self.relin_components:
            cols = np.array([o + c for c in self.relin_components], dtype=np.int64)
            self._check_cols = np.concatenate([self._check_cols, cols])
            self._check_owner.extend([key] * cols.size)

    def _values(self):
        return _FlatValues(self._theta, self.slots)

    # ----------------------------------------------------------------- update
    def _relinearize(self) -> list:
        self._updates += 1
        if self.relin_threshold is None or self._check_cols.size == 0 or (self._updates - 1) % self.relin_skip:
            return []
        keys = self._partial_check() if self.partial_check else self._full_check()
        for k in keys:
            o, d = self.slots[k]
            self._theta[o:o + d] += self._delta[o:o + d]
            self._delta[o:o + d] = 0.0
        return keys

    def _full_check(self) -> list:
        hits = np.flatnonzero(np.abs(self._delta[self._check_cols]) > self.relin_threshold)
        keys = []
        seen = set()
        for h in hits:
            k = self._check_owner[h]
            if k not in seen:
                seen.add(k)
                keys.append(k)
        return keys

    def _partial_check(self) -> list:
        delta, slots, thr = self._delta, self.slots, self.relin_threshold
        comps = self.relin_components
        keys = []
        stack = list(reversed(self.tree.roots))
        while stack:
            c = stack.pop()
            hit = False
            for k in c.frontals:
                if k.kind == EPOCH:
                    o = slots[k][0]
                    if any(abs(delta[o + j]) > thr for j in comps):
                        keys.append(k)
                        hit = True
            if hit:
                stack.extend(reversed(c.children))
        return keys

    def update(self, new_factors=(), new_values=None, forced_last=None, epoch=None) -> UpdateRecord:
        """Add factors and variables, update the tree and the estimate.

        Parameters
        ----------
        new_factors : sequence of Factor
        new_values : dict
            Initial values of new variables.
        forced_last : sequence of VariableKey, optional
            Eliminated last among the affected variables (default: the
            newest epoch state among them).
        epoch : optional
            Label stored in the diagnostics record.
        """
        t0 = time.perf_counter()
        new_values = new_values or {}
        for k in new_values:
            if k in self.slots:
                raise GraphStructureError(f"variable {k} already exists")
        for f in new_factors:
            for k in f.keys:
                if k not in self.slots and k not in new_values:
                    raise GraphStructureError(f"factor references unknown variable {k}")

        relin = self._relinearize()
        for k, v in new_values.items():
            self._add_variable(k, v)

        marked = set(relin)
        relin_factors = set()
        for k in relin:
            for i in self.factors_of[k]:
                relin_factors.add(i)
                marked.update(self.factors[i].keys)
        new_ids = []
        for f in new_factors:
            i = len(self.factors)
            self.factors.append(f)
            self.gaussians.append(None)
            for k in f.keys:
                self.factors_of[k].append(i)
            new_ids.append(i)
            marked.update(f.keys)

        if not marked:
            rec = UpdateRecord(epoch, 0, 0, len(self.slots), (time.perf_counter() - t0) * 1e3)
            self.records.append(rec)
            return rec

        # detach the top of the tree
        tree = self.tree
        removed = set()
        for k in marked:
            c = tree.clique_of.get(k)
            while c is not None and c not in removed:
                removed.add(c)
                c = c.parent
        affected = [k for k in new_values]
        factor_ids = list(new_ids)
        orphans = []
        for c in removed:
            affected.extend(c.frontals)
            factor_ids.extend(c.factor_ids)
            for ch in c.children:
                if ch not in removed:
                    orphans.append(ch)
        orphans.sort(key=lambda c: c.uid)
        tree.roots = [r for r in tree.roots if r not in removed]

        values = self._values()
        for i in relin_factors:
            self.gaussians[i] = self.factors[i].linearize(values)
        for i in new_ids:
            self.gaussians[i] = self.factors[i].linearize(values)

        factor_ids.sort()
        pool = [(i, self.gaussians[i]) for i in factor_ids]
        keysets = [self.factors[i].keys for i in factor_ids]
        for j, c in enumerate(orphans):
            c.parent = None
            if c.marginal is not None:
                pool.append((("m", j), c.marginal))
            keysets.append(tuple(c.separator))

        affected_set = set(affected)
        if forced_last is None:
            epochs = [k for k in affected_set if k.kind == EPOCH]
            forced_last = [max(epochs, key=lambda k: k.index)] if epochs else []
        adj = adjacency_from_keysets(keysets, affected_set)
        ordering, parents = choose_ordering(adj, forced_last, with_parents=True)
        rank = tree.rank
        for k in ordering:
            rank[k] = self._rank_counter
            self._rank_counter += 1
        for k in ordering:
            tree.clique_of.pop(k, None)
        new = eliminate_multifrontal(pool, ordering, parents, rank, tree.clique_of, self._uid)
        self._uid += len(new)
        for c in orphans:
            attach(c, tree.clique_of, rank)
        new_roots = [c for c in new if c.parent is None]
        tree.roots.extend(new_roots)
        o = self.slots
        for c in new:
            c.fidx = np.concatenate([np.arange(o[k][0], o[k][0] + k.dim) for k in c.frontals])
            c.sidx = (np.concatenate([np.arange(o[k][0], o[k][0] + k.dim) for k in c.separator])
                      if c.separator else np.zeros(0, dtype=np.int64))

        if self.store is not None:
            store = self.store
            for c in removed:
                store.remove(c)
            for c in new:
                store.add(c)
            for c in new:
                if c.parent is not None:
                    store.link(c, c.parent)
            for c in orphans:
                store.link(c, c.parent)
            if store.needs_compaction():
                store.rebuild(tree.roots)
            n_back = store.backsubstitute(tree.roots, new, self._delta, self.update_tolerance)
        else:
            n_back = self._backsubstitute(set(new))
        rec = UpdateRecord(epoch, len(ordering), len(relin), len(self.slots), (time.perf_counter() - t0) * 1e3,
                           len(new), n_back)
        self.records.append(rec)
        return rec

    def _backsubstitute(self, forced: set) -> int:
        """Top-down solve; a clique is recomputed if re-eliminated or if any
        separator variable changed by more than the update tolerance."""
        delta = self._delta
        tol = self.update_tolerance
        changed = set()
        stack = list(self.tree.roots)
        pop, extend = stack.pop, stack.extend
        count = 0
        while stack:
            c = pop()
            if c not in forced:
                for k in c.separator:
                    if k in changed:
                        break
                else:
                    continue
            count += 1
            fidx = c.fidx
            if c.separator:
                new = c.a - c.M.dot(delta[c.sidx])
            else:
                new = c.a
            diff = new - delta[fidx]
            delta[fidx] = new
            if len(c.frontals) == 1:
                if diff.max() > tol or -diff.min() > tol:
                    changed.add(c.frontals[0])
            else:
                o = 0
                for k in c.frontals:
                    dk = diff[o:o + k.dim]
                    o += k.dim
                    if dk.max() > tol or -dk.min() > tol:
                        changed.add(k)
            extend(c.children)
        return count

    def backsubstitute_all(self) -> None:
        """Full back-substitution ignoring the update tolerance."""
        if self.store is not None:
            self.store.backsubstitute(self.tree.roots, self.tree.cliques, self._delta, self.update_tolerance)
        else:
            self._backsubstitute(set(self.tree.cliques))

    # ------------------------------------------------------------ diagnostics
    def write_locality(self, path) -> None:
        write_locality_csv(self.records, path)


def write_locality_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOCALITY_COLUMNS)
        for r in records:
            w.writerow([r.epoch, r.re_eliminated_vars, r.relinearized_vars, r.total_vars, f"{r.update_ms:.3f}"])
