"""Fill-reducing elimination orderings."""

from __future__ import annotations

import heapq
from itertools import combinations

FILL_CAP = 32


def adjacency_from_keysets(keysets, variables=None) -> dict:
    """Undirected variable adjacency implied by factors with the given key sets."""
    adj = {k: set() for k in (variables or ())}
    for keys in keysets:
        for k in keys:
            adj.setdefault(k, set())
        for a, b in combinations(keys, 2):
            if a != b:
                adj[a].add(b)
                adj[b].add(a)
    return adj


def adjacency_from_graph(graph) -> dict:
    return adjacency_from_keysets((f.keys for f in graph.factors), graph.variables)


def _fill(adj: dict, v, cap: int) -> int:
    """Number of missing edges among the neighbours of ``v`` (capped)."""
    nv = adj[v]
    twice = 0
    limit = 2 * cap
    for a in nv:
        twice += len(nv - adj[a]) - 1
        if twice >= limit:
            return cap
    return twice // 2


def _kind_rank(key) -> int:
    return 0 if getattr(key, "kind", None) == "b" else 1


def _sort_key(key):
    return key.sort_key() if hasattr(key, "sort_key") else (str(key),)


def choose_ordering(adjacency, forced_last=(), cap: int = FILL_CAP, with_parents: bool = False):
    """Greedy minimum-fill ordering with ``forced_last`` eliminated last.

    Ties are broken by preferring ambiguities, then by key order, so the
    result is deterministic. Fill counts above ``cap`` are not computed
    exactly (nor for vertices of degree above ``2 * cap``); among such
    candidates the one of lowest degree wins.

    Parameters
    ----------
    adjacency : dict or FactorGraph
        Variable -> set of neighbouring variables, or a factor graph.
    forced_last : sequence
        Variables appended in the given order after all others.
    with_parents : bool
        Also return the symbolic parents (neighbours at elimination time)
        of every variable, as ``(ordering, parents)``.
    """
    if hasattr(adjacency, "factors"):
        adjacency = adjacency_from_graph(adjacency)
    forced = [k for k in forced_last if k in adjacency]
    forced_set = set(forced)
    adj = {k: set(v) for k, v in adjacency.items()}
    skey = {k: (_kind_rank(k), _sort_key(k)) for k in adj}
    version = dict.fromkeys(adj, 0)
    fill = {}

    def entry(v):
        deg = len(adj[v])
        f = cap if deg > 2 * cap else _fill(adj, v, cap)
        fill[v] = f
        return (f, deg if f >= cap else 0, skey[v])

    def push(v, e):
        version[v] += 1
        heapq.heappush(heap, (e, version[v], v))

    heap = [(entry(v), 0, v) for v in adj if v not in forced_set]
    heapq.heapify(heap)
    order = []
    parents = {}
    while heap:
        _, ver, v = heapq.heappop(heap)
        if ver != version[v] or v not in adj:
            continue
        order.append(v)
        nbrs = adj.pop(v)
        parents[v] = nbrs
        for a in nbrs:
            adj[a].discard(v)
        touched = set()
        added = False
        nl = list(nbrs)
        for i, a in enumerate(nl):
            na = adj[a]
            for b in nl[i + 1:]:
                if b not in na:
                    na.add(b)
                    adj[b].add(a)
                    added = True
                    # common neighbours of a and b lose one missing pair
                    touched |= na & adj[b]
        touched -= forced_set
        for n in nbrs:
            if n in forced_set:
                continue
            if added or fill[n] >= cap:
                push(n, entry(n))
            else:
                # no fill was created: only the pairs (v, u), u not adjacent to v, disappear
                f = fill[n] - len(adj[n] - nbrs)
                fill[n] = f
                push(n, (f, 0, skey[n]))
        for n in touched - nbrs:
            push(n, entry(n))
    for v in forced:
        nbrs = adj.pop(v)
        parents[v] = nbrs
        for a in nbrs:
            adj[a].discard(v)
        for a in nbrs:
            adj[a] |= nbrs - {a}
    order += forced
    if with_parents:
        return order, parents
    return order


def fill_in(adjacency, ordering) -> int:
    """Count of edges created by eliminating in ``ordering``."""
    if hasattr(adjacency, "factors"):
        adjacency = adjacency_from_graph(adjacency)
    adj = {k: set(v) for k, v in adjacency.items()}
    fill = 0
    for v in ordering:
        nbrs = list(adj.pop(v))
        for n in nbrs:
            adj[n].discard(v)
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1:]:
                if b not in adj[a]:
                    adj[a].add(b)
                    adj[b].add(a)
                    fill += 1
    return fill
