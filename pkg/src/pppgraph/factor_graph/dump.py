"""Text dump of a factor graph for debugging."""

from __future__ import annotations

import numpy as np


def _fmt(v) -> str:
    return " ".join(f"{x:.6f}" for x in np.atleast_1d(v))


def dump_graph(graph, values=None) -> str:
    """Variables, then factors (sorted by their keys) with per-factor cost."""
    lines = [f"variables {len(graph.variables)}"]
    for k in sorted(graph.variables, key=lambda k: k.sort_key()):
        v = "" if values is None or k not in values else " " + _fmt(values[k])
        lines.append(f"  {k} dim={k.dim}{v}")
    lines.append(f"factors {len(graph.factors)}")
    order = sorted(range(len(graph.factors)),
                   key=lambda i: ([k.sort_key() for k in graph.factors[i].keys], graph.factors[i].kind, i))
    for i in order:
        f = graph.factors[i]
        keys = ",".join(str(k) for k in f.keys)
        cost = "" if values is None else f" cost={f.cost(values):.6e}"
        lines.append(f"  {f.kind}({keys}){cost}")
    return "\n".join(lines) + "\n"
