"""Elimination, Bayes-tree construction and incremental smoothing."""

from .elimination import BayesNet, Conditional, FactorPool, eliminate, eliminate_one
from .isam import LOCALITY_COLUMNS, IncrementalSmoother, UpdateRecord, write_locality_csv
from .ordering import adjacency_from_graph, adjacency_from_keysets, choose_ordering, fill_in
from .tree import BayesTree, Clique, build_tree

__all__ = [
    "BayesNet", "BayesTree", "Clique", "Conditional", "FactorPool", "IncrementalSmoother", "LOCALITY_COLUMNS",
    "UpdateRecord", "adjacency_from_graph", "adjacency_from_keysets", "build_tree", "choose_ordering", "eliminate",
    "eliminate_one", "fill_in", "write_locality_csv",
]
