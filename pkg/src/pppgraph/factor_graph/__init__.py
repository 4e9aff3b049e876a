"""Factor-graph representation and batch MAP solver."""

from .batch import BatchResult, batch_optimize, gradient_norm, retract, solve_normal_equations
from .dump import dump_graph
from .factors import (
    AMBIGUITY,
    EPOCH,
    B,
    BetweenFactor,
    CarrierPhaseFactor,
    Factor,
    GaussianFactor,
    LinearMeasurementFactor,
    NoiseModel,
    PriorFactor,
    PseudorangeFactor,
    VariableKey,
    X,
)
from .graph import ArcRegistry, FactorGraph, add_epoch, add_gnss_factors
from .linear import LinearSystem, assemble, column_layout, default_ordering, linearize


def evaluate_factor(factor, values):
    """Whitened residual; its squared norm is the Mahalanobis cost."""
    return factor.whitened_error(values)


__all__ = [
    "AMBIGUITY", "EPOCH", "ArcRegistry", "B", "BatchResult", "BetweenFactor", "CarrierPhaseFactor", "Factor",
    "FactorGraph", "GaussianFactor", "LinearMeasurementFactor", "LinearSystem", "NoiseModel", "PriorFactor",
    "PseudorangeFactor", "VariableKey", "X", "add_epoch", "add_gnss_factors", "assemble", "batch_optimize",
    "column_layout", "default_ordering", "dump_graph", "evaluate_factor", "gradient_norm", "linearize", "retract",
    "solve_normal_equations",
]
