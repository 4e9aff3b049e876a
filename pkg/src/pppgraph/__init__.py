"""Precise point positioning with an incremental Bayes-tree smoother and an EKF baseline."""

__version__ = "0.1.0"
