"""Positioning-error metrics, summary statistics and empirical CDFs."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgumentError


def rsos(estimate, truth):
    """Root of the sum of squared position errors (3-D Euclidean norm).

    Works on single positions or on ``(n, 3)`` arrays (one value per row).
    """
    d = np.asarray(estimate, dtype=float) - np.asarray(truth, dtype=float)
    if d.shape[-1] != 3:
        raise InvalidArgumentError(f"positions must have 3 components, got shape {d.shape}")
    out = np.sqrt(np.sum(d * d, axis=-1))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SummaryStats:
    """Median, mean, standard deviation and maximum in centimeters."""

    median: float
    mean: float
    std: float
    max: float
    count: int

    @classmethod
    def from_errors(cls, errors_m) -> "SummaryStats":
        """Statistics of errors given in meters (population standard deviation)."""
        cm = np.asarray(errors_m, dtype=float).ravel() * 100.0
        if cm.size == 0:
            raise InvalidArgumentError("statistics need at least one value")
        return cls(float(np.median(cm)), float(np.mean(cm)), float(np.std(cm)), float(np.max(cm)), int(cm.size))

    def row(self) -> list[str]:
        return [f"{self.median:.4f}", f"{self.mean:.4f}", f"{self.std:.4f}", f"{self.max:.4f}"]


def window_mask(epochs, window_s: float | None) -> np.ndarray:
    """Epochs less than ``window_s`` seconds after the first one (all if None)."""
    t = np.asarray(epochs, dtype=float)
    if window_s is None or t.size == 0:
        return np.ones(t.shape, dtype=bool)
    return (t - t[0]) < window_s


def pooled_errors(results, estimator: str, window_s: float | None = None) -> np.ndarray:
    """Concatenate one estimator's RSOS series over trials (in trial order)."""
    parts = []
    for r in results:
        if estimator in r.errors:
            parts.append(np.asarray(r.errors[estimator])[window_mask(r.epochs, window_s)])
    return np.concatenate(parts) if parts else np.zeros(0)


def convergence_window_stats(results, window_s: float | None, estimators=None) -> dict:
    """Pooled :class:`SummaryStats` per estimator over epochs inside the window.

    ``results`` are objects with ``epochs`` and an ``errors`` mapping
    (estimator -> per-epoch RSOS in meters); ``window_s=None`` uses all
    epochs.
    """
    results = list(results)
    if estimators is None:
        estimators = []
        for r in results:
            for name in r.errors:
                if name not in estimators:
                    estimators.append(name)
    for r in results:
        if window_s is not None and len(r.epochs) and window_s > duration(r.epochs):
            raise InvalidArgumentError(f"window {window_s} s exceeds the trial duration")
    out = {}
    for name in estimators:
        pooled = pooled_errors(results, name, window_s)
        if pooled.size:
            out[name] = SummaryStats.from_errors(pooled)
    return out


def duration(epochs) -> float:
    """Covered time span: last minus first epoch plus one sampling interval."""
    t = np.asarray(epochs, dtype=float)
    if t.size == 0:
        return 0.0
    return float(t[-1] - t[0]) + (float(t[1] - t[0]) if t.size > 1 else 1.0)


def cdf(values) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CDF: distinct sorted values and the fraction of samples ``<=`` each."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InvalidArgumentError("CDF of an empty sample")
    x, counts = np.unique(v, return_counts=True)
    return x, np.cumsum(counts) / v.size


def final_fraction(errors, epochs, fraction: float = 1.0 / 3.0) -> np.ndarray:
    """Errors of the epochs in the last ``fraction`` of the trial duration."""
    e = np.asarray(errors)
    t = np.asarray(epochs, dtype=float)
    if t.size == 0:
        return e
    start = t[0] + (1.0 - fraction) * duration(t)
    return e[t >= start]
