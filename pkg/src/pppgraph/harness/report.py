"""Campaign report files.

A campaign directory holds the raw per-epoch scores (``errors.csv``,
``ambiguity.csv``, ``locality.csv``), the trial list and the replayable
configuration; the statistics and CDF tables are derived from
``errors.csv`` alone, so :func:`build_report` regenerates them for any
window. Wall-clock timings go to ``timing.csv``, the only file that is not
reproducible byte for byte.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import InvalidArgumentError
from ..simulator import format_config
from .metrics import SummaryStats, cdf, duration, final_fraction, window_mask
from .trial import ESTIMATORS

STATS_COLUMNS = ["estimator", "median_cm", "mean_cm", "std_cm", "max_cm"]
CDF_COLUMNS = ["error_cm", "fraction", "estimator"]
ERRORS_COLUMNS = ["seed", "epoch_s"] + [f"{e}_m" for e in ESTIMATORS]
TRIALS_COLUMNS = ["trial", "seed", "status", "epochs", "arcs", "ambiguity_variables", "sat_epochs", "input_sha256",
                  "failure"]
LOCALITY_COLUMNS = ["seed", "epoch", "re_eliminated_vars", "relinearized_vars", "total_vars"]
AMBIGUITY_COLUMNS = ["seed", "epoch_s", "graph_m", "ekf_m"]
TIMING_COLUMNS = ["seed", "epoch", "graph_s", "ekf_s"]
REPORT_FILES = ("stats_all.csv", "stats_convergence.csv", "stats_final_third.csv", "cdf_all.csv",
                "cdf_convergence.csv")


def _fmt(v: float) -> str:
    return "" if not np.isfinite(v) else f"{v:.6f}"


def _writer(path: Path):
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def write_campaign(result, out_dir, window_s: float = 900.0) -> dict:
    """Write the raw campaign data and the derived report; returns the report tables."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.cfg").write_text(format_config(result.config))
    results = result.results
    fh, w = _writer(out / "trials.csv")
    with fh:
        w.writerow(TRIALS_COLUMNS)
        for i, r in enumerate(results):
            fail = "; ".join(f"{k}: {v}" for k, v in sorted(r.failures.items()))
            w.writerow([i, r.seed, "ok" if r.ok else "failed", len(r.epochs), r.n_arcs, r.n_ambiguities, r.sat_epochs,
                        r.input_digest, fail])
    fh, w = _writer(out / "errors.csv")
    with fh:
        w.writerow(ERRORS_COLUMNS)
        for r in results:
            cols = [r.errors.get(e) for e in ESTIMATORS]
            for j, t in enumerate(r.epochs):
                w.writerow([r.seed, f"{t:.4f}"] + ["" if c is None else _fmt(c[j]) for c in cols])
    fh, w = _writer(out / "ambiguity.csv")
    with fh:
        w.writerow(AMBIGUITY_COLUMNS)
        for r in results:
            cols = [r.ambiguity_errors.get(e) for e in ("graph", "ekf")]
            for j, t in enumerate(r.epochs):
                w.writerow([r.seed, f"{t:.4f}"] + ["" if c is None else _fmt(c[j]) for c in cols])
    fh, w = _writer(out / "locality.csv")
    with fh:
        w.writerow(LOCALITY_COLUMNS)
        for r in results:
            if r.locality is not None:
                for j, row in enumerate(r.locality):
                    w.writerow([r.seed, j, *(int(v) for v in row)])
    fh, w = _writer(out / "timing.csv")
    with fh:
        w.writerow(TIMING_COLUMNS)
        for r in results:
            cols = [r.timing.get(e) for e in ("graph", "ekf")]
            for j in range(len(r.epochs)):
                w.writerow([r.seed, j] + ["" if c is None else f"{c[j]:.6f}" for c in cols])
    return build_report(out, window_s)


@dataclass
class _Series:
    """Per-trial view of ``errors.csv`` with the attributes the metrics expect."""

    seed: int
    epochs: np.ndarray
    errors: dict


def read_errors(path) -> list:
    """Parse ``errors.csv`` into per-trial series (trial order preserved)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ERRORS_COLUMNS[:2]:
            raise ValueError(f"{path}: unexpected header {header}")
        names = [h[:-2] for h in header[2:]]
        trials: dict = {}
        for row in reader:
            if not row:
                continue
            seed = int(row[0])
            tr = trials.setdefault(seed, ([], {n: [] for n in names}))
            tr[0].append(float(row[1]))
            for n, v in zip(names, row[2:]):
                tr[1][n].append(float(v) if v != "" else np.nan)
    out = []
    for seed, (t, cols) in trials.items():
        errors = {n: np.array(v) for n, v in cols.items() if v and not np.all(np.isnan(v))}
        out.append(_Series(seed, np.array(t), errors))
    return out


def _pooled(series, name, select) -> np.ndarray:
    parts = [select(s, s.errors[name]) for s in series if name in s.errors]
    v = np.concatenate(parts) if parts else np.zeros(0)
    return v[np.isfinite(v)]


def build_report(in_dir, window_s: float = 900.0) -> dict:
    """(Re)compute statistics and CDF tables from ``errors.csv``.

    Returns ``{"all": stats, "convergence": stats, "final_third": stats}``
    where each ``stats`` maps estimator name to :class:`SummaryStats`.
    """
    d = Path(in_dir)
    series = read_errors(d / "errors.csv")
    longest = max((duration(s.epochs) for s in series), default=0.0)
    if not 0 < window_s <= longest:
        raise InvalidArgumentError(f"window {window_s} s must be positive and at most the trial duration {longest} s")
    views = {
        "all": lambda s, e: e,
        "convergence": lambda s, e: e[window_mask(s.epochs, window_s)],
        "final_third": lambda s, e: final_fraction(e, s.epochs),
    }
    tables = {}
    pooled = {}
    for view, select in views.items():
        stats = {}
        for name in ESTIMATORS:
            v = _pooled(series, name, select)
            if v.size:
                stats[name] = SummaryStats.from_errors(v)
                pooled[(view, name)] = v
        tables[view] = stats
    for view, fname in (("all", "stats_all.csv"), ("convergence", "stats_convergence.csv"),
                        ("final_third", "stats_final_third.csv")):
        fh, w = _writer(d / fname)
        with fh:
            w.writerow(STATS_COLUMNS)
            for name, st in tables[view].items():
                w.writerow([name, *st.row()])
    for view, fname in (("all", "cdf_all.csv"), ("convergence", "cdf_convergence.csv")):
        fh, w = _writer(d / fname)
        with fh:
            w.writerow(CDF_COLUMNS)
            for name in ESTIMATORS:
                if (view, name) in pooled:
                    x, frac = cdf(pooled[(view, name)] * 100.0)
                    for xi, fi in zip(x, frac):
                        w.writerow([f"{xi:.4f}", f"{fi:.6f}", name])
    return tables


def format_tables(tables: dict, window_s: float) -> str:
    """Human-readable summary of :func:`build_report` output."""
    titles = {"all": "all epochs", "convergence": f"first {window_s:g} s", "final_third": "final third"}
    lines = []
    for view, stats in tables.items():
        lines.append(f"{titles[view]}:")
        lines.append(f"  {'estimator':<14}{'median_cm':>12}{'mean_cm':>12}{'std_cm':>12}{'max_cm':>12}")
        for name, st in stats.items():
            lines.append(f"  {name:<14}{st.median:>12.2f}{st.mean:>12.2f}{st.std:>12.2f}{st.max:>12.2f}")
    return "\n".join(lines)
