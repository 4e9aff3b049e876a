"""CSV export and import of observation and truth streams."""

from __future__ import annotations

import csv
from itertools import groupby
from pathlib import Path

import numpy as np

from ..gnss_models import EcefPosition, EpochState, GnssObservation

OBS_COLUMNS = ["epoch_s", "sat_id", "pr_l1_m", "pr_l2_m", "cp_l1_m", "cp_l2_m", "loss_of_lock",
               "sat_x_m", "sat_y_m", "sat_z_m", "sat_clk_m", "elev_rad"]
TRUTH_COLUMNS = ["epoch_s", "x_m", "y_m", "z_m", "trop_wet_m", "clk_m"]


def _f4(v: float) -> str:
    return f"{v:.4f}"


def observation_rows(epochs):
    for obs_list in epochs:
        for o in obs_list:
            p = o.sat_position
            yield [_f4(o.epoch), o.sat_id, _f4(o.pr_l1), _f4(o.pr_l2), _f4(o.cp_l1), _f4(o.cp_l2),
                   "1" if o.loss_of_lock else "0", _f4(p.x), _f4(p.y), _f4(p.z), _f4(o.sat_clock_bias),
                   f"{o.elevation:.10f}"]


def write_observations(path, epochs) -> None:
    """Write per-epoch observation lists; epochs without observations are not representable."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OBS_COLUMNS)
        w.writerows(observation_rows(epochs))


def read_observations(path) -> list:
    """Read an observation CSV back into a list of per-epoch observation lists."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != OBS_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = []
        for r in reader:
            if not r:
                continue
            rows.append(
                GnssObservation(
                    epoch=float(r[0]),
                    sat_id=r[1],
                    pr_l1=float(r[2]),
                    pr_l2=float(r[3]),
                    cp_l1=float(r[4]),
                    cp_l2=float(r[5]),
                    loss_of_lock=r[6].strip() in ("1", "true", "True"),
                    sat_position=EcefPosition(float(r[7]), float(r[8]), float(r[9])),
                    sat_clock_bias=float(r[10]),
                    elevation=float(r[11]),
                )
            )
    return [list(g) for _, g in groupby(rows, key=lambda o: o.epoch)]


def write_truth(path, truth) -> None:
    """``truth`` is a sequence of objects with ``epoch`` and ``state`` (EpochState)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRUTH_COLUMNS)
        for rec in truth:
            s = rec.state
            w.writerow([_f4(rec.epoch), *(_f4(v) for v in s.position), _f4(s.trop_wet_zenith), _f4(s.clock_bias)])


def read_truth(path) -> dict:
    """Map epoch -> EpochState."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRUTH_COLUMNS:
            raise ValueError(f"{path}: unexpected header {header}")
        for r in reader:
            if r:
                v = [float(x) for x in r]
                out[v[0]] = EpochState(np.array(v[1:4]), v[4], v[5])
    return out
