import filecmp

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pppgraph.errors import InvalidArgumentError
from pppgraph.harness import (
    REPORT_FILES,
    SummaryStats,
    build_report,
    campaign,
    cdf,
    convergence_window_stats,
    duration,
    final_fraction,
    read_errors,
    rsos,
    run_trial,
    trial_seeds,
    write_campaign,
)
from pppgraph.harness.metrics import window_mask
from pppgraph.simulator import ScenarioConfig

SHORT = ScenarioConfig(duration_s=90.0, convergence_window_s=60.0)


def test_rsos_examples():
    assert rsos([3.0, 4.0, 0.0], [0.0, 0.0, 0.0]) == 5.0
    np.testing.assert_allclose(rsos(np.array([[1.0, 2.0, 2.0], [0.0, 0.0, 0.0]]), np.zeros((2, 3))), [3.0, 0.0])
    with pytest.raises(InvalidArgumentError):
        rsos([1.0, 2.0], [0.0, 0.0])


def test_summary_stats_in_centimeters():
    st_ = SummaryStats.from_errors([0.01, 0.02, 0.03, 0.10])
    assert st_.median == pytest.approx(2.5)
    assert st_.mean == pytest.approx(4.0)
    assert st_.std == pytest.approx(np.std([1.0, 2.0, 3.0, 10.0]))
    assert st_.max == pytest.approx(10.0) and st_.count == 4
    assert st_.row() == ["2.5000", "4.0000", "3.5355", "10.0000"]
    const = SummaryStats.from_errors([0.5] * 7)
    assert const.std == 0.0 and const.median == const.mean == const.max == 50.0
    with pytest.raises(InvalidArgumentError):
        SummaryStats.from_errors([])


def test_cdf_example():
    x, f = cdf([4.0, 1.0, 3.0, 2.0])
    np.testing.assert_array_equal(x, [1.0, 2.0, 3.0, 4.0])
    np.testing.assert_allclose(f, [0.25, 0.5, 0.75, 1.0])
    x, f = cdf([1.0, 1.0, 2.0])
    np.testing.assert_allclose(f, [2 / 3, 1.0])


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.0, 1e3), min_size=1, max_size=200))
def test_cdf_is_monotone_and_ends_at_one(values):
    x, f = cdf(values)
    assert np.all(np.diff(x) > 0) and np.all(np.diff(f) > 0)
    assert f[-1] == pytest.approx(1.0)


def test_windows_and_fractions():
    t = np.arange(100.0, 130.0)
    assert duration(t) == 30.0
    assert window_mask(t, 10.0).sum() == 10
    np.testing.assert_array_equal(final_fraction(np.arange(30), t), np.arange(20, 30))


def test_window_longer_than_trial_is_rejected():
    class R:
        epochs = np.arange(10.0)
        errors = {"ekf": np.ones(10)}

    assert convergence_window_stats([R()], 5.0)["ekf"].count == 5
    with pytest.raises(InvalidArgumentError):
        convergence_window_stats([R()], 11.0)


def test_trial_seeds():
    assert trial_seeds(7, 3) == [7, 8, 9]


@pytest.fixture(scope="module")
def short_trial():
    return run_trial(SHORT, 4)


def test_trial_scores_both_estimators(short_trial):
    r = short_trial
    assert r.ok
    assert set(r.errors) == {"graph", "graph_online", "ekf"}
    n = len(r.epochs)
    assert n == 90 and all(len(v) == n for v in r.errors.values())
    assert r.n_ambiguities == r.n_arcs
    assert r.locality.shape == (n, 3)
    assert len(r.input_digest) == 64
    assert run_trial(SHORT, 4).input_digest == r.input_digest


def _write_errors(path, rows):
    with open(path, "w") as fh:
        fh.write("seed,epoch_s,graph_m,graph_online_m,ekf_m\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def test_build_report_from_handmade_errors(tmp_path):
    rows = []
    for seed in (0, 1):
        for k in range(6):
            g = 0.01 * (k + 1 + seed)
            rows.append([str(seed), f"{k:.4f}", f"{g:.6f}", f"{2 * g:.6f}", f"{3 * g:.6f}"])
    _write_errors(tmp_path / "errors.csv", rows)
    tables = build_report(tmp_path, window_s=2.0)
    for name in REPORT_FILES:
        assert (tmp_path / name).exists()
    conv = tables["convergence"]
    # first two epochs of each trial: 1, 2 and 2, 3 cm
    assert conv["graph"].mean == pytest.approx(2.0)
    assert conv["ekf"].max == pytest.approx(9.0)
    final = tables["final_third"]["graph"]
    assert final.count == 4 and final.median == pytest.approx(6.0)
    assert (tmp_path / "stats_convergence.csv").read_text().splitlines() == [
        "estimator,median_cm,mean_cm,std_cm,max_cm",
        "graph,2.0000,2.0000,0.7071,3.0000",
        "graph_online,4.0000,4.0000,1.4142,6.0000",
        "ekf,6.0000,6.0000,2.1213,9.0000",
    ]
    cdf_lines = (tmp_path / "cdf_convergence.csv").read_text().splitlines()
    assert cdf_lines[:4] == ["error_cm,fraction,estimator", "1.0000,0.250000,graph", "2.0000,0.750000,graph",
                             "3.0000,1.000000,graph"]
    with pytest.raises(InvalidArgumentError):
        build_report(tmp_path, window_s=7.0)
    with pytest.raises(InvalidArgumentError):
        build_report(tmp_path, window_s=0.0)


def test_read_errors_rejects_bad_header(tmp_path):
    (tmp_path / "errors.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_errors(tmp_path / "errors.csv")


def test_campaign_reports_do_not_depend_on_worker_count(tmp_path):
    cfg = ScenarioConfig(duration_s=45.0, convergence_window_s=30.0)
    for w in (1, 2):
        write_campaign(campaign(cfg, 2, seed=3, workers=w), tmp_path / f"w{w}", 30.0)
    files = sorted(p.name for p in (tmp_path / "w1").iterdir())
    assert "timing.csv" in files and "locality.csv" in files
    for name in files:
        if name != "timing.csv":
            assert filecmp.cmp(tmp_path / "w1" / name, tmp_path / "w2" / name, shallow=False), name


def test_campaign_validates_arguments():
    with pytest.raises(InvalidArgumentError):
        campaign(SHORT, 0)
    with pytest.raises(InvalidArgumentError):
        campaign(SHORT, 1, workers=0)
