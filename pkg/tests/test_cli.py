import subprocess
import sys

import pytest

import pppgraph.ekf_baseline
from pppgraph.cli import EXIT_CONFIG, EXIT_ESTIMATOR, EXIT_IO, EXIT_OK, main
from pppgraph.errors import NumericalError
from pppgraph.simulator import ScenarioConfig, save_config


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    save_config(ScenarioConfig(duration_s=40.0, convergence_window_s=20.0), d / "short.cfg")
    assert main(["simulate", "--config", str(d / "short.cfg"), "--seed", "2", "--out-obs", str(d / "obs.csv"),
                 "--out-truth", str(d / "truth.csv")]) == EXIT_OK
    return d


def test_simulate_writes_files(workspace):
    assert (workspace / "obs.csv").read_text().startswith("epoch_s,sat_id,")
    assert len((workspace / "truth.csv").read_text().splitlines()) == 41


def test_run_both_estimators(workspace, capsys):
    out = workspace / "est.csv"
    rc = main(["run", "--estimator", "both", "--obs", str(workspace / "obs.csv"), "--truth",
               str(workspace / "truth.csv"), "--out", str(out), "--locality", str(workspace / "loc.csv")])
    assert rc == EXIT_OK
    for name in ("est_graph.csv", "est_ekf.csv", "loc.csv"):
        assert len((workspace / name).read_text().splitlines()) == 41
    text = capsys.readouterr().out
    assert "graph:" in text and "ekf:" in text


def test_campaign_and_report(workspace, capsys):
    d = workspace / "camp"
    rc = main(["campaign", "--config", str(workspace / "short.cfg"), "--trials", "2", "--seed", "1", "--workers", "1",
               "--out-dir", str(d), "--quiet"])
    assert rc == EXIT_OK
    for name in ("stats_all.csv", "stats_convergence.csv", "cdf_all.csv", "cdf_convergence.csv", "locality.csv"):
        assert (d / name).exists()
    before = (d / "stats_convergence.csv").read_text()
    assert main(["report", "--in-dir", str(d), "--window-s", "10"]) == EXIT_OK
    assert (d / "stats_convergence.csv").read_text() != before
    assert "first 10 s" in capsys.readouterr().out


def test_config_errors_exit_2(workspace, tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("not_a_key = 3\n")
    assert main(["simulate", "--config", str(bad), "--out-obs", str(tmp_path / "o"), "--out-truth",
                 str(tmp_path / "t")]) == EXIT_CONFIG
    assert main(["campaign", "--config", str(workspace / "short.cfg"), "--trials", "0", "--out-dir",
                 str(tmp_path / "c")]) == EXIT_CONFIG
    assert main(["campaign", "--config", str(workspace / "short.cfg"), "--trials", "1", "--window-s", "500",
                 "--out-dir", str(tmp_path / "c")]) == EXIT_CONFIG
    assert main(["report", "--in-dir", str(workspace / "camp"), "--window-s", "1e6"]) == EXIT_CONFIG


def test_io_errors_exit_4(workspace, tmp_path):
    assert main(["run", "--estimator", "ekf", "--obs", str(tmp_path / "missing.csv"), "--truth",
                 str(workspace / "truth.csv"), "--out", str(tmp_path / "e.csv")]) == EXIT_IO
    junk = tmp_path / "junk.csv"
    junk.write_text("hello,world\n1,2\n")
    assert main(["run", "--estimator", "ekf", "--obs", str(junk), "--truth", str(workspace / "truth.csv"), "--out",
                 str(tmp_path / "e.csv")]) == EXIT_IO
    assert main(["report", "--in-dir", str(tmp_path / "nowhere")]) == EXIT_IO


def test_estimator_failure_exits_3(workspace, tmp_path, monkeypatch):
    def broken(*args, **kwargs):
        raise NumericalError("covariance not positive semi-definite")

    monkeypatch.setattr(pppgraph.ekf_baseline, "run_filter", broken)
    assert main(["run", "--estimator", "ekf", "--obs", str(workspace / "obs.csv"), "--truth",
                 str(workspace / "truth.csv"), "--out", str(tmp_path / "e.csv")]) == EXIT_ESTIMATOR


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "pppgraph", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("simulate", "run", "campaign", "report"):
        assert cmd in out.stdout
