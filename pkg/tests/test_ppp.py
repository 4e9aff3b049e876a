import numpy as np
import pytest

from pppgraph.ekf_baseline import run_filter
from pppgraph.errors import NumericalError
from pppgraph.harness import rsos
from pppgraph.ppp import prepare_epochs, run_graph, single_point_fix
from pppgraph.simulator import ScenarioConfig, simulate

from test_simulator import QUIET

TIGHT = dict(QUIET, code_sigma_m=1e-3, phase_sigma_m=1e-3)


@pytest.fixture(scope="module")
def quiet_scenario():
    cfg = ScenarioConfig(duration_s=40.0, profile="static", **TIGHT)
    sim = simulate(cfg, 3)
    return cfg, sim, prepare_epochs(sim.observations)


def test_code_fix_recovers_truth_without_noise(quiet_scenario):
    _, sim, prepared = quiet_scenario
    truth = np.array([t.state.position for t in sim.truth])
    ref = np.array([p.reference for p in prepared])
    # the code-only fix ignores the wet delay, so it is biased by decimeters at most
    assert rsos(ref, truth).max() < 1.0
    assert all(p.fix_ok for p in prepared)


def test_code_fix_needs_four_satellites(quiet_scenario):
    _, _, prepared = quiet_scenario
    with pytest.raises(NumericalError):
        single_point_fix(prepared[0].observations[:3])


def test_graph_is_exact_without_noise(quiet_scenario):
    cfg, sim, prepared = quiet_scenario
    truth = np.array([t.state.position for t in sim.truth])
    res = run_graph(prepared, cfg.stochastic_model())
    assert rsos(res.smoothed[:, :3], truth).max() < 2e-3
    assert rsos(res.online[:, :3], truth).max() < 5e-3
    assert res.n_ambiguities == sim.n_arcs


def test_graph_online_estimate_equals_filter():
    cfg = ScenarioConfig(duration_s=120.0)
    prepared = prepare_epochs(simulate(cfg, 8).observations)
    model = cfg.stochastic_model()
    graph = run_graph(prepared, model, update_tolerance=0.0)
    ekf = run_filter(prepared, model)
    assert np.abs(graph.online[:, :3] - ekf.estimates[:, :3]).max() < 1e-4
    np.testing.assert_allclose(graph.online_sigma, ekf.sigmas, rtol=1e-4)


def test_locality_records_cover_every_epoch(quiet_scenario):
    cfg, _, prepared = quiet_scenario
    res = run_graph(prepared, cfg.stochastic_model())
    assert len(res.records) == len(prepared)
    assert [r.epoch for r in res.records] == [p.epoch for p in prepared]
