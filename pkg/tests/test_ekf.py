import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pppgraph.ekf_baseline import (
    EkfState,
    ekf_predict,
    read_estimates,
    run_filter,
    scalar_update,
    write_estimates,
)
from pppgraph.errors import InvalidArgumentError, NumericalError
from pppgraph.factor_graph import X, batch_optimize
from pppgraph.gnss_models import ArcId
from pppgraph.harness import rsos
from pppgraph.linear_fixture import fixture_filter, fixture_graph, random_linear_fixture
from pppgraph.ppp import prepare_epochs
from pppgraph.simulator import ScenarioConfig, simulate
from pppgraph.stochastic import StochasticModel

from test_simulator import QUIET


def _state_with_arc(model):
    s = EkfState.initial(np.zeros(5), model)
    s.add_ambiguity(ArcId("G01", 0), 3.0, 100.0**2)
    return s


def test_initial_state_uses_prior_sigmas():
    model = StochasticModel()
    s = EkfState.initial(np.arange(7.0), model)
    assert s.dim == 5
    np.testing.assert_allclose(np.diag(s.cov), [1.0, 1.0, 1.0, 0.09, 9e12])


def test_predict_grows_position_and_keeps_ambiguity():
    model = StochasticModel(white_clock=False)
    s = _state_with_arc(model)
    p = ekf_predict(s, 2.0, model)
    np.testing.assert_allclose(np.diag(p.cov)[:3], 1.0 + 25.0 * 2.0)
    assert p.cov[3, 3] == pytest.approx(0.09 + 9e-10 * 2.0)
    assert p.cov[4, 4] == pytest.approx(9e12 + 4e6 * 2.0)
    assert p.cov[5, 5] == 100.0**2
    assert not p.clock_diffuse
    np.testing.assert_array_equal(s.cov, _state_with_arc(model).cov)  # input untouched


def test_white_clock_becomes_diffuse():
    model = StochasticModel()
    p = ekf_predict(EkfState.initial(np.zeros(5), model), 1.0, model, displacement=[1.0, 2.0, 3.0])
    assert p.clock_diffuse
    assert not p.cov[4].any() and not p.cov[:, 4].any()
    np.testing.assert_array_equal(p.mean[:3], [1.0, 2.0, 3.0])


def test_predict_rejects_nonpositive_dt():
    model = StochasticModel()
    with pytest.raises(InvalidArgumentError):
        ekf_predict(EkfState.initial(np.zeros(5), model), 0.0, model)


def test_new_and_dropped_arcs():
    model = StochasticModel()
    s = _state_with_arc(model)
    assert s.dim == 6 and s.ambiguity(ArcId("G01", 0)) == 3.0
    s.add_ambiguity(ArcId("G02", 0), -1.0, 4.0)
    with pytest.raises(InvalidArgumentError):
        s.add_ambiguity(ArcId("G02", 0), 0.0, 1.0)
    block = s.cov[np.ix_([0, 1, 2, 3, 4, 6], [0, 1, 2, 3, 4, 6])].copy()
    assert s.drop_ambiguities([ArcId("G02", 0)]) == [ArcId("G01", 0)]
    assert s.dim == 6 and s.ambiguity(ArcId("G02", 0)) == -1.0
    np.testing.assert_array_equal(s.cov, block)


def test_scalar_update_matches_textbook_form():
    model = StochasticModel(prior_clock_sigma=3.0, white_clock=False)
    s = _state_with_arc(model)
    rng = np.random.default_rng(0)
    h = rng.normal(size=5)
    P = s.cov.copy()
    hh = np.append(h, 1.0)
    S = hh @ P @ hh + 0.04
    K = P @ hh / S
    innov = scalar_update(s, 0.7, h, 0.04, arc=ArcId("G01", 0), label="t")
    assert innov.variance == pytest.approx(S)
    assert innov.nis == pytest.approx(0.49 / S)
    np.testing.assert_allclose(s.mean, np.append(np.zeros(5), 3.0) + K * 0.7, atol=1e-12)
    np.testing.assert_allclose(s.cov, P - np.outer(K, K) * S, atol=1e-10)
    np.testing.assert_array_equal(s.cov, s.cov.T)


def test_diffuse_clock_resolved_by_first_measurement():
    model = StochasticModel()
    s = ekf_predict(EkfState.initial(np.zeros(5), model), 1.0, model)
    h = np.array([0.3, -0.4, 0.5, 2.0, 1.0])
    innov = scalar_update(s, 12.0, h, 1.0)
    assert np.isinf(innov.variance) and innov.nis == 0.0
    assert not s.clock_diffuse
    assert s.mean[4] == pytest.approx(12.0)
    s.check_psd()


def test_check_psd_rejects_negative_covariance():
    s = EkfState(np.zeros(5), -np.eye(5))
    with pytest.raises(NumericalError):
        s.check_psd("test")


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31 - 1), n_epochs=st.integers(1, 12), n_arcs=st.integers(1, 5), white=st.booleans())
def test_filter_matches_batch_at_the_last_epoch(seed, n_epochs, n_arcs, white):
    fx = random_linear_fixture(np.random.default_rng(seed), n_epochs=n_epochs, n_arcs=n_arcs, white_clock=white)
    ekf = fixture_filter(fx)
    g, vals = fixture_graph(fx)
    res = batch_optimize(g, vals)
    np.testing.assert_allclose(ekf.mean[:5], res.values[X(fx.n_epochs - 1)], atol=1e-8)
    np.testing.assert_allclose(ekf.cov[:5, :5], res.last_epoch_covariance, atol=1e-8, rtol=1e-6)


def _quiet_run(duration=60.0):
    cfg = ScenarioConfig(duration_s=duration, **QUIET).replace(code_sigma_m=1e-3, phase_sigma_m=1e-3)
    sim = simulate(cfg, 1)
    prepared = prepare_epochs(sim.observations)
    truth = np.array([t.state.position for t in sim.truth])
    return run_filter(prepared, cfg.stochastic_model()), truth


def test_filter_is_exact_without_noise():
    res, truth = _quiet_run()
    err = rsos(res.estimates[:, :3], truth)
    # with four satellites the 1e-4 m observation rounding is amplified by the geometry
    n_sats = np.array([len(r.items) // 2 for r in res.innovations])
    assert err[n_sats >= 5].max() < 5e-3
    assert err.max() < 0.1
    # residual quantization noise is well inside the assumed 1 mm sigmas
    nis = sum(r.nis for r in res.innovations)
    dof = sum(r.dof for r in res.innovations)
    assert 0 < nis / dof < 1.0


def test_run_filter_outputs():
    res, truth = _quiet_run(20.0)
    n = len(res.epochs)
    assert res.estimates.shape == (n, 5) and res.sigmas.shape == (n, 3)
    assert len(res.ambiguities) == n and len(res.innovations) == n
    assert np.all(res.sigmas > 0)
    assert np.all(np.diff(res.sigmas[:, 0][:5]) < 0)  # converging


def test_estimates_file_round_trip(tmp_path):
    epochs = np.array([0.0, 1.0])
    est = np.array([[1.0, 2.0, 3.0, 0.1, 5.0], [1.5, 2.5, 3.5, 0.2, 6.0]])
    sig = np.array([[0.1, 0.2, 0.3], [0.1, 0.2, 0.3]])
    write_estimates(tmp_path / "e.csv", epochs, est, sig)
    e2, est2, sig2 = read_estimates(tmp_path / "e.csv")
    np.testing.assert_allclose(e2, epochs)
    np.testing.assert_allclose(est2, est, atol=1e-6)
    np.testing.assert_allclose(sig2, sig, atol=1e-6)
