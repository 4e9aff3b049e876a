import math

import numpy as np
import pytest

from pppgraph.errors import ConfigError
from pppgraph.gnss_models import (
    EARTH_MU,
    LAMBDA_L1,
    LAMBDA_L2,
    dry_zenith_at_height,
    ecef_to_geodetic,
    enu_rotation,
    geodetic_to_ecef,
    iono_free_combine,
)
from pppgraph.simulator import (
    ErrorProcessState,
    SatelliteEphemeris,
    ScenarioConfig,
    format_config,
    gauss_markov_step,
    generate_trajectory,
    nominal_constellation,
    orbit_error,
    parse_config,
    phase_break_decision,
    propagate_constellation,
    read_observations,
    read_truth,
    simulate,
    visibility,
    write_observations,
    write_truth,
)
from pppgraph.simulator.errors import attitude_rate, clock_step
from pppgraph.simulator.trajectory import RACETRACK_RADIUS_M, Trajectory

QUIET = dict(thermal_code_sigma_m=0.0, thermal_phase_sigma_cycles=0.0, multipath_sigma_m=0.0, orbit_sigma_m=0.0,
             orbit_rate_m_per_s=0.0, clock_sigma_ns=0.0, code_sigma_m=1.0, phase_sigma_m=0.01)


# --- error processes -------------------------------------------------------

def test_gauss_markov_examples():
    assert gauss_markov_step(0.7, 0.4, math.inf, 1.0, 0.0) == 0.7
    assert gauss_markov_step(0.0, 0.4, 15.0, 1e4, 1.0) == pytest.approx(0.4)
    assert gauss_markov_step(1.0, 0.4, 15.0, 15.0, 0.0) == pytest.approx(math.exp(-1.0))


def test_gauss_markov_stationary_variance():
    rng = np.random.default_rng(0)
    x = 0.4 * rng.standard_normal(200_000)
    for _ in range(5):
        x = gauss_markov_step(x, 0.4, 15.0, 1.0, rng.standard_normal(x.size))
    assert np.var(x) == pytest.approx(0.16, rel=0.02)


def test_phase_break_examples():
    rng = np.random.default_rng(0)
    assert phase_break_decision(False, True, 0.0, rng, 0.0, 0.0)
    assert not phase_break_decision(True, True, 0.0, rng, 0.0, 0.0)
    assert not phase_break_decision(True, False, 0.0, rng, 1.0, 0.0)
    assert phase_break_decision(True, True, 10.0, rng, 0.0, 1.0)  # clamped to 1


def test_phase_break_binomial_frequency():
    rng = np.random.default_rng(1)
    n, p = 100_000, 0.03
    hits = sum(phase_break_decision(True, True, 0.5, rng, 0.02, 0.02) for _ in range(n))
    assert abs(hits - n * p) <= 3 * math.sqrt(n * p * (1 - p))


def test_orbit_error_offset_and_rate():
    cfg = ScenarioConfig()
    rng = np.random.default_rng(3)
    sats = [f"S{i}" for i in range(10_000)]
    errs = ErrorProcessState.initial(cfg, sats, 0.0, rng)
    assert orbit_error(errs, "S0", 0.0) == errs.orbit_offset["S0"]
    offsets = np.array([orbit_error(errs, s, 0.0) for s in sats])
    assert offsets.std() == pytest.approx(0.05, rel=0.05)
    drift = orbit_error(errs, "S1", 600.0) - orbit_error(errs, "S1", 0.0)
    assert abs(drift) == pytest.approx(0.01, rel=1e-9)  # 1 mm/min for 10 min
    still = ErrorProcessState.initial(cfg.replace(orbit_rate_m_per_s=0.0), sats[:3], 0.0, rng)
    assert orbit_error(still, "S2", 0.0) == orbit_error(still, "S2", 1e4)


def test_clock_step_and_attitude_rate():
    assert clock_step(10.0, 2.0, 3.0, 4.0, 0.5) == pytest.approx(10.0 + 8.0 + 3.0 * 2.0 * 0.5)
    assert attitude_rate([0, 0, math.pi - 0.05], [0, 0, -math.pi + 0.05], 1.0) == pytest.approx(0.1)


# --- trajectories and geometry --------------------------------------------

def test_static_trajectory():
    tr = generate_trajectory("static", 10.0, 1.0)
    assert len(tr) == 10
    assert all(np.array_equal(s.position, tr[0].position) for s in tr)
    assert all(not s.attitude.any() for s in tr)


def test_racetrack_closes():
    tr = generate_trajectory("racetrack", 600.0, 1.0)
    assert len(tr) == 600
    assert np.diff([s.epoch for s in tr]) == pytest.approx(np.ones(599))
    assert np.linalg.norm(tr[0].position - tr[-1].position) < RACETRACK_RADIUS_M


@pytest.mark.parametrize("profile", ["static", "racetrack", "figure_eight", "ascent"])
def test_velocity_matches_position_differences(profile):
    h = 1e-3
    traj = Trajectory(profile, 300.0, 0.7, -1.4, 1500.0)
    for t in np.linspace(3.0, 297.0, 23):
        fd = (traj.position(t + h) - traj.position(t - h)) / (2 * h)
        assert np.abs(fd - traj.velocity(t)).max() < 1e-3


def test_equatorial_satellite_on_x_axis():
    eph = [SatelliteEphemeris("T1", 26_560_000.0, 0.0, 0.0, 0.0)]
    pos, clk = propagate_constellation(eph, 0.0, earth_rotation=False)
    np.testing.assert_allclose(pos[0], [26_560_000.0, 0.0, 0.0], atol=1e-6)


def test_orbit_period_and_rate():
    e = SatelliteEphemeris("T1", 26_560_000.0, 0.96, 1.0, 0.3, clock_offset=5.0, clock_drift=0.5)
    period = 2 * math.pi / e.mean_motion
    assert e.mean_motion == pytest.approx(math.sqrt(EARTH_MU / 26_560_000.0**3))
    p0, c0 = propagate_constellation([e], 0.0, earth_rotation=False)
    p1, c1 = propagate_constellation([e], period, earth_rotation=False)
    assert np.abs(p1 - p0).max() < 1e-6
    assert np.linalg.norm(p0) == pytest.approx(26_560_000.0)
    assert c1[0] - c0[0] == pytest.approx(0.5 * period)
    # angle swept in 60 s
    q, _ = propagate_constellation([e], 60.0, earth_rotation=False)
    angle = math.acos(np.clip(p0[0] @ q[0] / np.linalg.norm(p0) / np.linalg.norm(q[0]), -1, 1))
    assert angle == pytest.approx(60.0 * e.mean_motion, rel=1e-9)


def test_nominal_constellation_size():
    sats = nominal_constellation(np.random.default_rng(0))
    assert len(sats) >= 24
    assert len({s.sat_id for s in sats}) == len(sats)


def _sky_point(rx, el, az, dist=2e7):
    lat, lon, _ = ecef_to_geodetic(rx)
    enu = np.array([math.cos(el) * math.sin(az), math.cos(el) * math.cos(az), math.sin(el)])
    return rx + dist * (enu_rotation(lat, lon).T @ enu)


def test_visibility_examples():
    rx = geodetic_to_ecef(0.7, -1.4, 1500.0)
    mask = math.radians(10.0)
    assert visibility(rx, _sky_point(rx, -0.2, 1.0), mask) is None
    el, _ = visibility(rx, _sky_point(rx, math.pi / 2, 0.0), mask)
    assert el == pytest.approx(math.pi / 2, abs=1e-6)  # asin is ill-conditioned at the zenith
    low = _sky_point(rx, math.radians(25.0), math.radians(90.0))  # due east
    assert visibility(rx, low, mask) is not None
    # heading north, a 30 degree bank lifts one wing and hides the low eastern satellite on that side
    hidden = [visibility(rx, low, mask, attitude=(roll, 0.0, 0.0)) is None
              for roll in (math.radians(30), -math.radians(30))]
    assert sorted(hidden) == [False, True]


# --- full scenarios --------------------------------------------------------

def test_simulation_is_deterministic():
    cfg = ScenarioConfig(duration_s=30.0)
    a, b = simulate(cfg, 4), simulate(cfg, 4)
    assert a.observations == b.observations
    assert [t.state.position.tolist() for t in a.truth] == [t.state.position.tolist() for t in b.truth]
    assert simulate(cfg, 5).observations != a.observations


def _model_residuals(sim):
    """Observations minus the truth model without noise, per satellite-epoch."""
    rows = []
    for obs, truth in zip(sim.observations, sim.truth):
        st = truth.state
        _, _, h = ecef_to_geodetic(st.position)
        trop = dry_zenith_at_height(h) + st.trop_wet_zenith
        for o in obs:
            rho = np.linalg.norm(o.sat_position.as_array() - st.position)
            common = rho + st.clock_bias - o.sat_clock_bias + trop / math.sin(o.elevation)
            rows.append((o.sat_id, o.pr_l1 - common, o.pr_l2 - common, o.cp_l1 - common, o.cp_l2 - common))
    return rows


def test_zero_error_observations_equal_the_geometry():
    cfg = ScenarioConfig(duration_s=20.0, iono_zenith_min_m=0.0, iono_zenith_max_m=0.0, ambiguity_max_cycles=0,
                         **QUIET)
    rows = _model_residuals(simulate(cfg, 1))
    res = np.array([r[1:] for r in rows])
    assert np.abs(res).max() < 2e-4  # 1e-4 m quantization of the observation record


def test_ionosphere_cancels_in_simulated_if():
    cfg = ScenarioConfig(duration_s=20.0, ambiguity_max_cycles=0, **QUIET)
    rows = _model_residuals(simulate(cfg, 1))
    res = np.array([r[1:] for r in rows])
    assert np.abs(res[:, 0]).min() > 0.5  # the ionosphere is present per frequency
    pr_if = iono_free_combine(res[:, 0], res[:, 1])
    cp_if = iono_free_combine(res[:, 2], res[:, 3])
    assert np.abs(pr_if).max() < 1e-3 and np.abs(cp_if).max() < 1e-3


def test_thermal_noise_sample_std():
    cfg = ScenarioConfig(profile="static", duration_s=1500.0, iono_zenith_min_m=0.0, iono_zenith_max_m=0.0,
                         ambiguity_max_cycles=0, multipath_sigma_m=0.0, orbit_sigma_m=0.0, orbit_rate_m_per_s=0.0)
    res = np.array([r[1:] for r in _model_residuals(simulate(cfg, 2))])
    assert res.shape[0] > 10_000
    assert res[:, 0].std() == pytest.approx(0.32, rel=0.05)
    assert res[:, 1].std() == pytest.approx(0.32, rel=0.05)
    assert res[:, 2].std() == pytest.approx(0.16 * LAMBDA_L1, rel=0.05)
    assert res[:, 3].std() == pytest.approx(0.16 * LAMBDA_L2, rel=0.05)


def test_ambiguities_constant_within_arcs():
    sim = simulate(ScenarioConfig(duration_s=300.0, phase_break_prob=0.01), 3)
    seen = {}
    for truth in sim.truth:
        for arc, value in truth.ambiguities.items():
            assert seen.setdefault(arc, value) == value
    assert len(seen) == sim.n_arcs == len(sim.arcs)
    assert sim.n_arcs > len({a.sat_id for a in seen})  # some arcs broke


def test_config_round_trip_and_errors():
    cfg = ScenarioConfig(profile="ascent", duration_s=77.0, code_sigma_m=1.25)
    assert parse_config(format_config(cfg)) == cfg
    with pytest.raises(ConfigError):
        parse_config("no_such_key = 1\n")
    with pytest.raises(ConfigError):
        parse_config("duration_s = soon\n")
    with pytest.raises(ConfigError):
        ScenarioConfig(rate_hz=0.0)
    with pytest.raises(ConfigError):
        ScenarioConfig(multipath_sigma_m=-1.0)


def test_observation_and_truth_files_round_trip(tmp_path):
    sim = simulate(ScenarioConfig(duration_s=15.0), 6)
    write_observations(tmp_path / "obs.csv", sim.observations)
    write_truth(tmp_path / "truth.csv", sim.truth)
    assert read_observations(tmp_path / "obs.csv") == sim.observations
    truth = read_truth(tmp_path / "truth.csv")
    assert sorted(truth) == [t.epoch for t in sim.truth]
    header = (tmp_path / "obs.csv").read_text().splitlines()[0]
    assert header == ("epoch_s,sat_id,pr_l1_m,pr_l2_m,cp_l1_m,cp_l2_m,loss_of_lock,sat_x_m,sat_y_m,sat_z_m,"
                      "sat_clk_m,elev_rad")
