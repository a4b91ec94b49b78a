import math

import numpy as np
import pytest

import dugks


def test_velocity_set_moments():
    s = dugks.d2q9(0.5)
    assert len(s) == 9
    assert s.xi_max == pytest.approx(math.sqrt(1.5), rel=1e-15)
    w, v = s.weights, s.velocities
    assert w.sum() == pytest.approx(1.0, rel=1e-15)
    assert (w * v[:, 0] ** 2).sum() == pytest.approx(0.5, rel=1e-14)


def test_equilibrium_moments():
    s = dugks.d2q9(0.5)
    f = dugks.equilibrium(s, 1.2, 0.03, -0.01)
    assert f.sum() == pytest.approx(1.2, rel=1e-14)
    assert (f * s.velocities[:, 0]).sum() == pytest.approx(1.2 * 0.03, rel=1e-12)


def test_compute_dt():
    assert dugks.compute_dt(25, 0.5) == pytest.approx(0.016329931618554522, rel=1e-15)
    with pytest.raises(dugks.ConfigError):
        dugks.compute_dt(25, 1.5)


def test_fit_and_order():
    alpha = 8 * math.pi**2
    t = np.linspace(0, 100, 21)
    assert dugks.fit_decay_viscosity(t, 0.01 * np.exp(-1e-3 * alpha * t), alpha) == pytest.approx(1e-3, rel=1e-12)
    dx = [1 / 16, 1 / 32, 1 / 64]
    assert dugks.observed_order(dx, [3 * h * h for h in dx]) == pytest.approx(2.0, rel=1e-12)


def test_simulation_steps_and_checkpoint(tmp_path):
    sim = dugks.Simulation(16, 1e-3)
    assert sim.l2_error() < 1e-2
    sim.advance(50)
    assert sim.steps == 50
    assert sim.time == pytest.approx(50 * sim.dt, rel=1e-14)
    u = sim.velocity()
    assert u.shape == (16, 16, 2)
    assert np.abs(u).max() == pytest.approx(sim.max_velocity(), rel=0.5)
    path = tmp_path / "state.ckp"
    sim.save(path)
    twin = dugks.Simulation(16, 1e-3)
    twin.load(path)
    sim.advance(10)
    twin.advance(10)
    assert np.array_equal(sim.values(), twin.values())


def test_run_case_and_sweep(tmp_path):
    c = dugks.RunConfig.from_json('{"id": "py", "epsilon": 1.6e-3, "mesh": 25, "end_time_tc": 0.2}')
    c.output_dir = tmp_path
    r = dugks.run_case(c)
    assert r["status"] == "ok"
    assert r["delta_x"] == pytest.approx(25.0, rel=1e-14)
    assert r["conservation_ok"]
    assert (tmp_path / "profile_py.csv").exists()

    bad = dugks.RunConfig.from_json('{"id": "bad", "epsilon": 1.6e-3, "mesh": 25, "end_time_tc": 0.2}')
    bad.eta = 2.0
    rows, summary = dugks.run_sweep([c, bad], tmp_path)
    assert [row["status"] for row in rows] == ["ok", "config_error"]
    assert summary.exists()


def test_config_errors():
    with pytest.raises(dugks.ConfigError):
        dugks.RunConfig.from_json('{"mesh": 25, "mesh_exponent": 0.5}')
    with pytest.raises(dugks.ConfigError):
        dugks.run_sweep([], "unused")
