import json
import math

import numpy as np
import pytest

import mavmpc


def test_hover_is_equilibrium():
    p = mavmpc.ModelParams()
    x = np.zeros(9)
    x[2] = 1.0
    xd = mavmpc.dynamics(x, np.array([0.0, 0.0, p.g]), 0.0, np.zeros(3), p)
    assert np.allclose(xd, 0.0, atol=1e-14)


def test_hover_linearization_matches_finite_differences():
    p = mavmpc.ModelParams()
    A, B, Bd = mavmpc.linearize_hover(p)
    assert A.shape == (8, 8) and B.shape == (8, 3) and Bd.shape == (8, 3)
    u0 = np.array([0.0, 0.0, p.g])
    h = 1e-6
    for i in range(8):
        e = np.zeros(9)
        e[i] = h
        col = (mavmpc.dynamics(e, u0, 0.0, np.zeros(3), p)
               - mavmpc.dynamics(-e, u0, 0.0, np.zeros(3), p)) / (2 * h)
        assert np.allclose(A[:, i], col[:8], atol=1e-7)


def test_box_qp_against_projection_for_diagonal_hessian():
    H = np.diag([2.0, 1.0, 4.0])
    g = np.array([-4.0, 3.0, -1.0])
    lb = np.array([-1.0, -1.0, -1.0])
    ub = np.array([1.0, 1.0, 1.0])
    sol = mavmpc.solve_box_qp(H, g, lb, ub)
    expected = np.clip(-g / np.diag(H), lb, ub)
    assert np.allclose(sol["z"], expected, atol=1e-12)
    assert sol["kkt_residual"] <= 1e-8


def test_invalid_input_raises_value_error():
    with pytest.raises(ValueError):
        mavmpc.solve_box_qp(np.eye(2), np.zeros(3), np.zeros(2), np.ones(2))
    with pytest.raises(ValueError):
        mavmpc.canonical_config({"schema_version": 1, "bogus": 1})


def test_controllers_hold_hover():
    tr = mavmpc.Trajectory.hover(np.array([0.0, 0.0, 1.0]))
    x = np.zeros(9)
    x[2] = 1.0
    p = mavmpc.ModelParams()
    for ctrl in (mavmpc.LinearMpc(), mavmpc.NonlinearMpc()):
        cmd = ctrl.step(x, np.zeros(3), tr, 0.0)
        assert abs(cmd["phi_cmd"]) < 1e-12
        assert abs(cmd["theta_cmd"]) < 1e-12
        assert math.isclose(cmd["thrust_cmd"], p.g, rel_tol=1e-12)


def test_default_suite_round_trip():
    suite = mavmpc.default_suite()
    assert [c["name"] for c in suite] == ["hover", "hover_wind", "step", "figure8_wind"]
    for c in suite:
        assert mavmpc.canonical_config(c) == c


def test_simulate_is_deterministic_and_reports_metrics():
    config = {"schema_version": 1, "name": "short", "duration": 3.0,
              "measurement_noise": True,
              "wind": {"mode": "gusty", "speed": [11.0, 0.0, 0.0], "seed": 3}}
    a = mavmpc.simulate(config, "nmpc")
    b = mavmpc.simulate(config, "nmpc")
    assert a["csv"] == b["csv"]
    assert not a["aborted"]
    assert len(a["columns"]["t"]) == 300
    assert a["metrics"]["total_rmse_cm"] > 0.0
    assert "mean_solve_ms" in json.dumps(a["timing"])


def test_run_suite_pairs_controllers():
    configs = [{"schema_version": 1, "name": "hover", "duration": 2.5}]
    report, table = mavmpc.run_suite(configs)
    assert [r["controller"] for r in report["reports"]] == ["lmpc", "nmpc"]
    assert "hover" in table
