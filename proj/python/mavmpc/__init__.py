"""Linear and nonlinear MPC for multirotor trajectory tracking.

The compiled core is in ``mavmpc._core``; this module adds a dict/numpy
layer over its JSON scenario interface.
"""

import json

import numpy as np

from ._core import (
    DisturbanceEkf,
    InputLimits,
    LinearMpc,
    ModelParams,
    NonlinearMpc,
    OcpConfig,
    Trajectory,
    discretize_hover,
    dynamics,
    integrate_step,
    linearize_hover,
    riccati_terminal,
    solve_box_qp,
)
from . import _core

__all__ = [
    "DisturbanceEkf",
    "InputLimits",
    "LinearMpc",
    "ModelParams",
    "NonlinearMpc",
    "OcpConfig",
    "Trajectory",
    "canonical_config",
    "default_suite",
    "discretize_hover",
    "dynamics",
    "integrate_step",
    "linearize_hover",
    "riccati_terminal",
    "run_suite",
    "simulate",
    "solve_box_qp",
]


def default_suite():
    """Built-in scenarios as canonical config dicts."""
    return [json.loads(s) for s in _core.default_suite_json()]


def canonical_config(config):
    """Validate a scenario dict and return it with every field filled in."""
    return json.loads(_core.canonical_config_json(json.dumps(config)))


def simulate(config, controller="lmpc"):
    """Run one scenario with ``"lmpc"`` or ``"nmpc"``.

    Returns a dict with ``columns`` (name -> numpy array), ``metrics``,
    ``timing``, ``aborted``, ``abort_reason`` and the ``csv`` log text.
    """
    out = _core.simulate_json(json.dumps(config), controller)
    return {
        "columns": {k: np.asarray(v) for k, v in out["columns"].items()},
        "metrics": json.loads(out["metrics_json"]),
        "timing": json.loads(out["timing_json"]),
        "aborted": out["aborted"],
        "abort_reason": out["abort_reason"],
        "csv": out["csv"],
    }


def run_suite(configs=None):
    """Run scenarios with both controllers; returns (report dict, text table)."""
    if configs is None:
        configs = default_suite()
    report, table = _core.run_suite_json([json.dumps(c) for c in configs])
    return json.loads(report), table
