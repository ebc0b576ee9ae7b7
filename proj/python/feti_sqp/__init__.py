"""Nonlinear FETI-DP solvers for a Neo-Hookean cantilever."""

import json as _json

from ._core import (
    CSV_HEADER,
    ConfigError,
    ConstrainedProblem,
    Error,
    FactorizationError,
    FetiProblem,
    InadmissibleDeformation,
    KrylovError,
    ParameterError,
    QnState,
    QuadraticProblem,
    RestartRule,
    SqpConfig,
    energy_density,
    lagrangian_grad,
    lame_from_E_nu,
    merit_dp,
    merit_p1,
    newton_baseline_solve,
    oracle_solve,
    penalty_update,
    restart_check,
    solve_kkt,
    sqp_solve,
)
from ._core import check_config as _check_config
from ._core import run_benchmark as _run_benchmark


def _as_text(config):
    return config if isinstance(config, str) else _json.dumps(config)


def check_config(config):
    """Validate a run configuration given as a dict or JSON text."""
    _check_config(_as_text(config))


def run_benchmark(config, out_dir="", solver=""):
    """Run the benchmark; writes results.csv and trace.json into out_dir."""
    return _run_benchmark(_as_text(config), out_dir, solver)


__all__ = [name for name in dir() if not name.startswith("_")]
