"""Fictitious play for mean-field games of optimal stopping and of
regular control with absorption, via finite occupation-measure linear
programs.

Quick start::

    from mfg_lpfp import builtin_model, build_grid, lpfp_run

    model = builtin_model("os_example")
    grid = build_grid(1.0, 50, -11.0, 11.0, 80)
    trace = lpfp_run(grid, model, n_iters=100, method="dp")
    print(trace.rows[-1].eps_raw)
"""

from ._kernels import BACKEND as kernel_backend
from .dp import BestResponse, best_response, best_response_control, best_response_stopping, random_policy_mean_field
from .errors import CflError, ConfigError, GridError, LpError, MfgLpfpError, ModelError, SolverError
from .fictitious_play import (
    IterationRecord,
    RunTrace,
    exploitability,
    extract_markov_control,
    initial_guess,
    loglog_slope,
    lpfp_run,
)
from .grid import CflReport, GridSpec, build_grid, cfl_max_dt, grid_from_dict, validate_cfl
from .lp import (
    LinearProgram,
    LPSolution,
    build_lp_control,
    build_lp_stopping,
    export_mps,
    import_mps,
    solution_mean_field,
    solve_lp,
)
from .measures import CONTROL, STOPPING, MeanField, StateSlice
from .metrics import DiscreteSubprob, W1Result, d_m_metric, w1_exit, w1_prime, weighted_tv
from .models import (
    DiscreteInitialLaw,
    ModelSpec,
    RewardTables,
    builtin_model,
    builtin_names,
    discrete_reward,
    discretize_initial,
    precompute_reward_tables,
)

__version__ = "0.1.0"

__all__ = [
    "BestResponse",
    "CflError",
    "CflReport",
    "ConfigError",
    "CONTROL",
    "DiscreteInitialLaw",
    "DiscreteSubprob",
    "GridError",
    "GridSpec",
    "IterationRecord",
    "LinearProgram",
    "LpError",
    "LPSolution",
    "MeanField",
    "MfgLpfpError",
    "ModelError",
    "ModelSpec",
    "RewardTables",
    "RunTrace",
    "SolverError",
    "StateSlice",
    "STOPPING",
    "W1Result",
    "best_response",
    "best_response_control",
    "best_response_stopping",
    "build_grid",
    "build_lp_control",
    "build_lp_stopping",
    "builtin_model",
    "builtin_names",
    "cfl_max_dt",
    "d_m_metric",
    "discrete_reward",
    "discretize_initial",
    "exploitability",
    "export_mps",
    "extract_markov_control",
    "grid_from_dict",
    "import_mps",
    "initial_guess",
    "kernel_backend",
    "loglog_slope",
    "lpfp_run",
    "precompute_reward_tables",
    "random_policy_mean_field",
    "solution_mean_field",
    "solve_lp",
    "validate_cfl",
    "w1_exit",
    "w1_prime",
    "weighted_tv",
]
