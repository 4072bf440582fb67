"""
Configuration settings for the train dispatching solver
"""

import os

from dotenv import load_dotenv

load_dotenv()

# Application settings
APP_TITLE = "trainpaths"
APP_VERSION = "1.0"
APP_DESCRIPTION = "Path-based column generation for conflict-free train dispatching"

# File format versions
NETWORK_FORMAT_VERSION = 1
SCENARIO_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1
PROFILE_CACHE_VERSION = 1

# Solver tolerances (shared by every backend)
FEASIBILITY_TOL = 1e-7
DUALITY_TOL = 1e-6
INTEGRALITY_TOL = 1e-6
GAP_TOL = 1e-6
PIVOT_TOL = 1e-9
BIG_M_DIAGNOSTIC_FRACTION = 1e-3
SIMPLEX_MAX_ITERATIONS = 50_000
BLAND_AFTER_DEGENERATE_PIVOTS = 50

# Blocking time components in seconds
BLOCKING_TIME = {
    "setup_margin": 15,
    "release_margin": 15,
    "clear_time": 10,
}

PROFILE_DEFAULTS = {
    "speed_levels": (1.0, 0.85, 0.7),
    "detour_factor": 2.5,
    "k": None,
    "max_inserted_halts": 1,
}

CG_DEFAULTS = {
    "gap_target": 0.0,
    "time_limit": 3600.0,
    "pricing_time_limit": 600.0,
    "threads": 1,
    "seed": 0,
    "negative_rc_tol": 1e-6,
    "fcfs_penalty": 1e9,
    "tailing_off_window": 5,
    "tailing_off_rel": 1e-3,
    "reconcile_every": 10,
    "epsilon": 1,
    "clip_early_arrivals": True,
    "skip_inactive_cliques": False,
    "solver_backend": "bundled",
}

DISTURBANCE_DEFAULTS = {
    "q": 0.8,
    "rate": 1.0 / 300.0,
    "horizon": 3600,
    "replications": 50,
}

# splitmix64 mixing constants used for replication sub-seeds
SPLITMIX_CONSTANTS = {
    "gamma": 0x9E3779B97F4A7C15,
    "mix1": 0xBF58476D1CE4E5B9,
    "mix2": 0x94D049BB133111EB,
    "mask": 0xFFFFFFFFFFFFFFFF,
}

# Report layout
REPORT_COLUMNS = [
    "replication", "d_start", "d_end", "delay_quotient", "cpu_s", "gap",
    "integer", "n_cliques", "n_iterations", "n_paths",
]

TRACE_COLUMNS = [
    "iteration", "z_rRMP", "lb", "gap", "n_columns", "n_cliques",
    "t_master_ms", "t_pricing_ms", "t_clique_ms", "t_total_ms",
]

TIMING_COLUMNS = ["cpu_s", "t_master_ms", "t_pricing_ms", "t_clique_ms", "t_total_ms"]

SWEEP_METRICS = {
    "cpu_mean": "Average computation time (s)",
    "gap_mean": "Average optimality gap",
    "integer_pct": "Integer solutions after termination (%)",
    "n_cliques_mean": "Average number of maximal cliques",
    "n_paths_mean": "Average number of generated train paths",
    "delay_quotient_mean": "Average delay quotient",
}

CHART_COLORS = {
    "total": "#1f77b4",
    "clique": "#ff7f0e",
    "pricing": "#2ca02c",
    "master": "#9467bd",
    "disturbance": "#d62728",
}

# Environment overrides
ENV_PREFIX = "TRAINPATHS_"
THREADS = int(os.getenv(f"{ENV_PREFIX}THREADS", CG_DEFAULTS["threads"]))
SOLVER_BACKEND = os.getenv(f"{ENV_PREFIX}SOLVER_BACKEND", CG_DEFAULTS["solver_backend"])
LOG_LEVEL = os.getenv(f"{ENV_PREFIX}LOG_LEVEL", "WARNING")
PROFILE_CACHE_DIR = os.getenv(f"{ENV_PREFIX}PROFILE_CACHE")
