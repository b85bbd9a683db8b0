"""Scenario configuration, experiment runners, reports and the CLI."""

from .config import ScenarioConfig, config_from_dict, load_config
from .runners import (
    Table,
    comm_cost,
    mc_end_to_end,
    run_allocate,
    run_allocation_surface,
    run_alpha_sweep,
    run_comm_cost,
    run_largescale_sweep,
    run_op_curve,
    run_power_sweep,
    run_smallscale_sweep,
    simulate_scores,
)

__all__ = [
    "ScenarioConfig",
    "config_from_dict",
    "load_config",
    "Table",
    "comm_cost",
    "mc_end_to_end",
    "run_allocate",
    "run_allocation_surface",
    "run_alpha_sweep",
    "run_comm_cost",
    "run_largescale_sweep",
    "run_op_curve",
    "run_power_sweep",
    "run_smallscale_sweep",
    "simulate_scores",
]
