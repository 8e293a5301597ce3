"""
Monte Carlo study of size and power.

- scenarios: the design grid, published reference values and data generator
- pool: replicate worker threads
- runner: run_scenario, grid_study and calibrate_effect
"""

from .pool import ReplicatePool
from .runner import (
    CalibrationResult,
    GridReport,
    ProcedureResult,
    SimResult,
    calibrate_effect,
    grid_study,
    load_grid,
    run_scenario,
)
from .scenarios import (
    GRID_ROWS,
    PROCEDURES,
    REFERENCE_RATES,
    Distribution,
    Hypothesis,
    SimScenario,
    generate_sample,
    replicate_rng,
    scenario_from_row,
    select_rows,
)

__all__ = [
    "ReplicatePool",
    "CalibrationResult",
    "ProcedureResult",
    "SimResult",
    "GridReport",
    "calibrate_effect",
    "load_grid",
    "run_scenario",
    "grid_study",
    "REFERENCE_RATES",
    "PROCEDURES",
    "GRID_ROWS",
    "Distribution",
    "Hypothesis",
    "SimScenario",
    "generate_sample",
    "replicate_rng",
    "scenario_from_row",
    "select_rows",
]
