"""Power allocation and link selection for multicell cooperative NOMA hybrid VLC/RF downlinks."""

__version__ = "0.1.0"

from .cell import CellSolution, solve_case_direct, solve_case_hybrid, solve_cell, solve_cells
from .channel import (
    Layout,
    NetworkScenario,
    PhysicalParams,
    ScenarioTemplate,
    generate_scenario,
    load_scenario,
    save_scenario,
)
from .optimizer import ConvergenceTrace, OptimizerConfig, fixed_power, golden_section, optimize
from .rates import CellCoefficients, PowerState, RateReport, compute_coefficients, evaluate, jain_index

__all__ = [
    "CellCoefficients",
    "CellSolution",
    "ConvergenceTrace",
    "Layout",
    "NetworkScenario",
    "OptimizerConfig",
    "PhysicalParams",
    "PowerState",
    "RateReport",
    "ScenarioTemplate",
    "compute_coefficients",
    "evaluate",
    "fixed_power",
    "generate_scenario",
    "golden_section",
    "jain_index",
    "load_scenario",
    "optimize",
    "save_scenario",
    "solve_case_direct",
    "solve_case_hybrid",
    "solve_cell",
    "solve_cells",
]
