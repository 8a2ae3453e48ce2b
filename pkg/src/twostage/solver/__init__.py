from .brute_force import brute_force_oracle, simple_paths
from .equilibrium import (
    EquilibriumResult,
    baseline_alternation,
    fixed_point_residual,
    primal_value,
    solve_fixed_demand,
    solve_two_stage,
)
from .gap import ball_box_argmin, duality_gap
from .oracle import FixedDemandOracle, SolverConfig, TwoStageOracle
from .umst import ConvergenceHistory, OracleOutput, UMSTResult, umst_minimize

__all__ = [
    "ConvergenceHistory",
    "EquilibriumResult",
    "FixedDemandOracle",
    "OracleOutput",
    "SolverConfig",
    "TwoStageOracle",
    "UMSTResult",
    "ball_box_argmin",
    "baseline_alternation",
    "brute_force_oracle",
    "duality_gap",
    "fixed_point_residual",
    "primal_value",
    "simple_paths",
    "solve_fixed_demand",
    "solve_two_stage",
    "umst_minimize",
]
