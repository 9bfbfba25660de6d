"""Self-contained dense LP/MILP engine used by the analysis modules."""

from .bnb import AbortSearch, MilpConfig, solve_milp
from .problem import LinearConstraint, LpBuilder, LpProblem, MilpProblem, Solution
from .simplex import lp_feasible, solve_lp

__all__ = [
    "AbortSearch",
    "MilpConfig",
    "solve_milp",
    "LinearConstraint",
    "LpBuilder",
    "LpProblem",
    "MilpProblem",
    "Solution",
    "lp_feasible",
    "solve_lp",
]
