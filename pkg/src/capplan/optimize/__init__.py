"""LP/MILP solver contract and reference implementations."""

from .auto import AutoSolver
from .backend import KERNEL_BACKEND
from .export import write_lp
from .highs import HighsSolver
from .lp import (EQ, GE, LE, LinearProgram, LpBuilder, MixedIntegerProgram,
                 SolveResult, SolveStatus)
from .milp import branch_and_bound
from .simplex import SimplexSolver, solve_lp

__all__ = [
    "EQ", "GE", "LE", "KERNEL_BACKEND", "AutoSolver",
    "LinearProgram", "LpBuilder", "MixedIntegerProgram",
    "SolveResult", "SolveStatus",
    "SimplexSolver", "HighsSolver", "solve_lp", "branch_and_bound", "write_lp",
]


def solve_milp(mip, gap_tol: float = 0.01, time_limit: float | None = None):
    """Branch and bound with the default simplex engine."""
    return SimplexSolver().solve_milp(mip, gap_tol=gap_tol, time_limit=time_limit)
