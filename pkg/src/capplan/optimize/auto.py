"""Size-based engine selection behind the common solver interface.

The dense tableau engine wins on small LPs (no conversion or presolve
overhead, compiled pivot kernel); HiGHS wins once problems grow, and its
sparse factorization is the only sane choice for long-horizon dispatch or
extensive-form problems. The crossover threshold comes from the kernel
benchmark (see benchmarks/bench_kernels.py).
"""

from __future__ import annotations

from .highs import HighsSolver
from .simplex import SimplexSolver

DENSE_ROW_LIMIT = 240


class AutoSolver:
    """Dense tableau engine below the row threshold, HiGHS above."""

    def __init__(self, dense_row_limit: int = DENSE_ROW_LIMIT,
                 kernel: str | None = None):
        self.dense_row_limit = dense_row_limit
        self._dense = SimplexSolver(kernel=kernel)
        self._highs = HighsSolver()

    def solve_lp(self, lp, basis_hint=None):
        if lp.m <= self.dense_row_limit:
            return self._dense.solve_lp(lp, basis_hint=basis_hint)
        return self._highs.solve_lp(lp)

    def solve_milp(self, mip, gap_tol: float = 0.01,
                   time_limit: float | None = None):
        from .milp import branch_and_bound

        return branch_and_bound(mip, self, gap_tol=gap_tol,
                                time_limit=time_limit)
