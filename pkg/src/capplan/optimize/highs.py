"""HiGHS-backed solver (via scipy) behind the same interface.

Used for the extensive-form and progressive-hedging LPs, whose size is far
beyond a dense tableau. Accepts the same LinearProgram/MixedIntegerProgram
containers; basis hints are ignored.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy import optimize as sopt

from ..errors import SolverError
from .lp import EQ, GE, LinearProgram, MixedIntegerProgram, SolveResult, SolveStatus

_STATUS_MAP = {
    0: SolveStatus.OPTIMAL,
    1: SolveStatus.ITERATION_LIMIT,
    2: SolveStatus.INFEASIBLE,
    3: SolveStatus.UNBOUNDED,
}


def _split(lp: LinearProgram):
    a = lp.a.tocsr()
    le = lp.senses != EQ
    eq = ~le
    sign = np.where(lp.senses == GE, -1.0, 1.0)
    a_ub = sp.diags(sign[le]) @ a[le] if le.any() else None
    b_ub = (sign[le] * lp.b[le]) if le.any() else None
    a_eq = a[eq] if eq.any() else None
    b_eq = lp.b[eq] if eq.any() else None
    bounds = np.column_stack([lp.lb, lp.ub])
    return a_ub, b_ub, a_eq, b_eq, bounds, le, sign


class HighsSolver:
    def __init__(self, time_limit: float | None = None):
        self._time_limit = time_limit

    def solve_lp(self, lp: LinearProgram, basis_hint=None) -> SolveResult:
        a_ub, b_ub, a_eq, b_eq, bounds, le, sign = _split(lp)
        options = {"presolve": True}
        if self._time_limit:
            options["time_limit"] = self._time_limit
        res = sopt.linprog(lp.c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq,
                           bounds=bounds, method="highs", options=options)
        status = _STATUS_MAP.get(res.status)
        if status is None:
            raise SolverError(f"linprog failed: {res.message}")
        if status is not SolveStatus.OPTIMAL:
            return SolveResult(status)
        duals = np.zeros(lp.m)
        if res.ineqlin is not None and le.any():
            duals[le] = sign[le] * res.ineqlin.marginals
        if res.eqlin is not None and (~le).any():
            duals[~le] = res.eqlin.marginals
        x = np.clip(res.x, lp.lb, lp.ub)
        return SolveResult(SolveStatus.OPTIMAL, objective=float(lp.c @ x), x=x,
                           duals=duals, iterations=int(getattr(res, "nit", 0)))

    def solve_milp(self, mip: MixedIntegerProgram, gap_tol: float = 0.01,
                   time_limit: float | None = None) -> SolveResult:
        lp = mip.lp
        a = lp.a.tocsr()
        lo = np.where(lp.senses == LE, -np.inf, lp.b)
        hi = np.where(lp.senses == GE, np.inf, lp.b)
        cons = sopt.LinearConstraint(a, lo, hi)
        integrality = np.zeros(lp.n)
        integrality[mip.binary] = 1
        lb = lp.lb.copy()
        ub = lp.ub.copy()
        lb[mip.binary] = np.maximum(lb[mip.binary], 0.0)
        ub[mip.binary] = np.minimum(ub[mip.binary], 1.0)
        options = {"mip_rel_gap": gap_tol}
        tl = time_limit if time_limit is not None else self._time_limit
        if tl:
            options["time_limit"] = tl
        res = sopt.milp(lp.c, constraints=cons, integrality=integrality,
                        bounds=sopt.Bounds(lb, ub), options=options)
        if res.status == 0:
            x = np.clip(res.x, lb, ub)
            gap = float(res.mip_gap) if res.mip_gap is not None else None
            return SolveResult(SolveStatus.OPTIMAL, objective=float(lp.c @ x),
                               x=x, gap=gap)
        if res.status == 2:
            return SolveResult(SolveStatus.INFEASIBLE)
        if res.status == 3:
            return SolveResult(SolveStatus.UNBOUNDED)
        if res.status == 1 and res.x is not None:
            x = np.clip(res.x, lb, ub)
            gap = float(res.mip_gap) if res.mip_gap is not None else None
            return SolveResult(SolveStatus.ITERATION_LIMIT,
                               objective=float(lp.c @ x), x=x, gap=gap)
        return SolveResult(SolveStatus.ITERATION_LIMIT)
