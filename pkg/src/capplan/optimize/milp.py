"""Branch and bound over binary variables.

Best-bound node selection, branching on the most fractional binary (ties to
the lowest index), deterministic for a fixed input. Relaxations are solved
by the caller-supplied LP engine; each node is solved once, when created.
"""

from __future__ import annotations

import heapq
import time

import numpy as np

from ..errors import SolverError
from .lp import LinearProgram, MixedIntegerProgram, SolveResult, SolveStatus

_INT_TOL = 1e-6


def branch_and_bound(mip: MixedIntegerProgram, lp_solver, gap_tol: float = 0.01,
                     time_limit: float | None = None,
                     node_limit: int = 200_000) -> SolveResult:
    lp = mip.lp
    bins = mip.binary
    lb = lp.lb.copy()
    ub = lp.ub.copy()
    lb[bins] = np.maximum(lb[bins], 0.0)
    ub[bins] = np.minimum(ub[bins], 1.0)

    start = time.perf_counter()
    deadline = start + time_limit if time_limit else None

    def relax(lo, uo):
        sub = LinearProgram(c=lp.c, a=lp.a, senses=lp.senses, b=lp.b, lb=lo, ub=uo)
        res = lp_solver.solve_lp(sub)
        if res.status not in (SolveStatus.OPTIMAL, SolveStatus.INFEASIBLE,
                              SolveStatus.UNBOUNDED):
            raise SolverError("node relaxation did not solve to optimality")
        return res

    root = relax(lb, ub)
    if root.status is not SolveStatus.OPTIMAL:
        return SolveResult(root.status)

    def gap_of(obj, bound):
        if not np.isfinite(obj):
            return np.inf
        return (obj - bound) / max(abs(obj), 1e-12)

    incumbent = None
    inc_obj = np.inf
    trace = []
    seq = 0
    heap = [(root.objective, seq, lb, ub, root)]
    nodes = 0
    best_bound = root.objective
    limit_hit = False

    while heap:
        bound, _, lo, uo, res = heapq.heappop(heap)
        best_bound = bound  # best-bound order: this is the global lower bound
        if incumbent is not None and gap_of(inc_obj, bound) <= gap_tol:
            break
        if bound > inc_obj - 1e-9 * max(1.0, abs(inc_obj)):
            continue
        nodes += 1
        if nodes > node_limit or (deadline and time.perf_counter() > deadline):
            limit_hit = True
            break

        x = res.x
        fracs = np.abs(x[bins] - np.round(x[bins])) if bins.size else np.zeros(0)
        if fracs.size == 0 or fracs.max(initial=0.0) <= _INT_TOL:
            if res.objective < inc_obj:
                incumbent = res
                inc_obj = res.objective
                trace.append(inc_obj)
            continue

        # branch on the most fractional binary, ties to the lowest index
        score = np.abs(x[bins] - 0.5)
        cand = np.flatnonzero(fracs > _INT_TOL)
        j = int(bins[cand[np.argmin(score[cand])]])

        for fix in (0.0, 1.0):
            lo_c, uo_c = lo.copy(), uo.copy()
            if fix == 0.0:
                uo_c[j] = 0.0
            else:
                lo_c[j] = 1.0
            child = relax(lo_c, uo_c)
            if child.status is not SolveStatus.OPTIMAL:
                continue  # infeasible/unbounded restriction: prune
            if child.objective > inc_obj - 1e-9 * max(1.0, abs(inc_obj)):
                continue
            seq += 1
            heapq.heappush(heap, (child.objective, seq, lo_c, uo_c, child))

    if not heap and not limit_hit and incumbent is not None:
        best_bound = inc_obj

    if incumbent is None:
        status = SolveStatus.ITERATION_LIMIT if limit_hit else SolveStatus.INFEASIBLE
        return SolveResult(status, iterations=nodes)

    achieved = max(gap_of(inc_obj, best_bound), 0.0)
    status = SolveStatus.OPTIMAL if achieved <= gap_tol else SolveStatus.ITERATION_LIMIT
    return SolveResult(status, objective=inc_obj, x=incumbent.x, gap=achieved,
                       iterations=nodes, incumbent_trace=trace)
