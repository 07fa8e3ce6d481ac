"""Bounded-variable primal simplex on a dense tableau.

Two-phase method with an optional starting-basis hint. The pivot loop lives
in a swappable kernel (compiled or numpy); this driver owns canonicalization,
phase transitions, and an exact verify step that recomputes the basic
solution and reduced costs from the original data before trusting a kernel's
"priced out" claim, refreshing the tableau when drift is detected.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lu_factor, lu_solve

from ..errors import SolverError
from . import backend
from .lp import EQ, GE, LinearProgram, SolveResult, SolveStatus

_DENSE_LIMIT = 60_000_000  # tableau entries; beyond this use HighsSolver

K_OPTIMAL, K_UNBOUNDED, K_ITER_LIMIT = 0, 1, 2


class _FeasibilityLost(Exception):
    """Tableau drift produced an infeasible basis; caller restarts with Bland."""


class SimplexSolver:
    """Reference LP engine for desk-scale problems.

    Incoming problems are equilibrated (power-of-two row/column scaling, so
    the transformation is exact) before the two-phase method runs; solutions
    and duals are mapped back and the objective is recomputed from the
    original data.

    Parameters
    ----------
    kernel : 'cython' | 'numpy' | None
        Pivot-loop backend; None picks the compiled one when available.
    max_iter : explicit pivot cap; default scales with problem size.
    """

    def __init__(self, kernel: str | None = None, max_iter: int | None = None):
        self._kernel = backend.get_kernel(kernel)
        self._max_iter = max_iter

    @property
    def kernel_name(self) -> str:
        return self._kernel.BACKEND

    def solve_lp(self, lp: LinearProgram, basis_hint=None) -> SolveResult:
        scaled, col_s, row_s, obj_s = _equilibrate(lp)
        try:
            res = _solve(scaled, self._kernel, basis_hint, self._max_iter,
                         force_bland=False)
        except _FeasibilityLost:
            try:
                res = _solve(scaled, self._kernel, None, self._max_iter,
                             force_bland=True)
            except _FeasibilityLost as exc:
                raise SolverError("simplex lost feasibility beyond repair") from exc
        return _unscale(res, lp, col_s, row_s, obj_s)

    def solve_milp(self, mip, gap_tol: float = 0.01, time_limit: float | None = None):
        from .milp import branch_and_bound

        return branch_and_bound(mip, self, gap_tol=gap_tol, time_limit=time_limit)


def solve_lp(lp: LinearProgram, basis_hint=None) -> SolveResult:
    """Solve with the default kernel; module-level convenience."""
    return SimplexSolver().solve_lp(lp, basis_hint=basis_hint)


def _pow2(values, floor=1e-12):
    """Nearest power of two to each positive value; 1 elsewhere."""
    out = np.ones_like(values)
    ok = values > floor
    out[ok] = np.exp2(np.rint(np.log2(values[ok])))
    return out


def _equilibrate(lp: LinearProgram):
    """Two-pass geometric row/column scaling with exact power-of-two factors,
    plus a global objective normalization. Returns the scaled LP and the
    factors needed to map solutions back."""
    a = lp.a
    m, n = a.shape
    absa = sp.csr_matrix((np.abs(a.data), a.indices, a.indptr), shape=a.shape) \
        if a.nnz else a
    row_s = np.ones(m)
    col_s = np.ones(n)
    for _ in range(2):
        if a.nnz:
            rmax = absa.max(axis=1).toarray().ravel() * row_s
            row_s /= np.maximum(_pow2(rmax), 1e-300)
            scaled = sp.diags(row_s) @ absa
            cmax = scaled.max(axis=0).toarray().ravel() * col_s
            col_s /= np.maximum(_pow2(cmax), 1e-300)
    c_scaled = lp.c * col_s
    cmax = float(np.max(np.abs(c_scaled))) if n else 0.0
    obj_s = float(_pow2(np.array([cmax]))[0]) if cmax > 0 else 1.0
    if m == 0 and obj_s == 1.0 and np.all(col_s == 1.0):
        return lp, col_s, row_s, obj_s
    with np.errstate(invalid="ignore"):
        scaled = LinearProgram(
            c=c_scaled / obj_s,
            a=sp.diags(row_s) @ a @ sp.diags(col_s),
            senses=lp.senses,
            b=lp.b * row_s,
            lb=lp.lb / col_s,
            ub=lp.ub / col_s,
        )
    return scaled, col_s, row_s, obj_s


def _unscale(res: SolveResult, lp: LinearProgram, col_s, row_s, obj_s):
    if res.x is not None:
        x = res.x * col_s
        np.clip(x, lp.lb, lp.ub, out=x)
        res.x = x
        res.objective = float(lp.c @ x)
    if res.duals is not None:
        res.duals = res.duals * row_s * obj_s
    return res


def _solve(lp, kern, basis_hint, max_iter_opt, force_bland):
    m, n = lp.m, lp.n

    n_le = int(np.sum(lp.senses != EQ))
    if (m + 1) * (n + n_le + m + 1) > _DENSE_LIMIT:
        raise SolverError(
            f"LP too large for the dense tableau engine ({m} rows, {n} cols); "
            "use HighsSolver"
        )

    # --- canonicalize: shift lb to 0, flip >= rows, append slack columns ---
    a0 = lp.a.toarray()
    ubs = lp.ub - lp.lb
    rhs = lp.b - a0 @ lp.lb
    flip = np.ones(m)
    ge_rows = lp.senses == GE
    a0[ge_rows] *= -1.0
    rhs[ge_rows] *= -1.0
    flip[ge_rows] = -1.0

    slack_rows = np.flatnonzero(lp.senses != EQ)
    n_slack = slack_rows.size
    n1 = n + n_slack
    slack_col_of_row = np.full(m, -1, dtype=np.int64)
    a_can = np.zeros((m, n1))
    a_can[:, :n] = a0
    for k, r in enumerate(slack_rows):
        a_can[r, n + k] = 1.0
        slack_col_of_row[r] = n + k
    ub_can = np.concatenate([ubs, np.full(n_slack, np.inf)])

    scale_c = max(1.0, float(np.max(np.abs(lp.c))) if n else 1.0)
    scale_a = max(1.0, float(np.max(np.abs(a_can))) if a_can.size else 1.0)
    scale_b = max(1.0, float(np.max(np.abs(rhs))) if m else 1.0)
    tol = dict(
        d=1e-9 * scale_c,
        piv=1e-9 * scale_a,
        x=1e-7 * scale_b,
        opt=1e-7 * scale_c,
        degen=1e-10 * scale_b,
    )
    degen_limit = 0 if force_bland else 100 + m

    state = None
    if basis_hint is not None:
        state = _state_from_hint(a_can, rhs, ub_can, basis_hint,
                                 slack_col_of_row, n1, m, tol["x"])

    total_iters = 0
    if state is None:
        a_can, ub_can, state, art_cols = _artificial_start(
            a_can, rhs, ub_can, flip, slack_col_of_row, n1, m)
    else:
        art_cols = np.empty(0, dtype=np.int64)

    n_total = a_can.shape[1]
    c2 = np.concatenate([lp.c, np.zeros(n_total - n)])
    tab, xb, basis, stat = state
    allowed = np.ones(n_total, dtype=np.uint8)
    allowed[ub_can == 0.0] = 0  # fixed variables never priced
    max_iter = max_iter_opt if max_iter_opt else 2000 + 40 * m + 2 * n_total

    if art_cols.size:
        c1 = np.zeros(n_total)
        c1[art_cols] = 1.0
        d1 = c1 - a_can.T @ c1[basis]
        d1[basis] = 0.0
        code, iters, _ = kern.simplex_iterate(
            tab, xb, basis, stat, ub_can, d1, allowed,
            max_iter, tol["d"], tol["piv"], tol["degen"], degen_limit,
            1 if force_bland else 0)
        total_iters += iters
        if code == K_ITER_LIMIT:
            return SolveResult(SolveStatus.ITERATION_LIMIT, iterations=total_iters)
        if code == K_UNBOUNDED:
            raise SolverError("phase-1 problem reported unbounded")
        art_basic = np.isin(basis, art_cols)
        phase1_obj = float(np.sum(np.maximum(xb[art_basic], 0.0)))
        if phase1_obj > 1e-7 * scale_b:
            return SolveResult(SolveStatus.INFEASIBLE, iterations=total_iters)
        allowed[art_cols] = 0
        ub_can[art_cols] = 0.0

    # --- phase 2 with exact verification ---
    bland = 1 if force_bland else 0
    need_refresh = False
    for _ in range(5):
        try:
            with np.errstate(all="ignore"):
                lu = lu_factor(a_can[:, basis], check_finite=False)
                xb_exact, d_exact, pi = _recompute(a_can, rhs, ub_can, c2,
                                                   basis, stat, lu)
        except (np.linalg.LinAlgError, ValueError):
            raise _FeasibilityLost
        if not np.all(np.isfinite(xb_exact)) or not np.all(np.isfinite(d_exact)):
            raise _FeasibilityLost
        if not _primal_feasible(xb_exact, ub_can[basis], tol["x"]):
            raise _FeasibilityLost
        nonbasic_ok = allowed != 0
        viol_lo = (stat == 0) & nonbasic_ok & (d_exact < -tol["opt"])
        viol_hi = (stat == 1) & nonbasic_ok & (d_exact > tol["opt"])
        if not viol_lo.any() and not viol_hi.any():
            return _finish(lp, basis, stat, xb_exact, ub_can, pi, flip,
                           total_iters, n_total)
        if need_refresh:
            tab[:, :] = lu_solve(lu, a_can, check_finite=False)
        xb[:] = xb_exact
        d = d_exact
        d[basis] = 0.0
        code, iters, bland = kern.simplex_iterate(
            tab, xb, basis, stat, ub_can, d, allowed,
            max_iter, tol["d"], tol["piv"], tol["degen"], degen_limit, bland)
        total_iters += iters
        if code == K_ITER_LIMIT:
            return SolveResult(SolveStatus.ITERATION_LIMIT, iterations=total_iters)
        if code == K_UNBOUNDED:
            return SolveResult(SolveStatus.UNBOUNDED, iterations=total_iters)
        need_refresh = True

    raise SolverError("simplex failed to verify optimality after refreshes")


def _primal_feasible(xb, ub_b, tol_x):
    if xb.size == 0:
        return True
    if xb.min() < -tol_x:
        return False
    fin = np.isfinite(ub_b)
    return not np.any(xb[fin] > ub_b[fin] + tol_x)


def _artificial_start(a_can, rhs, ub_can, flip, slack_col_of_row, n1, m):
    """Slack basis where feasible at the shifted origin, artificials elsewhere."""
    basis = np.empty(m, dtype=np.int64)
    art_rows = []
    for i in range(m):
        s = slack_col_of_row[i]
        if s >= 0 and rhs[i] >= 0.0:
            basis[i] = s
        else:
            art_rows.append(i)
    n_art = len(art_rows)
    if n_art:
        art_rows = np.array(art_rows, dtype=np.int64)
        neg = art_rows[rhs[art_rows] < 0.0]
        a_can[neg] *= -1.0
        rhs[neg] *= -1.0
        flip[neg] *= -1.0
        block = np.zeros((m, n_art))
        block[art_rows, np.arange(n_art)] = 1.0
        a_can = np.hstack([a_can, block])
        ub_can = np.concatenate([ub_can, np.full(n_art, np.inf)])
        basis[art_rows] = n1 + np.arange(n_art)
        art_cols = n1 + np.arange(n_art)
    else:
        art_cols = np.empty(0, dtype=np.int64)

    # initial basis matrix is the identity by construction
    tab = np.ascontiguousarray(a_can.copy())
    xb = rhs.copy()
    stat = np.zeros(a_can.shape[1], dtype=np.int64)
    stat[basis] = 2
    return a_can, ub_can, (tab, xb, basis, stat), art_cols


def _state_from_hint(a_can, rhs, ub_can, basis_hint, slack_col_of_row, n1, m, tol_x):
    """Validate a caller-provided basis (-1 entries mean 'this row's slack')."""
    hint = np.asarray(basis_hint, dtype=np.int64)
    if hint.shape != (m,):
        return None
    basis = hint.copy()
    use_slack = basis == -1
    if use_slack.any():
        scols = slack_col_of_row[use_slack]
        if np.any(scols < 0):
            return None
        basis[use_slack] = scols
    if basis.min(initial=0) < 0 or basis.max(initial=-1) >= n1:
        return None
    if np.unique(basis).size != m:
        return None
    stat = np.zeros(n1, dtype=np.int64)
    stat[basis] = 2
    try:
        with np.errstate(all="ignore"):
            lu = lu_factor(a_can[:, basis], check_finite=False)
            xb = lu_solve(lu, rhs, check_finite=False)
            tab = lu_solve(lu, a_can, check_finite=False)
    except (np.linalg.LinAlgError, ValueError):
        return None
    if not np.all(np.isfinite(tab)):
        return None
    if not (np.all(np.isfinite(xb)) and _primal_feasible(xb, ub_can[basis], tol_x)):
        return None
    return np.ascontiguousarray(tab), xb, basis, stat


def _recompute(a_can, rhs, ub_can, c2, basis, stat, lu):
    """Exact basic solution, duals, reduced costs from original data."""
    x_nb = np.zeros(a_can.shape[1])
    at_upper = stat == 1
    x_nb[at_upper] = ub_can[at_upper]
    x_nb[basis] = 0.0
    rhs_eff = rhs - a_can @ x_nb
    xb_exact = lu_solve(lu, rhs_eff, check_finite=False)
    pi = lu_solve(lu, c2[basis], trans=1, check_finite=False)
    d_exact = c2 - a_can.T @ pi
    return xb_exact, d_exact, pi


def _finish(lp, basis, stat, xb_exact, ub_can, pi, flip, iters, n_total):
    n = lp.n
    xfull = np.zeros(n_total)
    at_upper = stat == 1
    xfull[at_upper] = ub_can[at_upper]
    xfull[basis] = xb_exact
    x = lp.lb + xfull[:n]
    # snap to bounds within tolerance so downstream invariant checks are exact
    np.clip(x, lp.lb, lp.ub, out=x)
    objective = float(lp.c @ x)
    duals = flip * pi
    return SolveResult(SolveStatus.OPTIMAL, objective=objective, x=x,
                       duals=duals, iterations=iters)
