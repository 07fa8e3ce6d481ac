"""Pure-numpy bounded-variable simplex pivot loop.

Fallback for the compiled kernel in ``_kernel.pyx``. Both implementations
perform exactly the same elementwise IEEE operations in the same order (no
BLAS reductions inside the loop, no fused multiply-add), so their results
are bit-identical; ``tests/test_kernel_parity.py`` pins that.

Status codes: 0 = priced out (optimal for the current costs),
1 = unbounded direction, 2 = iteration limit.
"""

import numpy as np

BACKEND = "numpy"

OPTIMAL, UNBOUNDED, ITER_LIMIT = 0, 1, 2


def simplex_iterate(tab, xb, basis, stat, ub, d, allowed,
                    max_iter, tol_d, tol_piv, degen_tol, degen_limit, bland):
    """Run pivots in place until priced out / unbounded / iteration limit.

    tab     (m, N) current tableau, C-contiguous, rows of B^-1 A
    xb      (m,)   values of the basic variables
    basis   (m,)   column index basic in each row
    stat    (N,)   0 nonbasic-at-lower, 1 nonbasic-at-upper, 2 basic
    ub      (N,)   upper bounds (lower bounds are all zero), +inf allowed
    d       (N,)   reduced costs for the current basis
    allowed (N,)   uint8 mask of columns eligible for pricing
    bland   int    start in Bland mode if nonzero

    Returns (status, iterations, bland_flag).
    """
    m = tab.shape[0]
    iters = 0
    degen = 0
    eligible_base = (allowed != 0)

    while iters < max_iter:
        nonbasic = eligible_base & (stat != 2)
        viol = np.where(stat == 0, d, -d)
        viol = np.where(nonbasic, viol, np.inf)
        if not bland:
            j = int(np.argmin(viol)) if viol.size else -1
            if j < 0 or viol[j] >= -tol_d:
                return OPTIMAL, iters, bland
        else:
            idx = np.flatnonzero(viol < -tol_d)
            if idx.size == 0:
                return OPTIMAL, iters, bland
            j = int(idx[0])

        t = 1.0 if stat[j] == 0 else -1.0
        col = t * tab[:, j]

        # ratio test against basic-variable bounds
        cand = np.full(m, np.inf)
        pos = col > tol_piv
        if pos.any():
            cand[pos] = xb[pos] / col[pos]
        ub_basic = ub[basis]
        neg = (col < -tol_piv) & (ub_basic < np.inf)
        if neg.any():
            cand[neg] = (ub_basic[neg] - xb[neg]) / (-col[neg])
        np.maximum(cand, 0.0, out=cand)

        if m:
            row_theta = cand.min()
        else:
            row_theta = np.inf
        span = ub[j]

        if span < row_theta:
            # bound flip: the entering variable traverses its own interval
            theta = span
            xb -= (t * theta) * tab[:, j]
            stat[j] = 1 - stat[j]
            degen = degen + 1 if theta <= degen_tol else 0
        else:
            if not np.isfinite(row_theta):
                return UNBOUNDED, iters, bland
            ties = np.flatnonzero(cand == row_theta)
            r = int(ties[np.argmin(basis[ties])])
            theta = row_theta
            hit_upper = col[r] < -tol_piv

            colsnap = tab[:, j].copy()
            entering_from = 0.0 if stat[j] == 0 else ub[j]
            xb -= (t * theta) * colsnap
            xb[r] = entering_from + t * theta

            leaving = int(basis[r])
            stat[leaving] = 1 if hit_upper else 0

            piv = colsnap[r]
            inv = 1.0 / piv
            tab[r, :] *= inv
            elim = colsnap.copy()
            elim[r] = 0.0
            tab -= elim[:, None] * tab[r, :][None, :]
            rj = tab[r, j]
            tab[:, j] = 0.0
            tab[r, j] = rj

            fd = d[j]
            d -= fd * tab[r, :]
            d[j] = 0.0

            basis[r] = j
            stat[j] = 2
            degen = degen + 1 if theta <= degen_tol else 0

        if degen > degen_limit:
            bland = 1
        iters += 1

    return ITER_LIMIT, iters, bland
