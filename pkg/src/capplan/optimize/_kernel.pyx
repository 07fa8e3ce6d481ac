# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled bounded-variable simplex pivot loop.

Mirrors ``_kernel_py.simplex_iterate`` operation for operation. Compiled
with -ffp-contract=off so the multiply/subtract pairs in the update loops
round exactly like the numpy fallback; the two backends return bit-identical
tableaus and solutions.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, isfinite

BACKEND = "cython"

OPTIMAL = 0
UNBOUNDED = 1
ITER_LIMIT = 2


def simplex_iterate(double[:, ::1] tab, double[::1] xb,
                    cnp.int64_t[::1] basis, cnp.int64_t[::1] stat,
                    double[::1] ub, double[::1] d,
                    cnp.uint8_t[::1] allowed,
                    long max_iter, double tol_d, double tol_piv,
                    double degen_tol, long degen_limit, long bland):
    cdef Py_ssize_t m = tab.shape[0]
    cdef Py_ssize_t n_cols = tab.shape[1]
    cdef long iters = 0
    cdef long degen = 0
    cdef Py_ssize_t i, k, j, r, leaving
    cdef double best, v, t, a, cand, row_theta, span, theta, step
    cdef double piv, inv, f, fd, entering_from, rj
    cdef cnp.int64_t min_basis
    cdef bint hit_upper

    cdef cnp.ndarray[cnp.float64_t, ndim=1] colsnap_arr = np.empty(m, dtype=np.float64)
    cdef double[::1] colsnap = colsnap_arr

    while iters < max_iter:
        # --- pricing ---
        j = -1
        if not bland:
            best = -tol_d
            for k in range(n_cols):
                if stat[k] == 2 or allowed[k] == 0:
                    continue
                v = d[k] if stat[k] == 0 else -d[k]
                if v < best:
                    best = v
                    j = k
        else:
            for k in range(n_cols):
                if stat[k] == 2 or allowed[k] == 0:
                    continue
                v = d[k] if stat[k] == 0 else -d[k]
                if v < -tol_d:
                    j = k
                    break
        if j < 0:
            return OPTIMAL, iters, bland

        t = 1.0 if stat[j] == 0 else -1.0

        # --- ratio test ---
        row_theta = INFINITY
        r = -1
        min_basis = -1
        hit_upper = False
        for i in range(m):
            a = t * tab[i, j]
            if a > tol_piv:
                cand = xb[i] / a
            elif a < -tol_piv:
                if not isfinite(ub[basis[i]]):
                    continue
                cand = (ub[basis[i]] - xb[i]) / (-a)
            else:
                continue
            if cand < 0.0:
                cand = 0.0
            if cand < row_theta or (cand == row_theta and basis[i] < min_basis):
                row_theta = cand
                r = i
                min_basis = basis[i]
                hit_upper = a < -tol_piv

        span = ub[j]
        if span < row_theta:
            # bound flip
            theta = span
            step = t * theta
            for i in range(m):
                xb[i] = xb[i] - step * tab[i, j]
            stat[j] = 1 - stat[j]
            degen = degen + 1 if theta <= degen_tol else 0
        else:
            if r < 0 and not isfinite(row_theta):
                return UNBOUNDED, iters, bland
            theta = row_theta
            step = t * theta
            for i in range(m):
                colsnap[i] = tab[i, j]
            entering_from = 0.0 if stat[j] == 0 else ub[j]
            for i in range(m):
                xb[i] = xb[i] - step * colsnap[i]
            xb[r] = entering_from + step

            leaving = basis[r]
            stat[leaving] = 1 if hit_upper else 0

            piv = colsnap[r]
            inv = 1.0 / piv
            for k in range(n_cols):
                tab[r, k] = tab[r, k] * inv
            for i in range(m):
                if i == r:
                    continue
                f = colsnap[i]
                if f != 0.0:
                    for k in range(n_cols):
                        tab[i, k] = tab[i, k] - f * tab[r, k]
            rj = tab[r, j]
            for i in range(m):
                tab[i, j] = 0.0
            tab[r, j] = rj

            fd = d[j]
            for k in range(n_cols):
                d[k] = d[k] - fd * tab[r, k]
            d[j] = 0.0

            basis[r] = j
            stat[j] = 2
            degen = degen + 1 if theta <= degen_tol else 0

        if degen > degen_limit:
            bland = 1
        iters += 1

    return ITER_LIMIT, iters, bland
