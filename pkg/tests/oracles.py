"""Independent reference implementations used only by the test suite.

Deliberately written with different mechanics than the package code paths
they check: the LP oracle is a standard-form dense tableau with bounds
converted to explicit rows and Bland's rule throughout; the MILP oracle is
exhaustive enumeration; the statistics oracle is two-pass over stored
samples; the least-squares oracle goes through the pseudo-inverse.
"""

from __future__ import annotations

import itertools

import numpy as np

TOL = 1e-9


def oracle_solve_lp(c, a, senses, b, lb, ub):
    """Two-phase standard-form simplex, Bland's rule, bounds as rows.

    Returns (status, objective, x) with status in
    {'optimal', 'infeasible', 'unbounded'}.
    """
    c = np.asarray(c, float)
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    senses = np.asarray(senses)
    m, n = a.shape if a.size else (0, c.size)

    # shift lower bounds to zero, turn finite upper bounds into rows
    rows = []
    rhs = []
    eq = []
    if m:
        shift = a @ lb
        for i in range(m):
            if senses[i] == 0:
                rows.append(a[i])
                rhs.append(b[i] - shift[i])
                eq.append(True)
            elif senses[i] > 0:  # >=  ->  <= with negation
                rows.append(-a[i])
                rhs.append(-(b[i] - shift[i]))
                eq.append(False)
            else:
                rows.append(a[i])
                rhs.append(b[i] - shift[i])
                eq.append(False)
    for j in range(n):
        if np.isfinite(ub[j]):
            r = np.zeros(n)
            r[j] = 1.0
            rows.append(r)
            rhs.append(ub[j] - lb[j])
            eq.append(False)

    mm = len(rows)
    n_slack = sum(1 for e in eq if not e)
    big = np.zeros((mm, n + n_slack + mm))
    g = np.zeros(mm)
    s_at = n
    for i in range(mm):
        big[i, :n] = rows[i]
        g[i] = rhs[i]
        if not eq[i]:
            big[i, s_at] = 1.0
            s_at += 1
    # normalize rhs sign, then one artificial per row
    for i in range(mm):
        if g[i] < 0:
            big[i] *= -1.0
            g[i] *= -1.0
        big[i, n + n_slack + i] = 1.0
    n_tot = n + n_slack + mm
    art = np.arange(n + n_slack, n_tot)

    basis = art.copy()
    tab = np.hstack([big, g[:, None]])

    def cost_row(cost):
        d = cost.copy().astype(float)
        obj = 0.0
        for i in range(mm):
            if cost[basis[i]] != 0.0:
                d = d - cost[basis[i]] * tab[i, :-1]
                obj += cost[basis[i]] * tab[i, -1]
        return d, obj

    def pivot(r, j):
        tab[r] = tab[r] / tab[r, j]
        for i in range(mm):
            if i != r and tab[i, j] != 0.0:
                tab[i] = tab[i] - tab[i, j] * tab[r]
        basis[r] = j

    def iterate(d, barred):
        while True:
            ent = -1
            for j in range(n_tot):
                if j in barred:
                    continue
                if d[j] < -TOL:
                    ent = j
                    break
            if ent < 0:
                return "optimal", d
            best_r, best_var = -1, None
            best_ratio = np.inf
            for i in range(mm):
                if tab[i, ent] > TOL:
                    ratio = tab[i, -1] / tab[i, ent]
                    if ratio < best_ratio - 1e-12 or (
                            abs(ratio - best_ratio) <= 1e-12
                            and (best_var is None or basis[i] < best_var)):
                        best_ratio = ratio
                        best_r = i
                        best_var = basis[i]
            if best_r < 0:
                return "unbounded", d
            dj = d[ent]
            pivot(best_r, ent)
            d = d - dj * tab[best_r, :-1]
            d[ent] = 0.0

    # phase 1
    cost1 = np.zeros(n_tot)
    cost1[art] = 1.0
    d1, _ = cost_row(cost1)
    status, _ = iterate(d1, barred=set())
    assert status == "optimal"
    p1 = sum(tab[i, -1] for i in range(mm) if basis[i] in set(art))
    if p1 > 1e-7 * max(1.0, np.abs(g).max(initial=1.0)):
        return "infeasible", np.nan, None

    # drive artificials out / drop redundant rows
    art_set = set(art.tolist())
    drop = []
    for i in range(mm):
        if basis[i] in art_set:
            cands = [j for j in range(n + n_slack) if abs(tab[i, j]) > TOL]
            if cands:
                pivot(i, cands[0])
            else:
                drop.append(i)
    if drop:
        keep = [i for i in range(mm) if i not in set(drop)]
        tab = tab[keep]
        basis = basis[keep]
        mm = len(keep)

    cost2 = np.zeros(n_tot)
    cost2[:n] = c
    d2, _ = cost_row(cost2)
    status, _ = iterate(d2, barred=art_set)
    if status == "unbounded":
        return "unbounded", np.nan, None
    x_std = np.zeros(n_tot)
    for i in range(mm):
        x_std[basis[i]] = tab[i, -1]
    x = lb + x_std[:n]
    return "optimal", float(c @ x), x


def oracle_solve_milp(c, a, senses, b, lb, ub, binary):
    """Exhaustive enumeration over all binary assignments."""
    best = ("infeasible", np.nan, None)
    unbounded = False
    for bits in itertools.product((0.0, 1.0), repeat=len(binary)):
        lo = np.array(lb, float)
        hi = np.array(ub, float)
        for j, v in zip(binary, bits):
            lo[j] = hi[j] = v
        status, obj, x = oracle_solve_lp(c, a, senses, b, lo, hi)
        if status == "unbounded":
            unbounded = True
        if status == "optimal" and (best[2] is None or obj < best[1]):
            best = ("optimal", obj, x)
    if best[2] is None and unbounded:
        return "unbounded", np.nan, None
    return best


def oracle_relu_pattern_minimum(model, polytope, inv_costs, lp_solver):
    """Minimize inv_costs@x + network(x) by enumerating all activation
    patterns: per pattern, each hidden neuron is pinned active (h = z, z >= 0)
    or inactive (h = 0, z <= 0) and one LP is solved. Independent of the
    big-M embedding."""
    from capplan.embedding import folded_layers
    from capplan.optimize import EQ, LE, LinearProgram, SolveStatus
    import scipy.sparse as sp

    layers = folded_layers(model)
    widths = [w.shape[0] for w, _ in layers[:-1]]
    total = sum(widths)
    n = polytope.n
    best = np.inf
    best_x = None
    for mask_bits in itertools.product((0, 1), repeat=total):
        # variables: x (n) then h per hidden neuron (total)
        nv = n + total
        rows, senses, rhs = [], [], []
        lb = np.concatenate([polytope.lb, np.zeros(total)])
        ub = np.concatenate([polytope.ub, np.full(total, np.inf)])
        for r in range(polytope.m):
            row = np.zeros(nv)
            row[:n] = polytope.a[r]
            rows.append(row)
            senses.append(LE)
            rhs.append(polytope.b[r])
        off = 0
        prev_slice = np.arange(n)
        prev_is_x = True
        for li, (w, b) in enumerate(layers[:-1]):
            for j in range(w.shape[0]):
                zrow = np.zeros(nv)
                zrow[prev_slice] = w[j]
                active = mask_bits[off + j]
                if active:
                    # h - z = b ... h = z: row h - w@prev = b_j; and z >= 0: -w@prev <= b_j
                    hrow = zrow.copy() * -1.0
                    hrow[n + off + j] = 1.0
                    rows.append(hrow)
                    senses.append(EQ)
                    rhs.append(b[j])
                    grow = -zrow
                    rows.append(grow)
                    senses.append(LE)
                    rhs.append(b[j])
                else:
                    ub[n + off + j] = 0.0
                    rows.append(zrow)
                    senses.append(LE)
                    rhs.append(-b[j])
            prev_slice = n + off + np.arange(w.shape[0])
            off += w.shape[0]
        w_out, b_out = layers[-1]
        c = np.zeros(nv)
        c[:n] = inv_costs
        c[prev_slice] = w_out[0]
        lp = LinearProgram(c=c, a=sp.csr_matrix(np.array(rows)),
                           senses=np.array(senses, np.int8),
                           b=np.array(rhs), lb=lb, ub=ub)
        res = lp_solver.solve_lp(lp)
        if res.status is SolveStatus.OPTIMAL:
            obj = res.objective + float(b_out[0])
            if obj < best:
                best = obj
                best_x = res.x[:n]
    return best, best_x


def two_pass_stats(samples):
    """Textbook mean / unbiased variance over stored samples."""
    q = np.asarray(samples, float)
    s = q.size
    mean = q.sum() / s
    var = ((q - mean) ** 2).sum() / (s - 1) if s > 1 else 0.0
    return mean, var


def pinv_least_squares(x, y):
    """Affine least squares through the pseudo-inverse."""
    design = np.hstack([x, np.ones((x.shape[0], 1))])
    coef = np.linalg.pinv(design) @ y
    return coef[:-1], coef[-1]
