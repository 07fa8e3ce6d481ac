import numpy as np
import pytest
import scipy.sparse as sp

from capplan.optimize import (LE, GE, LinearProgram, MixedIntegerProgram,
                              SimplexSolver, SolveStatus)
from oracles import oracle_solve_milp


def make_mip(c, a, senses, b, lb, ub, binary):
    a = np.atleast_2d(np.asarray(a, float)) if np.size(a) else np.zeros((0, len(c)))
    lp = LinearProgram(c=np.asarray(c, float), a=sp.csr_matrix(a),
                       senses=np.asarray(senses, np.int8), b=np.asarray(b, float),
                       lb=np.asarray(lb, float), ub=np.asarray(ub, float))
    return MixedIntegerProgram(lp=lp, binary=np.asarray(binary, np.int64))


def random_mip(rng, n_bin, n_cont=2):
    n = n_bin + n_cont
    m = int(rng.integers(1, 7))
    a = rng.normal(size=(m, n))
    a[rng.random(size=a.shape) < 0.25] = 0.0
    for i in range(m):
        if not np.any(a[i]):
            a[i, int(rng.integers(0, n))] = 1.0
    senses = rng.choice([LE, GE], size=m, p=[0.75, 0.25])
    x0 = rng.random(size=n)
    b = a @ x0 + rng.uniform(0.0, 0.8, size=m) * senses * -1.0
    lb = np.zeros(n)
    ub = np.concatenate([np.ones(n_bin), rng.uniform(0.5, 2.0, size=n_cont)])
    c = rng.normal(size=n)
    return make_mip(c, a, senses, b, lb, ub, np.arange(n_bin))


def test_fixed_binaries_reduce_to_lp():
    mip = make_mip([1.0, 2.0], [[1.0, 1.0]], [GE], [1.5], [1.0, 0.0], [1.0, 1.0], [0])
    solver = SimplexSolver()
    res = solver.solve_milp(mip, gap_tol=0.0)
    lp_res = solver.solve_lp(mip.lp)
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective == pytest.approx(lp_res.objective, rel=1e-9)


def test_knapsack_matches_enumeration():
    rng = np.random.default_rng(11)
    w = rng.uniform(1.0, 5.0, size=8)
    p = rng.uniform(1.0, 4.0, size=8)
    mip = make_mip(-p, [w], [LE], [0.4 * w.sum()], np.zeros(8), np.ones(8),
                   np.arange(8))
    res = SimplexSolver().solve_milp(mip, gap_tol=0.0)
    status, obj, _ = oracle_solve_milp(mip.lp.c, mip.lp.a.toarray(), mip.lp.senses,
                                       mip.lp.b, mip.lp.lb, mip.lp.ub, mip.binary)
    assert res.status is SolveStatus.OPTIMAL and status == "optimal"
    assert res.objective == pytest.approx(obj, rel=1e-6, abs=1e-6)


def test_zero_gap_is_exact_on_random_mips():
    rng = np.random.default_rng(5)
    solver = SimplexSolver()
    n_opt = 0
    for _ in range(50):
        mip = random_mip(rng, n_bin=int(rng.integers(2, 13)))
        res = solver.solve_milp(mip, gap_tol=0.0)
        status, obj, _ = oracle_solve_milp(mip.lp.c, mip.lp.a.toarray(),
                                           mip.lp.senses, mip.lp.b, mip.lp.lb,
                                           mip.lp.ub, mip.binary)
        assert res.status.value == status
        if status == "optimal":
            n_opt += 1
            assert res.objective == pytest.approx(obj, rel=1e-6, abs=1e-6)
    assert n_opt >= 30


def test_incumbent_trace_monotone():
    rng = np.random.default_rng(9)
    for _ in range(10):
        mip = random_mip(rng, n_bin=10)
        res = SimplexSolver().solve_milp(mip, gap_tol=0.0)
        trace = res.incumbent_trace
        assert all(b < a for a, b in zip(trace, trace[1:]))


def test_gap_reported_within_tolerance():
    rng = np.random.default_rng(21)
    mip = random_mip(rng, n_bin=12)
    res = SimplexSolver().solve_milp(mip, gap_tol=0.05)
    if res.status is SolveStatus.OPTIMAL:
        assert res.gap is not None and res.gap <= 0.05 + 1e-12
