import numpy as np
import pytest
import scipy.sparse as sp

from capplan.optimize import (EQ, GE, LE, LinearProgram, SimplexSolver,
                              SolveStatus, solve_lp, write_lp)
from oracles import oracle_solve_lp


def make_lp(c, a, senses, b, lb, ub):
    a = np.atleast_2d(np.asarray(a, float)) if np.size(a) else np.zeros((0, len(c)))
    return LinearProgram(c=np.asarray(c, float), a=sp.csr_matrix(a),
                         senses=np.asarray(senses, np.int8), b=np.asarray(b, float),
                         lb=np.asarray(lb, float), ub=np.asarray(ub, float))


def random_lp(rng, n_max=10, m_max=10):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(0, m_max + 1))
    a = rng.normal(size=(m, n))
    a[rng.random(size=a.shape) < 0.3] = 0.0
    # keep every row nonempty
    for i in range(m):
        if not np.any(a[i]):
            a[i, int(rng.integers(0, n))] = rng.normal() + 0.5
    senses = rng.choice([LE, EQ, GE], size=m, p=[0.6, 0.2, 0.2])
    lb = rng.uniform(-2.0, 0.0, size=n)
    ub = lb + rng.uniform(0.5, 4.0, size=n)
    ub[rng.random(size=n) < 0.25] = np.inf
    if rng.random() < 0.6 and m:
        # anchor the rhs at a random interior point so the LP is feasible
        x0 = lb + rng.random(size=n) * np.where(np.isfinite(ub), ub - lb, 2.0)
        slackness = rng.uniform(0.0, 1.0, size=m) * (senses != EQ)
        b = a @ x0 + slackness * senses * -1.0
    else:
        b = rng.normal(scale=2.0, size=m)
    c = rng.normal(size=n)
    return make_lp(c, a, senses, b, lb, ub)


def test_min_with_ge_row():
    lp = make_lp([1.0], [[1.0]], [GE], [3.0], [0.0], [10.0])
    res = solve_lp(lp)
    assert res.status is SolveStatus.OPTIMAL
    assert res.objective == pytest.approx(3.0, abs=1e-9)


def test_contradictory_rows_infeasible():
    lp = make_lp([1.0], [[1.0], [1.0]], [LE, GE], [1.0, 2.0], [0.0], [10.0])
    assert solve_lp(lp).status is SolveStatus.INFEASIBLE


def test_unbounded_detected():
    lp = make_lp([-1.0], np.zeros((0, 1)), [], [], [0.0], [np.inf])
    assert solve_lp(lp).status is SolveStatus.UNBOUNDED


def test_fixed_variables_respected():
    lp = make_lp([1.0, 1.0], [[1.0, 1.0]], [GE], [1.0], [0.5, 0.0], [0.5, 2.0])
    res = solve_lp(lp)
    assert res.status is SolveStatus.OPTIMAL
    assert res.x[0] == pytest.approx(0.5)
    assert res.objective == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("kernel", ["cython", "numpy"])
def test_random_lps_match_tableau_oracle(kernel):
    try:
        solver = SimplexSolver(kernel=kernel)
    except ImportError:
        pytest.skip("compiled kernel unavailable")
    rng = np.random.default_rng(42)
    n_optimal = 0
    for trial in range(200):
        lp = random_lp(rng)
        res = solver.solve_lp(lp)
        status, obj, _ = oracle_solve_lp(lp.c, lp.a.toarray(), lp.senses, lp.b,
                                         lp.lb, lp.ub)
        assert res.status.value == status, f"trial {trial}: {res.status} vs {status}"
        if status == "optimal":
            n_optimal += 1
            assert res.objective == pytest.approx(obj, rel=1e-6, abs=1e-6), f"trial {trial}"
            # primal feasibility of the returned point
            resid = lp.a @ res.x - lp.b
            sl = np.where(lp.senses == LE, resid, np.where(lp.senses == GE, -resid, np.abs(resid)))
            assert sl.max(initial=0.0) <= 1e-6
            assert np.all(res.x >= lp.lb - 1e-9) and np.all(res.x <= lp.ub + 1e-9)
    assert n_optimal >= 50  # the generator must exercise the optimal path


def test_duality_certificate_on_random_optimal_lps():
    # strong duality: b'y + sum_j min((c - A'y)_j x_j over box) == objective
    rng = np.random.default_rng(7)
    solver = SimplexSolver()
    checked = 0
    while checked < 30:
        lp = random_lp(rng)
        if np.any(np.isinf(lp.ub)):
            continue
        res = solver.solve_lp(lp)
        if res.status is not SolveStatus.OPTIMAL:
            continue
        y = res.duals
        # sense sanity: shadow price sign matches the constraint direction
        z = lp.c - lp.a.T @ y
        lower_val = float(lp.b @ y + np.minimum(z * lp.lb, z * lp.ub).sum())
        assert lower_val == pytest.approx(res.objective, rel=1e-5, abs=1e-5)
        checked += 1


def test_objective_consistent_with_primal():
    rng = np.random.default_rng(3)
    solver = SimplexSolver()
    for _ in range(50):
        lp = random_lp(rng)
        res = solver.solve_lp(lp)
        if res.status is SolveStatus.OPTIMAL:
            assert res.objective == pytest.approx(float(lp.c @ res.x), rel=1e-7)


def test_lp_export_roundtrip_through_file(tmp_path):
    lp = make_lp([1.0, -2.0], [[1.0, 1.0], [2.0, -1.0]], [LE, GE], [4.0, -1.0],
                 [0.0, -1.0], [3.0, np.inf])
    path = tmp_path / "model.lp"
    write_lp(lp, path)
    text = path.read_text()
    assert "Minimize" in text and "Subject To" in text and "Bounds" in text
    assert "x0" in text and "x1" in text
