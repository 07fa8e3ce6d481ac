import numpy as np
import pytest

from capplan.errors import InstanceError
from capplan.instances import default_instance, load_instance, save_instance, scenario_params
from capplan.model import (Candidate, FirstStagePolytope, GENERATION,
                           InvestmentPlan, PlanningInstance, build_second_stage,
                           cumulative_capacity, evaluate_q, investment_cost)
from capplan.optimize import SimplexSolver, SolveStatus
from capplan.rng import PURPOSE_MISC, StreamKey
from capplan.scenarios import Scenario, sample


@pytest.fixture(scope="module")
def inst():
    return default_instance()


@pytest.fixture(scope="module")
def solver():
    return SimplexSolver()


def flat_scenario(inst, horizon, demand=5.0, avail=1.0):
    n_nodes = len(inst.nodes)
    n_gen = len(inst.generators)
    return Scenario(horizon=horizon,
                    demand=np.full((n_nodes, horizon), demand),
                    availability=np.full((n_gen, horizon), avail),
                    key=StreamKey(seed=0, purpose=PURPOSE_MISC))


def single_node_instance(mc=30.0, ramp=None):
    cand = Candidate(name="g", tech=GENERATION, node="A", inv_cost=(1.0,),
                     lifetime=3, preexisting=(0.0,), marginal_cost=mc,
                     ramp_frac=ramp, profile="thermal")
    poly = FirstStagePolytope(a=np.zeros((0, 1)), b=np.zeros(0),
                              lb=np.zeros(1), ub=np.array([100.0]))
    return PlanningInstance(name="one", periods=(2030,), years_per_period=1,
                            nodes=("A",), candidates=(cand,), polytope=poly,
                            load_shed_cost=1000.0, discount_rate=0.0)


# --- cumulative capacity ---

def test_zero_plan_gives_preexisting(inst):
    plan = InvestmentPlan(np.zeros(inst.n_vars))
    for t in range(inst.n_periods):
        v = cumulative_capacity(inst, plan, t)
        expected = [c.preexisting[t] for c in inst.candidates]
        assert np.allclose(v, expected)


def test_long_lifetime_accumulates_all_builds(inst):
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 5, size=inst.n_vars)
    plan = InvestmentPlan(x)
    t = inst.n_periods - 1
    v = cumulative_capacity(inst, plan, t)
    for i, c in enumerate(inst.candidates):
        if c.lifetime >= inst.n_periods:
            total = sum(x[inst.var_index(i, tt)] for tt in range(t + 1))
            assert v[i] == pytest.approx(c.preexisting[t] + total)


def test_retirement_window_hand_case():
    # lifetime 1, builds 5 then 3: period 3 sees only periods {2, 3}
    cand = Candidate(name="g", tech=GENERATION, node="A",
                     inv_cost=(1.0,) * 4, lifetime=1, preexisting=(0.0,) * 4,
                     marginal_cost=10.0, profile="thermal")
    poly = FirstStagePolytope(a=np.zeros((0, 4)), b=np.zeros(0),
                              lb=np.zeros(4), ub=np.full(4, 10.0))
    one = PlanningInstance(name="t", periods=(1, 2, 3, 4), years_per_period=1,
                           nodes=("A",), candidates=(cand,), polytope=poly,
                           load_shed_cost=1000.0, discount_rate=0.0)
    x = np.zeros(4)
    x[0] = 5.0   # build in period index 0
    x[1] = 3.0   # build in period index 1
    plan = InvestmentPlan(x)
    assert cumulative_capacity(one, plan, 2)[0] == pytest.approx(3.0)
    assert cumulative_capacity(one, plan, 1)[0] == pytest.approx(8.0)
    with pytest.raises(InstanceError):
        cumulative_capacity(one, plan, 7)


# --- investment cost ---

def test_investment_cost_zero_plan(inst):
    assert investment_cost(inst, InvestmentPlan(np.zeros(inst.n_vars))) == 0.0


def test_investment_cost_single_entry():
    one = single_node_instance()
    cand = one.candidates[0]
    x = np.array([3.0])
    # cost 1.0/MW, zero discount: 3.0
    assert investment_cost(one, InvestmentPlan(x)) == pytest.approx(3.0)


def test_investment_cost_discounting_hand_math():
    cand = Candidate(name="g", tech=GENERATION, node="A", inv_cost=(1.0, 1.0),
                     lifetime=3, preexisting=(0.0, 0.0), marginal_cost=10.0,
                     profile="thermal")
    poly = FirstStagePolytope(a=np.zeros((0, 2)), b=np.zeros(0),
                              lb=np.zeros(2), ub=np.full(2, 10.0))
    two = PlanningInstance(name="t", periods=(2030, 2035), years_per_period=5,
                           nodes=("A",), candidates=(cand,), polytope=poly,
                           load_shed_cost=1000.0, discount_rate=0.08)
    x = np.array([2.0, 3.0])
    expected = 2.0 + 3.0 * (1.08 ** -5)
    assert investment_cost(two, InvestmentPlan(x)) == pytest.approx(expected, rel=1e-12)


# --- second stage ---

def test_closed_form_dispatch(solver):
    one = single_node_instance(mc=30.0)
    sc = flat_scenario(one, horizon=2, demand=5.0)
    q = evaluate_q(one, np.array([10.0]), sc, solver)
    assert q == pytest.approx(2 * 5 * 30.0, rel=1e-9)


def test_zero_capacity_sheds_everything(inst, solver):
    sc = flat_scenario(inst, horizon=3, demand=7.0)
    v = np.zeros(len(inst.candidates))
    q = evaluate_q(inst, v, sc, solver)
    assert q == pytest.approx(3 * 7.0 * len(inst.nodes) * inst.load_shed_cost, rel=1e-9)


def test_horizon_one_has_no_ramp_rows():
    one = single_node_instance(mc=30.0, ramp=0.1)
    sc1 = flat_scenario(one, horizon=1)
    op1 = build_second_stage(one, np.array([10.0]), sc1)
    sc2 = flat_scenario(one, horizon=2)
    op2 = build_second_stage(one, np.array([10.0]), sc2)
    # 2-hour LP has exactly one more row than twice the per-hour rows: the ramp
    assert op2.lp.m == 2 * op1.lp.m + 1


def test_doubling_demand_doubles_shed_cost(inst, solver):
    v = np.zeros(len(inst.candidates))
    sc = flat_scenario(inst, horizon=2, demand=4.0)
    sc2 = flat_scenario(inst, horizon=2, demand=8.0)
    assert evaluate_q(inst, v, sc2, solver) == pytest.approx(
        2 * evaluate_q(inst, v, sc, solver), rel=1e-9)


def test_scenario_node_mismatch_rejected(inst):
    bad = Scenario(horizon=2, demand=np.ones((1, 2)),
                   availability=np.ones((len(inst.generators), 2)),
                   key=StreamKey(seed=0, purpose=PURPOSE_MISC))
    with pytest.raises(InstanceError):
        build_second_stage(inst, np.zeros(len(inst.candidates)), bad)


# --- recourse / monotonicity / convexity properties ---

def _random_v_and_scenario(inst, rng, i):
    sp = scenario_params(inst)
    v = rng.uniform(0, 60, size=len(inst.candidates))
    sc = sample(sp, StreamKey(seed=9, purpose=PURPOSE_MISC, sample=i,
                              period=int(rng.integers(0, inst.n_periods)),
                              scenario=i), horizon=int(rng.integers(1, 13)))
    return v, sc


def test_complete_recourse_100_random_pairs(inst, solver):
    rng = np.random.default_rng(1)
    for i in range(100):
        v, sc = _random_v_and_scenario(inst, rng, i)
        if i % 10 == 0:
            v = np.zeros(len(inst.candidates))
        q = evaluate_q(inst, v, sc, solver)
        assert np.isfinite(q) and q >= -1e-9


def test_monotone_in_capacity_50_pairs(inst, solver):
    rng = np.random.default_rng(2)
    for i in range(50):
        v, sc = _random_v_and_scenario(inst, rng, i)
        v2 = v + rng.uniform(0, 20, size=v.size)
        q1 = evaluate_q(inst, v, sc, solver)
        q2 = evaluate_q(inst, v2, sc, solver)
        assert q2 <= q1 + 1e-6 * abs(q1) + 1e-9


def test_convex_midpoint_50_pairs(inst, solver):
    rng = np.random.default_rng(3)
    for i in range(50):
        v1, sc = _random_v_and_scenario(inst, rng, i)
        v2 = rng.uniform(0, 60, size=v1.size)
        qm = evaluate_q(inst, 0.5 * (v1 + v2), sc, solver)
        q1 = evaluate_q(inst, v1, sc, solver)
        q2 = evaluate_q(inst, v2, sc, solver)
        assert qm <= 0.5 * (q1 + q2) + 1e-6 * (abs(q1) + abs(q2)) + 1e-9


def test_zero_demand_zero_cost(inst, solver):
    sc = flat_scenario(inst, horizon=4, demand=0.0)
    v = np.full(len(inst.candidates), 25.0)
    assert evaluate_q(inst, v, sc, solver) == pytest.approx(0.0, abs=1e-9)


# --- instance file round trip ---

def test_instance_roundtrip_bit_exact(inst, tmp_path):
    p1 = tmp_path / "a.json"
    p2 = tmp_path / "b.json"
    save_instance(inst, p1)
    again = load_instance(p1)
    save_instance(again, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert again.periods == inst.periods
    assert np.array_equal(again.polytope.a, inst.polytope.a)


def test_invariant_shed_exceeds_marginal_cost():
    with pytest.raises(InstanceError):
        cand = Candidate(name="g", tech=GENERATION, node="A", inv_cost=(1.0,),
                         lifetime=1, preexisting=(0.0,), marginal_cost=2000.0,
                         profile="thermal")
        poly = FirstStagePolytope(a=np.zeros((0, 1)), b=np.zeros(0),
                                  lb=np.zeros(1), ub=np.ones(1))
        PlanningInstance(name="bad", periods=(2030,), years_per_period=1,
                         nodes=("A",), candidates=(cand,), polytope=poly,
                         load_shed_cost=1500.0, discount_rate=0.0)
