"""Out-of-sample validation, optimality gaps, and capacity trajectories.

Validation scenarios live in their own RNG namespace, so they can never
collide with training or baseline draws. All methods under comparison are
scored on the same scenario set (same seed, count, and horizon).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from multiprocessing import get_context

import numpy as np

from .errors import SolverError
from .instances import scenario_params
from .model import (PlanningInstance, InvestmentPlan, cumulative_capacity,
                    evaluate_q, investment_cost)
from .optimize import AutoSolver
from .rng import PURPOSE_VALIDATION, StreamKey
from .scenarios import sample
from .textio import fmt


@dataclass
class ValidationReport:
    plan_id: str
    n_scenarios: int
    horizon: int
    seed: int
    mean_cost: float
    cv_pct: float
    investment: float
    gap_pct: float | None = None
    reference_cost: float | None = None
    trajectory: dict = field(default_factory=dict)
    wall_time: float = 0.0


def _scenario_total(instance, vs, weights, seed, horizon, s):
    solver = _scenario_total._solver
    if solver is None:
        solver = _scenario_total._solver = AutoSolver()
    params = _scenario_total._params
    total = 0.0
    for t in range(instance.n_periods):
        key = StreamKey(seed=seed, purpose=PURPOSE_VALIDATION, sample=0,
                        period=t, scenario=s)
        omega = sample(params, key, horizon)
        total += weights[t] * evaluate_q(instance, vs[t], omega, solver)
    return total


_scenario_total._solver = None
_scenario_total._params = None


def _chunk_worker(args):
    instance, vs, weights, seed, horizon, indices = args
    _scenario_total._solver = None
    _scenario_total._params = scenario_params(instance)
    return [_scenario_total(instance, vs, weights, seed, horizon, s)
            for s in indices]


def out_of_sample(plan: InvestmentPlan, instance: PlanningInstance, n: int,
                  seed: int, horizon: int, workers: int = 1):
    """Mean and CV (%) of total cost over n fresh validation scenarios.

    Returns (mean, cv_pct, per-scenario totals). Total = investment cost plus
    the discounted per-period production costs of that scenario tuple.
    """
    if n < 2:
        raise ValueError("out-of-sample validation needs n >= 2")
    plan.check_feasible(instance)
    inv = investment_cost(instance, plan)
    vs = [cumulative_capacity(instance, plan, t)
          for t in range(instance.n_periods)]
    weights = [instance.period_weight(t, horizon)
               for t in range(instance.n_periods)]
    indices = list(range(1, n + 1))
    if workers <= 1:
        chunks = [(instance, vs, weights, seed, horizon, indices)]
        parts = [_chunk_worker(chunks[0])]
    else:
        per = max(1, (n + workers - 1) // workers)
        chunks = [(instance, vs, weights, seed, horizon, indices[i:i + per])
                  for i in range(0, n, per)]
        ctx = get_context("fork")
        with ctx.Pool(processes=workers) as pool:
            parts = pool.map(_chunk_worker, chunks)
    production = np.concatenate([np.asarray(p) for p in parts])
    if not np.all(np.isfinite(production)):
        bad = int(np.flatnonzero(~np.isfinite(production))[0]) + 1
        raise SolverError(f"validation scenario {bad} failed to solve")
    totals = inv + production
    mean = float(totals.mean())
    cv_pct = float(totals.std(ddof=1) / mean * 100.0)
    return mean, cv_pct, totals


def optimality_gap(candidate_cost: float, reference_cost: float) -> float:
    """(candidate - reference) / reference, in percent; sign preserved."""
    if reference_cost <= 0.0:
        raise ValueError("reference cost must be positive")
    return (candidate_cost - reference_cost) / reference_cost * 100.0


def capacity_trajectory(instance: PlanningInstance, plan: InvestmentPlan):
    """Cumulative installed MW per technology per period."""
    plan.check_feasible(instance)
    out = {}
    for t in range(instance.n_periods):
        v = cumulative_capacity(instance, plan, t)
        for tech in ("generation", "transmission", "storage"):
            idx = instance.tech_indices(tech)
            out.setdefault(tech, []).append(float(v[idx].sum()) if idx else 0.0)
    return out


def validate_plan(plan: InvestmentPlan, instance: PlanningInstance, n: int,
                  seed: int, horizon: int, plan_id: str = "plan",
                  reference_cost: float | None = None,
                  workers: int = 1) -> ValidationReport:
    t0 = time.perf_counter()
    mean, cv_pct, _ = out_of_sample(plan, instance, n, seed, horizon, workers)
    gap = optimality_gap(mean, reference_cost) if reference_cost else None
    return ValidationReport(
        plan_id=plan_id, n_scenarios=n, horizon=horizon, seed=seed,
        mean_cost=mean, cv_pct=cv_pct,
        investment=investment_cost(instance, plan), gap_pct=gap,
        reference_cost=reference_cost,
        trajectory=capacity_trajectory(instance, plan),
        wall_time=time.perf_counter() - t0)


def save_trajectory(instance: PlanningInstance, trajectory: dict, path) -> None:
    """Plottable columnar data: period, technology, cumulative MW."""
    with open(path, "w") as fh:
        fh.write("period\ttechnology\tmw\n")
        for tech, series in trajectory.items():
            for t, mw in enumerate(series):
                fh.write(f"{instance.periods[t]}\t{tech}\t{fmt(mw)}\n")
