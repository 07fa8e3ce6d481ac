"""Extensive-form and progressive-hedging reference solvers.

Both consume a common ScenarioSet (S scenario tuples, one draw per period,
at a fixed benchmark horizon) so method comparisons share randomness. The
deterministic equivalent couples every scenario block to the first-stage
variables through cumulative-capacity rows; progressive hedging decomposes
by scenario with an augmented-Lagrangian penalty whose quadratic term is
linearized by tangent cuts (per-coordinate outer approximation on a
geometric grid), keeping every subproblem a plain LP.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .instances import scenario_params
from .model import (InvestmentPlan, PlanningInstance, add_operational_block,
                    capacity_links, cumulative_capacity, evaluate_q,
                    investment_cost)
from .optimize import LE, AutoSolver, HighsSolver, LpBuilder, SolveStatus
from .rng import PURPOSE_BASELINE, StreamKey
from .scenarios import sample


@dataclass(frozen=True)
class ScenarioSet:
    """S equally likely scenario tuples at a common benchmark horizon."""

    n_scenarios: int
    horizon: int
    seed: int
    purpose: int = PURPOSE_BASELINE

    def __post_init__(self):
        if self.n_scenarios < 1 or self.horizon < 1:
            raise ValueError("scenario set needs n >= 1 and horizon >= 1")

    def draw(self, params, period_idx: int, s: int):
        key = StreamKey(seed=self.seed, purpose=self.purpose, sample=0,
                        period=period_idx, scenario=s)
        return sample(params, key, self.horizon)


def default_benchmark_horizon(h0: int = 6, dh: int = 6) -> int:
    return h0 + 2 * dh


def build_extensive_form(instance: PlanningInstance, sset: ScenarioSet):
    """Single LP over x and all per-period per-scenario dispatch blocks."""
    params = scenario_params(instance)
    builder = LpBuilder()
    inv = instance.discounted_inv_costs()
    poly = instance.polytope
    x_cols = builder.add_vars(poly.n, obj=inv, lb=poly.lb, ub=poly.ub)
    for r in range(poly.m):
        cols = np.flatnonzero(poly.a[r])
        builder.add_row(x_cols[cols], poly.a[r, cols], LE, poly.b[r])
    s_count = sset.n_scenarios
    for t in range(instance.n_periods):
        links = capacity_links(instance, t)
        weight = instance.period_weight(t, sset.horizon) / s_count
        for s in range(1, s_count + 1):
            omega = sset.draw(params, t, s)
            add_operational_block(builder, instance, omega, links=links,
                                  weight=weight)
    return builder.build(), x_cols


def extensive_form(instance: PlanningInstance, sset: ScenarioSet, solver=None):
    """Returns (plan, objective, SolveResult)."""
    solver = solver or HighsSolver()
    lp, x_cols = build_extensive_form(instance, sset)
    res = solver.solve_lp(lp)
    if res.status is not SolveStatus.OPTIMAL:
        raise SolverError(f"extensive form ended with {res.status.value}")
    plan = InvestmentPlan(np.clip(res.x[x_cols], instance.polytope.lb,
                                  instance.polytope.ub))
    return plan, float(res.objective), res


def saa_cost(instance: PlanningInstance, plan: InvestmentPlan,
             sset: ScenarioSet, solver=None) -> float:
    """Investment cost plus the sample-average production cost of the plan
    on exactly the scenario set the extensive form sees."""
    solver = solver or AutoSolver()
    params = scenario_params(instance)
    total = investment_cost(instance, plan)
    for t in range(instance.n_periods):
        v = cumulative_capacity(instance, plan, t)
        w = instance.period_weight(t, sset.horizon) / sset.n_scenarios
        for s in range(1, sset.n_scenarios + 1):
            omega = sset.draw(params, t, s)
            total += w * evaluate_q(instance, v, omega, solver)
    return total


@dataclass(frozen=True)
class PhConfig:
    max_iterations: int = 200
    threshold: float = 1e-3          # relative non-anticipativity residual
    subproblem_time_limit: float | None = None
    tangent_levels: int = 13         # tangents at +-span/2^k, k = 0..levels-1
    rho_growth: float = 1.25         # applied when the residual stalls
    rho_stall: float = 0.97          # "stalled" = residual ratio above this
    rho_cap: float = 100.0           # max total growth over the initial rho

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")


@dataclass
class PhResult:
    plan: InvestmentPlan
    objective: float
    residuals: list
    iterations: int
    converged: bool
    projected: bool = False
    wall_time: float = 0.0


def _tangent_points(span: float, levels: int):
    pts = [0.0]
    for k in range(levels):
        p = span / (2.0 ** k)
        pts.extend((p, -p))
    return pts


def _ph_subproblem(instance, params, sset, scen_idx, lam, x_bar, rho, cfg,
                   solver):
    """One scenario's augmented-Lagrangian LP (tangent-cut proximal term)."""
    builder = LpBuilder()
    inv = instance.discounted_inv_costs()
    poly = instance.polytope
    obj_x = inv + (lam if lam is not None else 0.0)
    x_cols = builder.add_vars(poly.n, obj=obj_x, lb=poly.lb, ub=poly.ub)
    for r in range(poly.m):
        cols = np.flatnonzero(poly.a[r])
        builder.add_row(x_cols[cols], poly.a[r, cols], LE, poly.b[r])
    if x_bar is not None:
        for i in range(poly.n):
            z = builder.add_var(obj=0.5 * rho[i], lb=0.0, ub=np.inf)
            span = max(poly.ub[i] - poly.lb[i], 1.0)
            for p in _tangent_points(span, cfg.tangent_levels):
                if p == 0.0:
                    continue  # z >= 0 is already the variable bound
                # z >= 2 p (x_i - x_bar_i) - p^2
                builder.add_row([x_cols[i], z], [2.0 * p, -1.0], LE,
                                2.0 * p * x_bar[i] + p * p)
    for t in range(instance.n_periods):
        links = capacity_links(instance, t)
        weight = instance.period_weight(t, sset.horizon)
        omega = sset.draw(params, t, scen_idx)
        add_operational_block(builder, instance, omega, links=links,
                              weight=weight)
    res = solver.solve_lp(builder.build())
    if res.status is not SolveStatus.OPTIMAL:
        raise SolverError(f"PH subproblem {scen_idx}: {res.status.value}")
    return np.clip(res.x[:poly.n], poly.lb, poly.ub)


def _project_into_polytope(instance, x_bar, solver):
    """Nearest (L1) feasible point; only needed for numerical edge cases."""
    poly = instance.polytope
    n = poly.n
    builder = LpBuilder()
    x_cols = builder.add_vars(n, obj=0.0, lb=poly.lb, ub=poly.ub)
    d_cols = builder.add_vars(n, obj=1.0, lb=0.0, ub=np.inf)
    for r in range(poly.m):
        cols = np.flatnonzero(poly.a[r])
        builder.add_row(x_cols[cols], poly.a[r, cols], LE, poly.b[r])
    for i in range(n):
        builder.add_row([x_cols[i], d_cols[i]], [1.0, -1.0], LE, x_bar[i])
        builder.add_row([x_cols[i], d_cols[i]], [-1.0, -1.0], LE, -x_bar[i])
    res = solver.solve_lp(builder.build())
    if res.status is not SolveStatus.OPTIMAL:
        raise SolverError("feasibility projection failed")
    return np.clip(res.x[:n], poly.lb, poly.ub)


def progressive_hedging(instance: PlanningInstance, sset: ScenarioSet,
                        cfg: PhConfig = PhConfig(), solver=None) -> PhResult:
    """Scenario decomposition with cost-proportional penalties
    rho_i = inv_cost_i / (u_i + 1) and multiplier updates rho (x_s - x_bar)."""
    t_start = time.perf_counter()
    solver = solver or HighsSolver(time_limit=cfg.subproblem_time_limit)
    params = scenario_params(instance)
    poly = instance.polytope
    inv = instance.discounted_inv_costs()
    rho = inv / (poly.ub + 1.0)
    rho = np.where(np.isfinite(rho) & (rho > 0), rho, 1.0)
    s_count = sset.n_scenarios

    xs = [
        _ph_subproblem(instance, params, sset, s, None, None, rho, cfg, solver)
        for s in range(1, s_count + 1)
    ]
    x_bar = np.mean(xs, axis=0)
    lam = [rho * (x - x_bar) for x in xs]

    def residual():
        norm = max(1.0, float(np.linalg.norm(x_bar)))
        return max(float(np.linalg.norm(x - x_bar)) for x in xs) / norm

    residuals = [residual()]
    converged = residuals[-1] < cfg.threshold
    iters = 0
    growth = 1.0
    while not converged and iters < cfg.max_iterations:
        iters += 1
        xs = [
            _ph_subproblem(instance, params, sset, s, lam[s - 1], x_bar, rho,
                           cfg, solver)
            for s in range(1, s_count + 1)
        ]
        x_bar = np.mean(xs, axis=0)
        for s in range(s_count):
            lam[s] = lam[s] + rho * (xs[s] - x_bar)
        residuals.append(residual())
        converged = residuals[-1] < cfg.threshold
        # adaptive penalty: grow rho when the residual stops improving
        if (not converged and residuals[-2] > 0.0
                and residuals[-1] / residuals[-2] > cfg.rho_stall
                and growth * cfg.rho_growth <= cfg.rho_cap):
            rho = rho * cfg.rho_growth
            growth *= cfg.rho_growth

    plan = InvestmentPlan(x_bar)
    projected = False
    if not plan.check_feasible(instance, raise_on_fail=False):
        plan = InvestmentPlan(_project_into_polytope(instance, x_bar, solver))
        projected = True
    objective = saa_cost(instance, plan, sset, AutoSolver())
    return PhResult(plan=plan, objective=objective, residuals=residuals,
                    iterations=iters, converged=converged, projected=projected,
                    wall_time=time.perf_counter() - t_start)
