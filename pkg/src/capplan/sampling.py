"""Constraint-propagation sampling of feasible first-stage plans.

Variables are sampled one at a time; each sampled value is propagated
through every coupling row, tightening the bounds of the variables that
remain, so any subsequent draw stays inside the polytope. With zero lower
bounds and nonnegative A, b, u, every sample is feasible by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError
from .textio import fmt
from .model import FirstStagePolytope, InvestmentPlan
from .rng import PURPOSE_PLAN_SAMPLER, StreamKey, generator

ORDER_RANDOM = "random"
ORDER_FIXED = "fixed"


@dataclass
class SampleBatch:
    plans: list[InvestmentPlan]
    clamped: int = 0            # empty tightened intervals hit (clamp-and-count)
    rejected: int = 0           # infeasible draws discarded (guarantee violated)
    order_policy: str = ORDER_RANDOM
    seed: int = 0

    def __iter__(self):
        return iter(self.plans)

    def __len__(self):
        return len(self.plans)


def propagate_bound(polytope: FirstStagePolytope, row: int, var: int,
                    remaining, lb_w, ub_w, b_w) -> float:
    """Implied bound on x[var] from one row, remaining variables at their
    constraint-relaxing extremes.

    For a row a @ x <= b' this is b'/a_ri minus the least possible activity
    of the remaining variables, scaled by a_ri. The coefficient must be
    nonzero.
    """
    a = polytope.a
    coeff = a[row, var]
    if coeff == 0.0:
        raise ValueError(f"zero coefficient for variable {var} in row {row}")
    total = b_w[row] / coeff
    for j in np.flatnonzero(remaining):
        if j == var or a[row, j] == 0.0:
            continue
        if a[row, j] > 0.0:
            total -= a[row, j] * lb_w[j] / coeff
        else:
            total -= a[row, j] * ub_w[j] / coeff
    return total


def _relaxing_activity(a_pos, a_neg, lb_w, ub_w, remaining_mask):
    """Per-row least activity of the remaining variables."""
    lw = np.where(remaining_mask, lb_w, 0.0)
    uw = np.where(remaining_mask, ub_w, 0.0)
    return a_pos @ lw + a_neg @ uw


def _draw_one(a, a_pos, a_neg, lb, ub, b, order, rng_val, trace=None):
    n = lb.size
    m = b.size
    lb_w = lb.copy()
    ub_w = ub.copy()
    b_w = b.copy()
    x = np.zeros(n)
    remaining = np.ones(n, dtype=bool)
    clamped = 0
    for i in order:
        remaining[i] = False
        if m:
            p = _relaxing_activity(a_pos, a_neg, lb_w, ub_w, remaining)
            col = a[:, i]
            with np.errstate(divide="ignore", invalid="ignore"):
                f = (b_w - p) / col
            pos = col > 0.0
            neg = col < 0.0
            if pos.any():
                ub_w[i] = min(ub_w[i], f[pos].min())
            if neg.any():
                lb_w[i] = max(lb_w[i], f[neg].max())
        if lb_w[i] <= ub_w[i]:
            x[i] = rng_val.uniform(lb_w[i], ub_w[i])
        else:
            x[i] = min(max(lb_w[i], lb[i]), ub[i])
            clamped += 1
        if m:
            b_w -= a[:, i] * x[i]
            # one tightening pass over every remaining variable
            if remaining.any():
                p = _relaxing_activity(a_pos, a_neg, lb_w, ub_w, remaining)
                contrib = a_pos * lb_w[None, :] + a_neg * ub_w[None, :]
                with np.errstate(divide="ignore", invalid="ignore"):
                    fm = (b_w[:, None] - p[:, None] + contrib) / a
                pos = a > 0.0
                new_ub = np.where(pos, fm, np.inf).min(axis=0)
                new_lb = np.where(a < 0.0, fm, -np.inf).max(axis=0)
                upd = remaining
                ub_w[upd] = np.minimum(ub_w[upd], new_ub[upd])
                lb_w[upd] = np.maximum(lb_w[upd], new_lb[upd])
        if trace is not None:
            trace.append((lb_w.copy(), ub_w.copy()))
    return x, clamped


def sample_plans(count: int, polytope: FirstStagePolytope, seed: int,
                 order_policy: str = ORDER_RANDOM, retry_cap: int = 20,
                 _trace=None) -> SampleBatch:
    """Draw `count` feasible plans; pure function of (polytope, seed, policy)."""
    if order_policy not in (ORDER_RANDOM, ORDER_FIXED):
        raise ValueError(f"unknown order policy {order_policy!r}")
    guaranteed = polytope.nonneg_guarantee()
    if not guaranteed:
        warnings.warn("polytope violates the nonnegativity preconditions; "
                      "samples are verified and resampled when infeasible",
                      stacklevel=2)
    a = polytope.a
    a_pos = np.maximum(a, 0.0)
    a_neg = np.minimum(a, 0.0)
    n = polytope.n
    tol = 1e-9 * max(1.0, float(np.abs(polytope.b).max(initial=0.0)))

    batch = SampleBatch(plans=[], order_policy=order_policy, seed=seed)
    for k in range(count):
        rng_val = generator(StreamKey(seed=seed, purpose=PURPOSE_PLAN_SAMPLER,
                                      sample=k, period=0))
        rng_ord = generator(StreamKey(seed=seed, purpose=PURPOSE_PLAN_SAMPLER,
                                      sample=k, period=1))
        for attempt in range(retry_cap + 1):
            if order_policy == ORDER_RANDOM:
                order = rng_ord.permutation(n)
            else:
                order = np.arange(n)
            x, clamped = _draw_one(a, a_pos, a_neg, polytope.lb, polytope.ub,
                                   polytope.b, order, rng_val, trace=_trace)
            feasible = (np.all(x >= polytope.lb - tol)
                        and np.all(x <= polytope.ub + tol)
                        and np.all(a @ x <= polytope.b + tol))
            if guaranteed or feasible:
                batch.clamped += clamped
                break
            batch.rejected += 1
        batch.plans.append(InvestmentPlan(x))
    return batch


def save_plans(batch: SampleBatch, path) -> None:
    """Columnar plan dataset: one row per plan, x entries tab-separated."""
    with open(path, "w") as fh:
        fh.write(f"# capplan-plans/1\tseed={batch.seed}\torder={batch.order_policy}"
                 f"\tclamped={batch.clamped}\trejected={batch.rejected}\n")
        n = batch.plans[0].x.size if batch.plans else 0
        fh.write("plan_id\t" + "\t".join(f"x{j}" for j in range(n)) + "\n")
        for k, plan in enumerate(batch.plans):
            fh.write(str(k) + "\t" + "\t".join(fmt(v) for v in plan.x) + "\n")


def load_plans(path) -> list[InvestmentPlan]:
    plans = []
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# capplan-plans/1"):
            raise DimensionError("not a capplan plan dataset")
        fh.readline()  # column header
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            plans.append(InvestmentPlan(np.array([float(v) for v in parts[1:]])))
    return plans
