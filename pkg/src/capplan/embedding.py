"""Surrogate-embedded planning problems.

Minimizes discounted investment cost plus an epigraph variable bounded below
by the surrogate's prediction, over the untouched first-stage polytope. A
linear surrogate adds one row; a ReLU network adds the standard big-M
encoding per hidden neuron with interval-arithmetic preactivation bounds,
linearizing neurons whose sign is fixed over the input box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SolverError
from .model import FirstStagePolytope, InvestmentPlan
from .mlp import MlpSurrogate
from .optimize import (AutoSolver, EQ, LE, LinearProgram, LpBuilder,
                       MixedIntegerProgram, SolveResult, SolveStatus)
from .surrogate import LinearSurrogate


def folded_layers(model: MlpSurrogate):
    """Network layers with the input scaler folded into the first affine."""
    (w1, b1), rest = model.layers[0], model.layers[1:]
    std = model.x_scaler.std
    mean = model.x_scaler.mean
    w1f = w1 / std[None, :]
    b1f = b1 - w1f @ mean
    return [(w1f, b1f)] + [(w.copy(), b.copy()) for w, b in rest]


def compute_activation_bounds(model: MlpSurrogate, lb, ub):
    """Per-layer preactivation intervals [L, U] valid over the input box,
    by signed-weight interval propagation; the last entry bounds the output."""
    lb = np.asarray(lb, float)
    ub = np.asarray(ub, float)
    if not (np.all(np.isfinite(lb)) and np.all(np.isfinite(ub))):
        raise ValueError("activation bounds need a finite input box")
    layers = folded_layers(model)
    alo, ahi = lb, ub
    bounds = []
    for w, b in layers:
        wp = np.maximum(w, 0.0)
        wn = np.minimum(w, 0.0)
        zlo = wp @ alo + wn @ ahi + b
        zhi = wp @ ahi + wn @ alo + b
        if not (np.all(np.isfinite(zlo)) and np.all(np.isfinite(zhi))):
            raise ArithmeticError("non-finite activation bounds")
        bounds.append((zlo, zhi))
        alo = np.maximum(zlo, 0.0)
        ahi = np.maximum(zhi, 0.0)
    return bounds


@dataclass
class EmbeddedProblem:
    """Surrogate planning problem plus the variable bookkeeping tests need."""

    problem: object                   # LinearProgram or MixedIntegerProgram
    x_cols: np.ndarray
    mu_col: int
    h_cols: list                      # per hidden layer, array of h columns
    delta_cols: list                  # per hidden layer, column or -1 per neuron
    bounds: list                      # per layer (L, U)
    n_binaries: int = 0

    @property
    def is_mip(self) -> bool:
        return isinstance(self.problem, MixedIntegerProgram)


def _first_stage_vars(builder: LpBuilder, polytope: FirstStagePolytope,
                      inv_costs: np.ndarray) -> np.ndarray:
    x_cols = builder.add_vars(polytope.n, obj=inv_costs, lb=polytope.lb,
                              ub=polytope.ub)
    for r in range(polytope.m):
        cols = np.flatnonzero(polytope.a[r])
        builder.add_row(x_cols[cols], polytope.a[r, cols], LE, polytope.b[r])
    return x_cols


def embed_linear(model: LinearSurrogate, polytope: FirstStagePolytope,
                 inv_costs) -> EmbeddedProblem:
    inv_costs = np.asarray(inv_costs, float)
    if model.beta.size != polytope.n or inv_costs.size != polytope.n:
        raise DimensionError("surrogate/cost dimension mismatch with polytope")
    builder = LpBuilder()
    x_cols = _first_stage_vars(builder, polytope, inv_costs)
    # valid lower bound over the box keeps mu finite for the dense engine
    lo = float(np.minimum(model.beta * polytope.lb, model.beta * polytope.ub).sum()
               + model.beta0)
    mu = builder.add_var(obj=1.0, lb=lo, ub=np.inf)
    # mu >= beta@x + beta0
    builder.add_row(list(x_cols) + [mu], list(model.beta) + [-1.0], LE,
                    -model.beta0)
    return EmbeddedProblem(problem=builder.build(), x_cols=x_cols,
                           mu_col=int(mu), h_cols=[], delta_cols=[], bounds=[])


def embed_mlp(model: MlpSurrogate, polytope: FirstStagePolytope,
              inv_costs) -> EmbeddedProblem:
    inv_costs = np.asarray(inv_costs, float)
    if model.layers[0][0].shape[1] != polytope.n:
        raise DimensionError("surrogate input dimension mismatch with polytope")
    layers = folded_layers(model)
    bounds = compute_activation_bounds(model, polytope.lb, polytope.ub)

    builder = LpBuilder()
    x_cols = _first_stage_vars(builder, polytope, inv_costs)
    prev_cols = x_cols
    h_cols_all = []
    delta_cols_all = []
    binaries = []

    for li, (w, b) in enumerate(layers[:-1]):
        zlo, zhi = bounds[li]
        width = w.shape[0]
        h_cols = builder.add_vars(width, obj=0.0, lb=0.0,
                                  ub=np.maximum(zhi, 0.0))
        deltas = np.full(width, -1, dtype=np.int64)
        for j in range(width):
            wj = w[j]
            nz = np.flatnonzero(wj)
            zcols = prev_cols[nz]
            zvals = wj[nz]
            if zhi[j] <= 0.0:
                builder.set_bounds(h_cols[j], ub=0.0)  # always inactive
                continue
            if zlo[j] >= 0.0:
                # always active: h = z, no binary
                builder.add_row([h_cols[j]] + list(zcols), [1.0] + list(-zvals),
                                EQ, b[j])
                continue
            d = builder.add_var(obj=0.0, lb=0.0, ub=1.0)
            deltas[j] = d
            binaries.append(d)
            # h >= z            : z - h <= 0
            builder.add_row(list(zcols) + [h_cols[j]], list(zvals) + [-1.0],
                            LE, -b[j])
            # h <= z - L(1-d)   : h - z - L d <= -L
            builder.add_row([h_cols[j]] + list(zcols) + [d],
                            [1.0] + list(-zvals) + [-zlo[j]], LE, b[j] - zlo[j])
            # h <= U d          : h - U d <= 0
            builder.add_row([h_cols[j], d], [1.0, -zhi[j]], LE, 0.0)
        h_cols_all.append(h_cols)
        delta_cols_all.append(deltas)
        prev_cols = h_cols

    w_out, b_out = layers[-1]
    out_lo, out_hi = bounds[-1]
    mu = builder.add_var(obj=1.0, lb=float(out_lo[0]), ub=np.inf)
    nz = np.flatnonzero(w_out[0])
    builder.add_row(list(prev_cols[nz]) + [mu], list(w_out[0][nz]) + [-1.0],
                    LE, -float(b_out[0]))
    lp = builder.build()
    problem = MixedIntegerProgram(lp=lp, binary=np.array(binaries, np.int64))
    return EmbeddedProblem(problem=problem, x_cols=x_cols, mu_col=int(mu),
                           h_cols=h_cols_all, delta_cols=delta_cols_all,
                           bounds=bounds, n_binaries=len(binaries))


def solve_plan(embedded: EmbeddedProblem, solver=None, gap_tol: float = 0.01,
               time_limit: float | None = None):
    """Solve the embedded problem; returns (plan, predicted objective, result)."""
    solver = solver or AutoSolver()
    if embedded.is_mip:
        res = solver.solve_milp(embedded.problem, gap_tol=gap_tol,
                                time_limit=time_limit)
    else:
        res = solver.solve_lp(embedded.problem)
    if res.status is SolveStatus.INFEASIBLE:
        return None, float("nan"), res
    if res.x is None:
        raise SolverError(f"surrogate planning solve failed: {res.status.value}")
    plan = InvestmentPlan(res.x[embedded.x_cols])
    return plan, float(res.objective), res
