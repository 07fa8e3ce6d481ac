"""CPLEX LP-format text export for cross-checking against external solvers."""

from __future__ import annotations

import numpy as np

from ..textio import fmt
from .lp import EQ, GE, LinearProgram, MixedIntegerProgram


def _term(coeff: float, name: str, first: bool) -> str:
    sign = "-" if coeff < 0 else ("" if first else "+")
    return f" {sign} {fmt(abs(coeff))} {name}" if not first else f"{sign}{fmt(abs(coeff))} {name}"


def _expr(cols, vals) -> str:
    parts = []
    first = True
    for c, v in zip(cols, vals):
        if v == 0.0:
            continue
        parts.append(_term(v, f"x{c}", first))
        first = False
    return "".join(parts) if parts else "0 x0"


def write_lp(problem, path) -> None:
    """Write a LinearProgram or MixedIntegerProgram in CPLEX LP format."""
    if isinstance(problem, MixedIntegerProgram):
        lp, binary = problem.lp, problem.binary
    else:
        lp, binary = problem, np.empty(0, dtype=int)

    a = lp.a.tocsr()
    lines = ["Minimize", " obj: " + _expr(range(lp.n), lp.c), "Subject To"]
    for i in range(lp.m):
        cols = a.indices[a.indptr[i]:a.indptr[i + 1]]
        vals = a.data[a.indptr[i]:a.indptr[i + 1]]
        op = {EQ: "=", GE: ">="}.get(int(lp.senses[i]), "<=")
        lines.append(f" c{i}: " + _expr(cols, vals) + f" {op} {fmt(lp.b[i])}")
    lines.append("Bounds")
    for j in range(lp.n):
        ub = "+inf" if np.isinf(lp.ub[j]) else fmt(lp.ub[j])
        lines.append(f" {fmt(lp.lb[j])} <= x{j} <= {ub}")
    if binary.size:
        lines.append("Binaries")
        lines.append(" " + " ".join(f"x{j}" for j in binary))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
