"""Synthetic planning instances and the instance file format.

The parametric generator builds desk-scale grids: N nodes, per-node thermal
plus renewable candidates, a transshipment line chain, one storage candidate
per node, and budget-style coupling constraints with nonnegative
coefficients (so the constraint-propagation sampler's feasibility guarantee
applies). See docs/FORMATS.md for the file schema.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import InstanceError
from .model import (Candidate, FirstStagePolytope, GENERATION, PlanningInstance,
                    STORAGE, TRANSMISSION)
from .scenarios import ScenarioParams

FORMAT_VERSION = "capplan-instance/1"

_BASE_DEMAND = (90.0, 70.0, 50.0, 80.0, 60.0, 100.0)
_THERMAL_MC = (45.0, 40.0, 50.0, 42.0, 48.0, 38.0)


def default_instance(n_nodes: int = 3, n_periods: int = 3,
                     start_year: int = 2030, years_per_period: int = 5,
                     demand_growth: float = 0.25) -> PlanningInstance:
    """The reference synthetic system used across tests and the CLI."""
    if n_nodes < 1 or n_periods < 1:
        raise InstanceError("need at least one node and one period")
    nodes = tuple(f"N{i + 1}" for i in range(n_nodes))
    periods = tuple(start_year + years_per_period * t for t in range(n_periods))

    def per_period(base, decline=0.0):
        return tuple(base * (1.0 - decline) ** t for t in range(n_periods))

    candidates = []
    profiles = []
    for i, node in enumerate(nodes):
        base = _BASE_DEMAND[i % len(_BASE_DEMAND)]
        candidates.append(Candidate(
            name=f"thermal-{node}", tech=GENERATION, node=node,
            inv_cost=per_period(800_000.0, 0.02), lifetime=1,
            preexisting=(1.15 * base,) * n_periods,
            marginal_cost=_THERMAL_MC[i % len(_THERMAL_MC)],
            ramp_frac=0.35, profile="thermal"))
        profiles.append("thermal")
        renewable = "wind" if i % 2 == 0 else "solar"
        candidates.append(Candidate(
            name=f"{renewable}-{node}", tech=GENERATION, node=node,
            inv_cost=per_period(1_100_000.0, 0.05), lifetime=n_periods + 1,
            preexisting=(0.25 * base,) * n_periods,
            marginal_cost=2.0, ramp_frac=None, profile=renewable))
        profiles.append(renewable)
    for i in range(n_nodes - 1):
        candidates.append(Candidate(
            name=f"line-{nodes[i]}-{nodes[i + 1]}", tech=TRANSMISSION,
            node=nodes[i], node_to=nodes[i + 1],
            inv_cost=per_period(400_000.0), lifetime=n_periods + 1,
            preexisting=(20.0,) * n_periods))
    for node in nodes:
        candidates.append(Candidate(
            name=f"storage-{node}", tech=STORAGE, node=node,
            inv_cost=per_period(300_000.0, 0.04), lifetime=n_periods + 1,
            preexisting=(0.0,) * n_periods,
            round_trip_eff=0.85, energy_power_ratio=4.0))

    n_cand = len(candidates)
    n = n_cand * n_periods
    ub = np.zeros(n)
    per_cand_ub = {GENERATION: 30.0, TRANSMISSION: 20.0, STORAGE: 15.0}
    for i, cand in enumerate(candidates):
        ub[i * n_periods:(i + 1) * n_periods] = per_cand_ub[cand.tech]

    rows = []
    rhs = []
    # per-period total new-build budget; binds only against collectively
    # high draws so sampled plans still span low and high build totals
    per_period_box = sum(per_cand_ub[c.tech] for c in candidates)
    budget_t = round(0.8 * per_period_box)
    for t in range(n_periods):
        row = np.zeros(n)
        row[t::n_periods] = 1.0
        rows.append(row)
        rhs.append(budget_t)
    # per-technology cumulative caps across all periods
    tech_cap = {
        GENERATION: round(0.65 * 30.0 * n_periods) * sum(
            1 for c in candidates if c.tech == GENERATION),
        TRANSMISSION: round(0.85 * 20.0 * n_periods) * max(1, n_nodes - 1),
        STORAGE: round(0.85 * 15.0 * n_periods) * n_nodes,
    }
    for tech, cap in tech_cap.items():
        row = np.zeros(n)
        for i, cand in enumerate(candidates):
            if cand.tech == tech:
                row[i * n_periods:(i + 1) * n_periods] = 1.0
        if row.any():
            rows.append(row)
            rhs.append(cap)
    polytope = FirstStagePolytope(a=np.array(rows), b=np.array(rhs),
                                  lb=np.zeros(n), ub=ub)

    params = ScenarioParams(
        nodes=nodes,
        node_base_demand=tuple(_BASE_DEMAND[i % len(_BASE_DEMAND)] for i in range(n_nodes)),
        demand_growth=demand_growth,
        gen_profiles=tuple(profiles),
    )
    return PlanningInstance(
        name=f"synthetic-{n_nodes}node",
        periods=periods,
        years_per_period=years_per_period,
        nodes=nodes,
        candidates=tuple(candidates),
        polytope=polytope,
        load_shed_cost=600.0,
        discount_rate=0.06,
        scenario_params=params.to_dict(),
    )


def scenario_params(instance: PlanningInstance) -> ScenarioParams:
    return ScenarioParams.from_dict(instance.scenario_params)


def save_instance(instance: PlanningInstance, path) -> None:
    doc = {
        "format": FORMAT_VERSION,
        "name": instance.name,
        "periods": list(instance.periods),
        "years_per_period": instance.years_per_period,
        "discount_rate": instance.discount_rate,
        "load_shed_cost": instance.load_shed_cost,
        "nodes": list(instance.nodes),
        "candidates": [
            {
                "name": c.name, "tech": c.tech, "node": c.node,
                "node_to": c.node_to,
                "inv_cost": list(c.inv_cost), "lifetime": c.lifetime,
                "preexisting": list(c.preexisting),
                "marginal_cost": c.marginal_cost,
                "ramp_frac": c.ramp_frac, "profile": c.profile,
                "round_trip_eff": c.round_trip_eff,
                "energy_power_ratio": c.energy_power_ratio,
            }
            for c in instance.candidates
        ],
        "polytope": {
            "a": instance.polytope.a.tolist(),
            "b": instance.polytope.b.tolist(),
            "lb": instance.polytope.lb.tolist(),
            "ub": instance.polytope.ub.tolist(),
        },
        "scenario_params": instance.scenario_params,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_instance(path) -> PlanningInstance:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_VERSION:
        raise InstanceError(f"unsupported instance format {doc.get('format')!r}")
    candidates = tuple(
        Candidate(
            name=c["name"], tech=c["tech"], node=c["node"], node_to=c["node_to"],
            inv_cost=tuple(c["inv_cost"]), lifetime=c["lifetime"],
            preexisting=tuple(c["preexisting"]),
            marginal_cost=c["marginal_cost"], ramp_frac=c["ramp_frac"],
            profile=c["profile"], round_trip_eff=c["round_trip_eff"],
            energy_power_ratio=c["energy_power_ratio"],
        )
        for c in doc["candidates"]
    )
    poly = doc["polytope"]
    return PlanningInstance(
        name=doc["name"],
        periods=tuple(doc["periods"]),
        years_per_period=doc["years_per_period"],
        nodes=tuple(doc["nodes"]),
        candidates=candidates,
        polytope=FirstStagePolytope(a=np.array(poly["a"]), b=np.array(poly["b"]),
                                    lb=np.array(poly["lb"]), ub=np.array(poly["ub"])),
        load_shed_cost=doc["load_shed_cost"],
        discount_rate=doc["discount_rate"],
        scenario_params=doc["scenario_params"],
    )
