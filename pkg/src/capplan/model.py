"""Planning-instance data model and the hourly production-cost LP.

The first stage decides MW investments x indexed by (candidate, period); the
second stage dispatches generation, transmission flows, storage, and load
shedding over a horizon of chronological hours for one scenario. Load-shed
variables give complete recourse: the dispatch LP is feasible for every
capacity vector and scenario.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InstanceError, SolverError
from .optimize import EQ, LE, LinearProgram, LpBuilder, SolveStatus

GENERATION = "generation"
TRANSMISSION = "transmission"
STORAGE = "storage"
TECHNOLOGIES = (GENERATION, TRANSMISSION, STORAGE)

HOURS_PER_YEAR = 8760.0


@dataclass(frozen=True)
class Candidate:
    """One investable asset: a generator, a line, or a storage unit."""

    name: str
    tech: str
    node: str
    inv_cost: tuple[float, ...]        # currency/MW per period
    lifetime: int                      # periods the build stays available
    preexisting: tuple[float, ...]     # MW per period
    node_to: str | None = None         # transmission only
    marginal_cost: float = 0.0         # currency/MWh, generation only
    ramp_frac: float | None = None     # MW/h per MW of capacity, generation only
    profile: str = "flat"              # availability profile key
    round_trip_eff: float = 1.0        # storage only
    energy_power_ratio: float = 0.0    # hours of storage at full power

    def __post_init__(self):
        if self.tech not in TECHNOLOGIES:
            raise InstanceError(f"unknown technology {self.tech!r}")
        if self.lifetime < 1:
            raise InstanceError(f"{self.name}: lifetime must be >= 1 period")
        if min(self.inv_cost) < 0 or min(self.preexisting) < 0:
            raise InstanceError(f"{self.name}: costs and preexisting capacity must be >= 0")
        if self.tech == TRANSMISSION and not self.node_to:
            raise InstanceError(f"{self.name}: transmission needs node_to")
        if self.tech == STORAGE and not (0 < self.round_trip_eff <= 1):
            raise InstanceError(f"{self.name}: round-trip efficiency in (0, 1]")


@dataclass(frozen=True)
class FirstStagePolytope:
    """Coupling constraints A x <= b plus the box l <= x <= u."""

    a: np.ndarray
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, float))
        if a.size == 0:
            a = a.reshape(0, np.asarray(self.lb).size)
        b = np.asarray(self.b, float)
        lb = np.asarray(self.lb, float)
        ub = np.asarray(self.ub, float)
        if a.shape != (b.size, lb.size) or lb.shape != ub.shape:
            raise DimensionError("polytope dimensions inconsistent")
        if np.any(lb > ub):
            raise InstanceError("polytope has lb > ub")
        if a.shape[0] and not np.all(np.abs(a).sum(axis=1) > 0):
            raise InstanceError("polytope has an all-zero row")
        for name, val in (("a", a), ("b", b), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.lb.size

    @property
    def m(self) -> int:
        return self.b.size

    def nonneg_guarantee(self) -> bool:
        """True when the sampler's always-feasible precondition holds."""
        return (np.all(self.lb == 0.0) and np.all(self.a >= 0.0)
                and np.all(self.b >= 0.0) and np.all(self.ub >= 0.0))


@dataclass(frozen=True)
class PlanningInstance:
    name: str
    periods: tuple[int, ...]           # calendar years
    years_per_period: int
    nodes: tuple[str, ...]
    candidates: tuple[Candidate, ...]
    polytope: FirstStagePolytope
    load_shed_cost: float
    discount_rate: float
    scenario_params: dict = field(default_factory=dict)

    def __post_init__(self):
        if list(self.periods) != sorted(self.periods):
            raise InstanceError("periods must be increasing years")
        n_t = len(self.periods)
        for c in self.candidates:
            if len(c.inv_cost) != n_t or len(c.preexisting) != n_t:
                raise InstanceError(f"{c.name}: per-period arrays must have {n_t} entries")
            if c.tech == GENERATION and c.marginal_cost >= self.load_shed_cost:
                raise InstanceError("load-shed cost must exceed every marginal cost")
            if c.node not in self.nodes or (c.node_to and c.node_to not in self.nodes):
                raise InstanceError(f"{c.name}: unknown node")
        if self.polytope.n != self.n_vars:
            raise DimensionError(
                f"polytope has {self.polytope.n} columns, expected {self.n_vars}")

    @property
    def n_periods(self) -> int:
        return len(self.periods)

    @property
    def n_vars(self) -> int:
        return len(self.candidates) * len(self.periods)

    def var_index(self, cand_idx: int, period_idx: int) -> int:
        return cand_idx * self.n_periods + period_idx

    def tech_indices(self, tech: str) -> list[int]:
        return [i for i, c in enumerate(self.candidates) if c.tech == tech]

    @property
    def generators(self) -> list[int]:
        return self.tech_indices(GENERATION)

    @property
    def lines(self) -> list[int]:
        return self.tech_indices(TRANSMISSION)

    @property
    def storages(self) -> list[int]:
        return self.tech_indices(STORAGE)

    def discount(self, period_idx: int) -> float:
        years = self.periods[period_idx] - self.periods[0]
        return (1.0 + self.discount_rate) ** (-years)

    def period_weight(self, period_idx: int, horizon: int) -> float:
        """Scale a raw |H|-hour cost to the discounted cost of one period.

        Annualizes per hour (8760/|H|), multiplies by the represented years,
        and discounts to the first period's year.
        """
        return (self.discount(period_idx) * self.years_per_period
                * HOURS_PER_YEAR / float(horizon))

    def discounted_inv_costs(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for i, cand in enumerate(self.candidates):
            for t in range(self.n_periods):
                c[self.var_index(i, t)] = self.discount(t) * cand.inv_cost[t]
        return c


@dataclass(frozen=True)
class InvestmentPlan:
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, float))

    def check_feasible(self, instance: PlanningInstance, raise_on_fail: bool = True) -> bool:
        poly = instance.polytope
        if self.x.shape != (poly.n,):
            raise DimensionError(f"plan has {self.x.size} entries, expected {poly.n}")
        tol = 1e-9 * max(1.0, float(np.abs(poly.b).max(initial=0.0)))
        ok = (np.all(self.x >= poly.lb - tol) and np.all(self.x <= poly.ub + tol)
              and np.all(poly.a @ self.x <= poly.b + tol))
        if not ok and raise_on_fail:
            raise InstanceError("investment plan violates the first-stage polytope")
        return bool(ok)


def cumulative_capacity(instance: PlanningInstance, plan: InvestmentPlan,
                        period_idx: int) -> np.ndarray:
    """Available MW per candidate in the given period: preexisting plus all
    builds in the trailing lifetime window (index arithmetic, window
    [t - l_i, t] inclusive)."""
    if not 0 <= period_idx < instance.n_periods:
        raise InstanceError(f"unknown period index {period_idx}")
    x = plan.x
    if x.shape != (instance.n_vars,):
        raise DimensionError("plan dimension mismatch")
    v = np.zeros(len(instance.candidates))
    for i, cand in enumerate(instance.candidates):
        first = max(0, period_idx - cand.lifetime)
        builds = sum(x[instance.var_index(i, t)] for t in range(first, period_idx + 1))
        v[i] = cand.preexisting[period_idx] + builds
    return v


def capacity_links(instance: PlanningInstance, period_idx: int):
    """Affine form of cumulative capacity per candidate: (x columns, constant)."""
    links = []
    for i, cand in enumerate(instance.candidates):
        first = max(0, period_idx - cand.lifetime)
        cols = [instance.var_index(i, t) for t in range(first, period_idx + 1)]
        links.append((cols, cand.preexisting[period_idx]))
    return links


def investment_cost(instance: PlanningInstance, plan: InvestmentPlan) -> float:
    x = plan.x
    if x.shape != (instance.n_vars,):
        raise DimensionError("plan dimension mismatch")
    return float(instance.discounted_inv_costs() @ x)


@dataclass
class OperationalLp:
    """Second-stage dispatch LP for one (capacity vector, scenario) pair."""

    lp: LinearProgram
    basis_hint: np.ndarray
    gen_vars: np.ndarray     # (n_gen, H)
    flow_vars: np.ndarray    # (n_line, H)
    shed_vars: np.ndarray    # (n_node, H)


def _dispatch_columns(builder: LpBuilder, instance, scenario, weight: float):
    """Create one horizon of dispatch variables; returns the column maps."""
    h = scenario.horizon
    gens = instance.generators
    lines = instance.lines
    stors = instance.storages
    n_nodes = len(instance.nodes)

    gen_cols = np.empty((len(gens), h), dtype=np.int64)
    for k, i in enumerate(gens):
        mc = instance.candidates[i].marginal_cost
        gen_cols[k] = builder.add_vars(h, obj=weight * mc, lb=0.0, ub=np.inf)
    flow_cols = np.empty((len(lines), h), dtype=np.int64)
    for k, _ in enumerate(lines):
        flow_cols[k] = builder.add_vars(h, obj=0.0, lb=-np.inf, ub=np.inf)
    ch_cols = np.empty((len(stors), h), dtype=np.int64)
    dis_cols = np.empty((len(stors), h), dtype=np.int64)
    soc_cols = np.empty((len(stors), h), dtype=np.int64)
    for k, _ in enumerate(stors):
        ch_cols[k] = builder.add_vars(h, obj=0.0, lb=0.0, ub=np.inf)
        dis_cols[k] = builder.add_vars(h, obj=0.0, lb=0.0, ub=np.inf)
        soc_cols[k] = builder.add_vars(h, obj=0.0, lb=0.0, ub=np.inf)
    shed_cols = np.empty((n_nodes, h), dtype=np.int64)
    for k in range(n_nodes):
        shed_cols[k] = builder.add_vars(h, obj=weight * instance.load_shed_cost,
                                        lb=0.0, ub=np.inf)
    return gen_cols, flow_cols, ch_cols, dis_cols, soc_cols, shed_cols


def add_operational_block(builder: LpBuilder, instance: PlanningInstance,
                          scenario, capacity=None, links=None,
                          weight: float = 1.0):
    """Append one scenario's dispatch block to a builder.

    Exactly one of `capacity` (fixed MW vector per candidate; bounds stay
    bounds) or `links` (affine cumulative-capacity expressions over first-
    stage columns; capacity limits become rows) must be given.

    Returns (row hints, column maps) where row hints pair each created row
    with its natural starting basic column (-1 = the row's slack).
    """
    if (capacity is None) == (links is None):
        raise ValueError("give exactly one of capacity= or links=")
    fixed = capacity is not None
    h = scenario.horizon
    if scenario.demand.shape != (len(instance.nodes), h):
        raise InstanceError("scenario node set inconsistent with instance")

    gens = instance.generators
    lines = instance.lines
    stors = instance.storages
    cands = instance.candidates

    cols = _dispatch_columns(builder, instance, scenario, weight)
    gen_cols, flow_cols, ch_cols, dis_cols, soc_cols, shed_cols = cols
    hints = []

    def cap_terms(i):
        # returns (x columns, coeff sign convention +1, constant part)
        if fixed:
            return [], capacity[i]
        return links[i]

    def cap_max(i):
        # largest capacity reachable over the box: valid static var bounds
        if fixed:
            return capacity[i]
        xcols, const = links[i]
        return const + sum(builder.get_ub(c) for c in xcols)

    # capacity limits
    for k, i in enumerate(gens):
        rho = scenario.availability[k]
        xcols, const = cap_terms(i)
        for t in range(h):
            if fixed:
                builder.set_bounds(gen_cols[k, t], ub=rho[t] * const)
            else:
                builder.set_bounds(gen_cols[k, t], ub=cap_max(i))
                builder.add_row([gen_cols[k, t]] + list(xcols),
                                [1.0] + [-rho[t]] * len(xcols), LE, rho[t] * const)
                hints.append(-1)
    for k, i in enumerate(lines):
        xcols, const = cap_terms(i)
        for t in range(h):
            if fixed:
                builder.set_bounds(flow_cols[k, t], lb=-const, ub=const)
            else:
                vmax = cap_max(i)
                builder.set_bounds(flow_cols[k, t], lb=-vmax, ub=vmax)
                builder.add_row([flow_cols[k, t]] + list(xcols),
                                [1.0] + [-1.0] * len(xcols), LE, const)
                hints.append(-1)
                builder.add_row([flow_cols[k, t]] + list(xcols),
                                [-1.0] + [-1.0] * len(xcols), LE, const)
                hints.append(-1)
    for k, i in enumerate(stors):
        ep = cands[i].energy_power_ratio
        xcols, const = cap_terms(i)
        for t in range(h):
            if fixed:
                builder.set_bounds(ch_cols[k, t], ub=const)
                builder.set_bounds(dis_cols[k, t], ub=const)
                builder.set_bounds(soc_cols[k, t], ub=ep * const)
            else:
                vmax = cap_max(i)
                builder.set_bounds(ch_cols[k, t], ub=vmax)
                builder.set_bounds(dis_cols[k, t], ub=vmax)
                builder.set_bounds(soc_cols[k, t], ub=ep * vmax)
                builder.add_row([ch_cols[k, t]] + list(xcols),
                                [1.0] + [-1.0] * len(xcols), LE, const)
                hints.append(-1)
                builder.add_row([dis_cols[k, t]] + list(xcols),
                                [1.0] + [-1.0] * len(xcols), LE, const)
                hints.append(-1)
                builder.add_row([soc_cols[k, t]] + list(xcols),
                                [1.0] + [-ep] * len(xcols), LE, ep * const)
                hints.append(-1)

    # power balance per node per hour
    node_of = {n: idx for idx, n in enumerate(instance.nodes)}
    for nn in range(len(instance.nodes)):
        in_lines = [k for k, i in enumerate(lines) if node_of[cands[i].node_to] == nn]
        out_lines = [k for k, i in enumerate(lines) if node_of[cands[i].node] == nn]
        node_gens = [k for k, i in enumerate(gens) if node_of[cands[i].node] == nn]
        node_stors = [k for k, i in enumerate(stors) if node_of[cands[i].node] == nn]
        for t in range(h):
            rcols = [gen_cols[k, t] for k in node_gens]
            rvals = [1.0] * len(node_gens)
            rcols += [flow_cols[k, t] for k in in_lines]
            rvals += [1.0] * len(in_lines)
            rcols += [flow_cols[k, t] for k in out_lines]
            rvals += [-1.0] * len(out_lines)
            rcols += [dis_cols[k, t] for k in node_stors]
            rvals += [1.0] * len(node_stors)
            rcols += [ch_cols[k, t] for k in node_stors]
            rvals += [-1.0] * len(node_stors)
            rcols.append(shed_cols[nn, t])
            rvals.append(1.0)
            builder.add_row(rcols, rvals, EQ, scenario.demand[nn, t])
            hints.append(int(shed_cols[nn, t]))

    # storage dynamics: soc_t = soc_{t-1} + eff*ch - dis, cyclic at half energy
    for k, i in enumerate(stors):
        eff = cands[i].round_trip_eff
        ep = cands[i].energy_power_ratio
        xcols, const = cap_terms(i)
        half = 0.5 * ep
        for t in range(h):
            rcols = [soc_cols[k, t], ch_cols[k, t], dis_cols[k, t]]
            rvals = [1.0, -eff, 1.0]
            if t > 0:
                rcols.append(soc_cols[k, t - 1])
                rvals.append(-1.0)
                builder.add_row(rcols, rvals, EQ, 0.0)
            elif fixed:
                builder.add_row(rcols, rvals, EQ, half * const)
            else:
                builder.add_row(rcols + list(xcols), rvals + [-half] * len(xcols),
                                EQ, half * const)
            hints.append(int(soc_cols[k, t]))
        # return to the initial state of charge at the end of the horizon
        if fixed:
            builder.set_bounds(soc_cols[k, h - 1], lb=half * const, ub=half * const)
        else:
            builder.add_row([soc_cols[k, h - 1]] + list(xcols),
                            [1.0] + [-half] * len(xcols), EQ, half * const)
            hints.append(None)  # no natural basic column; solver runs phase 1

    # ramp-up limits on dispatchable generation (down-moves stay free so an
    # availability drop can never make the dispatch infeasible)
    for k, i in enumerate(gens):
        r = cands[i].ramp_frac
        if r is None:
            continue
        xcols, const = cap_terms(i)
        for t in range(1, h):
            if fixed:
                builder.add_row([gen_cols[k, t], gen_cols[k, t - 1]],
                                [1.0, -1.0], LE, r * const)
            else:
                builder.add_row([gen_cols[k, t], gen_cols[k, t - 1]] + list(xcols),
                                [1.0, -1.0] + [-r] * len(xcols), LE, r * const)
            hints.append(-1)

    return hints, cols


def build_second_stage(instance: PlanningInstance, v: np.ndarray,
                       scenario) -> OperationalLp:
    """Dispatch LP for fixed cumulative capacities v and one scenario."""
    v = np.asarray(v, float)
    if v.shape != (len(instance.candidates),):
        raise DimensionError("capacity vector dimension mismatch")
    if np.any(v < 0):
        raise InstanceError("capacities must be nonnegative")
    if scenario.horizon < 1:
        raise InstanceError("scenario horizon must be >= 1 hour")
    builder = LpBuilder()
    hints, cols = add_operational_block(builder, instance, scenario, capacity=v)
    gen_cols, flow_cols, _, _, _, shed_cols = cols
    lp = builder.build()
    hint = np.array([-1 if hh is None else hh for hh in hints], dtype=np.int64)
    return OperationalLp(lp=lp, basis_hint=hint, gen_vars=gen_cols,
                         flow_vars=flow_cols, shed_vars=shed_cols)


def evaluate_q(instance: PlanningInstance, v: np.ndarray, scenario,
               solver) -> float:
    """Optimal raw production cost over the scenario's horizon (currency)."""
    op = build_second_stage(instance, v, scenario)
    res = solver.solve_lp(op.lp, basis_hint=op.basis_hint)
    if res.status is not SolveStatus.OPTIMAL:
        raise SolverError(
            f"second-stage solve ended with status {res.status.value}")
    return res.objective
