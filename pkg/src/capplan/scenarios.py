"""Seeded synthetic scenario generation.

A scenario is a joint draw of hourly demand per node and availability per
generator over a requested horizon. Each draw starts at a random offset into
the year and evaluates diurnal/seasonal patterns at absolute hours from that
offset, the synthetic counterpart of sampling operational windows from
history; noise rides on top as stationary AR(1) processes. Every scenario is
a pure function of (params, stream key, horizon).
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import InstanceError
from .textio import fmt
from .rng import StreamKey, generator

HOURS_PER_YEAR = 8760


@dataclass(frozen=True)
class ScenarioParams:
    """Knobs of the synthetic joint distribution, stored in the instance file."""

    nodes: tuple[str, ...]
    node_base_demand: tuple[float, ...]      # MW at period 0
    demand_growth: float = 0.25              # per-period multiplicative growth
    gen_profiles: tuple[str, ...] = ()       # per generation candidate, in order
    diurnal_amplitude: float = 0.22
    seasonal_amplitude: float = 0.0
    peak_hour: int = 18
    ar_coeff: float = 0.85
    demand_sigma: float = 0.06
    wind_mean: float = 0.40
    wind_diurnal_amplitude: float = 0.10
    wind_sigma: float = 0.10
    solar_clearness: float = 0.85
    solar_sigma: float = 0.15
    thermal_base: float = 0.97
    outage_rate: float = 0.004
    outage_persistence: float = 0.5
    outage_depth: float = 0.5

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioParams":
        d = dict(d)
        for key in ("nodes", "node_base_demand", "gen_profiles"):
            d[key] = tuple(d[key])
        return cls(**d)


@dataclass(frozen=True)
class Scenario:
    horizon: int
    demand: np.ndarray        # (n_nodes, H), MW
    availability: np.ndarray  # (n_gen, H), in [0, 1]
    key: StreamKey
    start_hour: int = 0

    def __post_init__(self):
        if self.demand.shape[1] != self.horizon or self.availability.shape[1] != self.horizon:
            raise InstanceError("scenario series length != horizon")


def _ar1(g: np.ndarray, sigma: float, phi: float) -> np.ndarray:
    """Stationary AR(1) path with marginal std sigma, driven by N(0,1) draws g."""
    h = g.size
    e = np.empty(h)
    if h == 0:
        return e
    e[0] = sigma * g[0]
    step = sigma * np.sqrt(max(0.0, 1.0 - phi * phi))
    for t in range(1, h):
        e[t] = phi * e[t - 1] + step * g[t]
    return e


def sample(params: ScenarioParams, key: StreamKey, horizon: int) -> Scenario:
    """Draw one scenario; deterministic in (params, key, horizon).

    The stream key must carry the horizon so that draws for the same scenario
    index at different horizons are independent (no prefix reuse).
    """
    if horizon < 1:
        raise InstanceError("horizon must be >= 1 hour")
    key = StreamKey(seed=key.seed, purpose=key.purpose, sample=key.sample,
                    period=key.period, scenario=key.scenario, horizon=horizon)
    g = generator(key)
    start = int(g.integers(0, HOURS_PER_YEAR))
    habs = start + np.arange(horizon)
    hod = habs % 24

    diurnal = 1.0 + params.diurnal_amplitude * np.cos(
        2.0 * np.pi * (habs - params.peak_hour) / 24.0)
    seasonal = 1.0 + params.seasonal_amplitude * np.cos(
        2.0 * np.pi * habs / HOURS_PER_YEAR)
    pattern = diurnal * seasonal

    scale_t = (1.0 + params.demand_growth) ** key.period
    n_nodes = len(params.nodes)
    demand = np.empty((n_nodes, horizon))
    sig = params.demand_sigma
    for n in range(n_nodes):
        noise = _ar1(g.standard_normal(horizon), sig, params.ar_coeff)
        lognorm = np.exp(noise - 0.5 * sig * sig)
        demand[n] = params.node_base_demand[n] * scale_t * pattern * lognorm
    np.maximum(demand, 0.0, out=demand)

    n_gen = len(params.gen_profiles)
    avail = np.empty((n_gen, horizon))
    for k, profile in enumerate(params.gen_profiles):
        if profile == "wind":
            det = params.wind_mean + params.wind_diurnal_amplitude * np.cos(
                2.0 * np.pi * (habs - 2.0) / 24.0)
            noise = _ar1(g.standard_normal(horizon), params.wind_sigma, params.ar_coeff)
            avail[k] = det + noise
        elif profile == "solar":
            daylight = np.maximum(0.0, np.sin(np.pi * (hod - 6.0) / 12.0))
            noise = _ar1(g.standard_normal(horizon), params.solar_sigma, params.ar_coeff)
            avail[k] = (params.solar_clearness + noise) * daylight
        elif profile == "thermal":
            u = g.random(horizon)
            out = np.empty(horizon, dtype=bool)
            state = False
            for t in range(horizon):
                state = (u[t] < params.outage_persistence) if state \
                    else (u[t] < params.outage_rate)
                out[t] = state
            avail[k] = np.where(out, params.thermal_base * (1.0 - params.outage_depth),
                                params.thermal_base)
        elif profile == "flat":
            avail[k] = 1.0
        else:
            raise InstanceError(f"unknown availability profile {profile!r}")
    np.clip(avail, 0.0, 1.0, out=avail)

    return Scenario(horizon=horizon, demand=demand, availability=avail,
                    key=key, start_hour=start)


def dump_columnar(scenario: Scenario, params: ScenarioParams, gen_names, path) -> None:
    """Write (hour, series id, value) rows for inspection/plotting."""
    with open(path, "w") as fh:
        fh.write("hour\tseries\tvalue\n")
        for n, node in enumerate(params.nodes):
            for t in range(scenario.horizon):
                fh.write(f"{t}\tdemand:{node}\t{fmt(scenario.demand[n, t])}\n")
        for k, name in enumerate(gen_names):
            for t in range(scenario.horizon):
                fh.write(f"{t}\tavailability:{name}\t{fmt(scenario.availability[k, t])}\n")
