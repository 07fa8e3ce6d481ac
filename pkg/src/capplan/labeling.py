"""Adaptive two-step labeling of sampled plans.

For each investment period, Step 1 re-estimates the expected production cost
over scenario indices 1..S0 at horizons H0, H0+dH, ... until the sample
coefficient of variation drops to the threshold; Step 2 then extends the
scenario set (indices S+1..S_hat, same settled horizon) if the confidence
interval on the mean is still too wide. The label is the sum of per-period
means. Scenario randomness is keyed by (seed, purpose, sample, period,
scenario index, horizon), so labels are reproducible for any worker count
and schedule.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from multiprocessing import get_context
from statistics import NormalDist

import numpy as np

from .errors import DimensionError, LabelingError
from .instances import scenario_params
from .model import InvestmentPlan, PlanningInstance, cumulative_capacity, evaluate_q
from .numerics import Moments
from .optimize import AutoSolver
from .rng import PURPOSE_TRAINING, StreamKey
from .textio import fmt


@dataclass(frozen=True)
class LabelConfig:
    s0: int = 5
    h0: int = 6
    dh: int = 6
    cv_tol: float = 0.05      # Step-1 threshold on the sample CV
    ci_tol: float = 0.1       # Step-2 tolerance on the relative CI half-width
    alpha: float = 0.05
    h_max: int = 168

    def __post_init__(self):
        if self.s0 < 2:
            raise LabelingError("initial scenario count must be >= 2")
        if self.h0 < 1 or self.dh < 1 or self.h_max < self.h0:
            raise LabelingError("horizon settings must be positive with h_max >= h0")
        for name in ("cv_tol", "ci_tol", "alpha"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise LabelingError(f"{name} must lie in (0, 1)")

    @property
    def z(self) -> float:
        return NormalDist().inv_cdf(1.0 - self.alpha / 2.0)


@dataclass
class PeriodStats:
    period_idx: int
    s_final: int
    horizon: int
    mean: float
    variance: float
    cv: float                # Step-1 exit value
    ci_halfwidth: float      # Step-1 value that gated Step 2
    step2_triggered: bool
    hmax_hit: bool
    lp_solves: int
    wall_time: float


@dataclass
class LabeledSample:
    sample_id: int
    plan: InvestmentPlan
    q_hat: float
    period_stats: list[PeriodStats]
    wall_time: float


@dataclass
class LabelDeps:
    """Everything a label computation needs besides the plan itself."""

    instance: PlanningInstance
    seed: int
    purpose: int = PURPOSE_TRAINING
    solver: object = None

    def __post_init__(self):
        if self.solver is None:
            self.solver = AutoSolver()
        self.params = scenario_params(self.instance)


def cv(total: float, total_sq: float, s: int) -> float:
    """Sample coefficient of variation from streaming Sum/SumSq."""
    if s < 2:
        raise LabelingError("CV needs at least two samples")
    qbar = total / s
    if qbar <= 0.0:
        raise LabelingError(f"non-positive mean cost {qbar!r}; label aborted")
    s2 = (total_sq - total * total / s) / (s - 1)
    return math.sqrt(max(s2, 0.0)) / qbar


def required_scenarios(qbar: float, s2: float, ci_tol: float, alpha: float,
                       s: int) -> int:
    """Scenario count needed for the CI half-width target, never below s."""
    if qbar <= 0.0:
        raise LabelingError("non-positive mean cost")
    z = NormalDist().inv_cdf(1.0 - alpha / 2.0)
    return max(math.ceil((z / ci_tol) ** 2 * s2 / (qbar * qbar)), s)


def estimator(plan: InvestmentPlan, period_idx: int, s_start: int, s_end: int,
              horizon: int, deps: LabelDeps, sample_id: int) -> Moments:
    """Solve one dispatch LP per scenario index in [s_start, s_end]; stream
    the discounted period costs into compensated Sum/SumSq moments."""
    if s_start > s_end:
        raise LabelingError("empty scenario range")
    from .scenarios import sample as sample_scenario

    v = cumulative_capacity(deps.instance, plan, period_idx)
    weight = deps.instance.period_weight(period_idx, horizon)
    mom = Moments()
    for s in range(s_start, s_end + 1):
        key = StreamKey(seed=deps.seed, purpose=deps.purpose, sample=sample_id,
                        period=period_idx, scenario=s)
        omega = sample_scenario(deps.params, key, horizon)
        q = weight * evaluate_q(deps.instance, v, omega, deps.solver)
        if not math.isfinite(q):
            raise LabelingError(f"non-finite cost at scenario {s}")
        mom.add(q)
    return mom


def _label_period(plan, period_idx, cfg, deps, sample_id):
    t0 = time.perf_counter()
    solves = 0
    s = cfg.s0
    horizon = cfg.h0
    hmax_hit = False
    while True:
        mom = estimator(plan, period_idx, 1, s, horizon, deps, sample_id)
        solves += s
        qbar = mom.mean()
        if qbar <= 0.0:
            raise LabelingError("non-positive mean cost; label aborted")
        s2 = mom.variance()
        delta = math.sqrt(s2) / qbar
        if not math.isfinite(delta):
            raise LabelingError("non-finite CV; label aborted")
        if delta <= cfg.cv_tol:
            break
        if horizon >= cfg.h_max:
            hmax_hit = True
            break
        horizon = min(horizon + cfg.dh, cfg.h_max)

    r = cfg.z * math.sqrt(s2) / (qbar * math.sqrt(s))
    step2 = False
    if r > cfg.ci_tol:
        s_hat = required_scenarios(qbar, s2, cfg.ci_tol, cfg.alpha, s)
        if s_hat > s:
            extra = estimator(plan, period_idx, s + 1, s_hat, horizon, deps, sample_id)
            solves += s_hat - s
            mom.merge(extra)
            s = s_hat
            qbar = mom.mean()
            s2 = mom.variance()
            step2 = True

    return qbar, PeriodStats(
        period_idx=period_idx, s_final=s, horizon=horizon, mean=qbar,
        variance=s2, cv=delta, ci_halfwidth=r, step2_triggered=step2,
        hmax_hit=hmax_hit, lp_solves=solves,
        wall_time=time.perf_counter() - t0)


def adaptive_label(plan: InvestmentPlan, deps: LabelDeps,
                   cfg: LabelConfig = LabelConfig(),
                   sample_id: int = 0) -> LabeledSample:
    """Label one plan: per-period adaptive estimation, summed across periods."""
    t0 = time.perf_counter()
    stats = []
    for t in range(deps.instance.n_periods):
        _, ps = _label_period(plan, t, cfg, deps, sample_id)
        stats.append(ps)
    # fsum: the label is invariant to period processing order
    q_hat = math.fsum(ps.mean for ps in stats)
    return LabeledSample(sample_id=sample_id, plan=plan, q_hat=q_hat,
                         period_stats=stats, wall_time=time.perf_counter() - t0)


def fixed_label(plan: InvestmentPlan, deps: LabelDeps, s: int, horizon: int,
                sample_id: int = 0) -> LabeledSample:
    """Non-adaptive label at a fixed (scenario count, horizon)."""
    t0 = time.perf_counter()
    stats = []
    for t in range(deps.instance.n_periods):
        tp = time.perf_counter()
        mom = estimator(plan, t, 1, s, horizon, deps, sample_id)
        qbar = mom.mean()
        s2 = mom.variance()
        delta = math.sqrt(s2) / qbar if qbar > 0 else math.inf
        r = NormalDist().inv_cdf(0.975) * math.sqrt(s2) / (qbar * math.sqrt(s))
        stats.append(PeriodStats(
            period_idx=t, s_final=s, horizon=horizon, mean=qbar, variance=s2,
            cv=delta, ci_halfwidth=r, step2_triggered=False, hmax_hit=False,
            lp_solves=s, wall_time=time.perf_counter() - tp))
    q_hat = math.fsum(ps.mean for ps in stats)
    return LabeledSample(sample_id=sample_id, plan=plan, q_hat=q_hat,
                         period_stats=stats, wall_time=time.perf_counter() - t0)


def _worker(args):
    idx, plan, instance, cfg, seed, purpose, fixed = args
    deps = LabelDeps(instance=instance, seed=seed, purpose=purpose)
    if fixed is None:
        return adaptive_label(plan, deps, cfg, sample_id=idx)
    s, horizon = fixed
    return fixed_label(plan, deps, s, horizon, sample_id=idx)


def label_many(plans, instance: PlanningInstance, cfg: LabelConfig, seed: int,
               workers: int = 1, purpose: int = PURPOSE_TRAINING,
               fixed: tuple[int, int] | None = None,
               sample_ids=None) -> list[LabeledSample]:
    """Label a batch of plans, optionally across processes.

    Results are bit-identical for any worker count: every scenario stream is
    keyed, and aggregation order follows the input order.
    """
    ids = list(sample_ids) if sample_ids is not None else list(range(len(plans)))
    args = [(i, p, instance, cfg, seed, purpose, fixed)
            for i, p in zip(ids, plans)]
    if workers <= 1:
        return [_worker(a) for a in args]
    ctx = get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        return pool.map(_worker, args, chunksize=1)


def save_labels(labels: list[LabeledSample], path) -> None:
    """Columnar labeled dataset. Wall times are deliberately excluded so the
    file is a pure function of (instance, plans, config, seed)."""
    if not labels:
        raise ValueError("no labels to save")
    n = labels[0].plan.x.size
    n_t = len(labels[0].period_stats)
    cols = ["plan_id"] + [f"x{j}" for j in range(n)] + ["q_hat"]
    for t in range(n_t):
        cols += [f"t{t}_s", f"t{t}_h", f"t{t}_mean", f"t{t}_var", f"t{t}_cv",
                 f"t{t}_ci", f"t{t}_step2", f"t{t}_hmax"]
    with open(path, "w") as fh:
        fh.write(f"# capplan-labels/1\tcount={len(labels)}\n")
        fh.write("\t".join(cols) + "\n")
        for lab in labels:
            row = [str(lab.sample_id)] + [fmt(v) for v in lab.plan.x] + [fmt(lab.q_hat)]
            for ps in lab.period_stats:
                row += [str(ps.s_final), str(ps.horizon), fmt(ps.mean),
                        fmt(ps.variance), fmt(ps.cv), fmt(ps.ci_halfwidth),
                        str(int(ps.step2_triggered)), str(int(ps.hmax_hit))]
            fh.write("\t".join(row) + "\n")


def load_labels(path):
    """Returns (x matrix, q_hat vector, list of per-period stat dicts)."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("# capplan-labels/1"):
            raise DimensionError("not a capplan labeled dataset")
        cols = fh.readline().rstrip("\n").split("\t")
        n = sum(1 for c in cols if c.startswith("x"))
        xs, ys, stats = [], [], []
        for line in fh:
            parts = line.rstrip("\n").split("\t")
            xs.append([float(v) for v in parts[1:1 + n]])
            ys.append(float(parts[1 + n]))
            stats.append(dict(zip(cols[2 + n:], parts[2 + n:])))
    return np.array(xs), np.array(ys), stats
