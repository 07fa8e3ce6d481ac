"""End-to-end pipeline: sample, label, train, embed, solve, validate.

Every stage writes its artifact into the run directory and the manifest
records a content hash per file, the seeds, and wall-clock timings. Rerunning
with the same config and any worker count reproduces every hashed file
bit for bit (timings are kept out of hashed artifacts).
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (PhConfig, ScenarioSet, default_benchmark_horizon,
                        extensive_form, progressive_hedging)
from .embedding import embed_linear, embed_mlp, solve_plan
from .errors import CapplanError, ConfigError
from .evaluate import optimality_gap, save_trajectory, validate_plan
from .instances import default_instance, load_instance, save_instance
from .labeling import (LabelConfig, LabelDeps, adaptive_label, fixed_label,
                       label_many, save_labels)
from .model import InvestmentPlan, investment_cost
from .mlp import TrainConfig, fit_mlp
from .optimize import KERNEL_BACKEND, SimplexSolver
from .rng import PURPOSE_REFERENCE
from .sampling import sample_plans, save_plans
from .surrogate import Dataset, fit_linear, mape, save_model
from .textio import fmt

PLAN_FORMAT = "capplan-plan/1"


@dataclass
class RunConfig:
    instance_path: str | None = None   # None: generate the default instance
    out_dir: str = "capplan-run"
    dataset_size: int = 200
    workers: int = 1
    val_fraction: float = 0.2
    seeds: dict = field(default_factory=lambda: {
        "sampler": 11, "labeler": 12, "training": 13, "validation": 14,
        "baseline": 15})
    label: dict = field(default_factory=dict)       # LabelConfig overrides
    train: dict = field(default_factory=dict)       # TrainConfig overrides
    validation_scenarios: int = 1000
    benchmark_horizon: int = default_benchmark_horizon()
    ef_scenarios: int = 5
    ph_scenarios: int = 5
    ef_reference_scenarios: int = 50
    gap_tol: float = 0.01
    solve_time_limit: float = 60.0
    budget_seconds: float | None = None

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    def label_config(self) -> LabelConfig:
        return LabelConfig(**self.label)

    def train_config(self) -> TrainConfig:
        kw = dict(self.train)
        if "hidden" in kw:
            kw["hidden"] = tuple(kw["hidden"])
        kw.setdefault("seed", self.seeds["training"])
        return TrainConfig(**kw)


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


class Budget:
    def __init__(self, seconds: float | None):
        self.start = time.perf_counter()
        self.seconds = seconds

    def check(self, stage: str):
        if self.seconds is not None and time.perf_counter() - self.start > self.seconds:
            raise TimeoutError(f"wall-clock budget exceeded during {stage}")


def save_plan_file(plan: InvestmentPlan, path, meta: dict) -> None:
    doc = {"format": PLAN_FORMAT, "x": [float(v) for v in plan.x], **meta}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_plan_file(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != PLAN_FORMAT:
        raise ConfigError(f"not a plan file: {path}")
    return InvestmentPlan(np.array(doc["x"])), doc


def run_pipeline(cfg: RunConfig, include_baselines: bool = False):
    """Execute the full pipeline; returns (manifest dict, out_dir Path).

    Stages: instance, sample, label, train (linear + MLP), plan (embed and
    solve both surrogates), validate. With include_baselines, adds EF/PH and
    a benchmark comparison table scored on one common validation set.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    budget = Budget(cfg.budget_seconds)
    timings = {}
    files = {}
    manifest = {
        "config": asdict(cfg),
        "versions": {"capplan": __version__,
                     "python": sys.version.split()[0],
                     "numpy": np.__version__,
                     "kernel": KERNEL_BACKEND},
        "seeds": cfg.seeds,
        "timings": timings,
    }

    def record(name, path):
        files[name] = sha256_file(path)

    stage = "instance"
    try:
        t0 = time.perf_counter()
        if cfg.instance_path:
            instance = load_instance(cfg.instance_path)
        else:
            instance = default_instance()
        inst_path = out / "instance.json"
        save_instance(instance, inst_path)
        record("instance.json", inst_path)
        timings["instance"] = time.perf_counter() - t0
        budget.check(stage)

        stage = "sample"
        t0 = time.perf_counter()
        batch = sample_plans(cfg.dataset_size, instance.polytope,
                             seed=cfg.seeds["sampler"])
        plans_path = out / "plans.tsv"
        save_plans(batch, plans_path)
        record("plans.tsv", plans_path)
        timings["sampling"] = time.perf_counter() - t0
        budget.check(stage)

        stage = "label"
        t0 = time.perf_counter()
        labels = label_many(batch.plans, instance, cfg.label_config(),
                            seed=cfg.seeds["labeler"], workers=cfg.workers)
        labels_path = out / "labels.tsv"
        save_labels(labels, labels_path)
        record("labels.tsv", labels_path)
        timings["labeling"] = time.perf_counter() - t0
        budget.check(stage)

        stage = "train"
        t0 = time.perf_counter()
        xs = np.array([lab.plan.x for lab in labels])
        ys = np.array([lab.q_hat for lab in labels])
        dataset = Dataset.build(xs, ys, val_fraction=cfg.val_fraction,
                                seed=cfg.seeds["training"])
        linear = fit_linear(dataset)
        mlp_model, history = fit_mlp(dataset, cfg.train_config())
        lr_path = out / "model_lr.json"
        mlp_path = out / "model_mlp.json"
        save_model(linear, lr_path)
        save_model(mlp_model, mlp_path)
        record("model_lr.json", lr_path)
        record("model_mlp.json", mlp_path)
        timings["training"] = time.perf_counter() - t0
        manifest["training"] = {
            "val_mape_lr": mape(linear, dataset.x[dataset.val_idx],
                                dataset.y[dataset.val_idx]),
            "val_mape_mlp": mape(mlp_model, dataset.x[dataset.val_idx],
                                 dataset.y[dataset.val_idx]),
            "best_epoch": history.best_epoch,
            "stopped_epoch": history.stopped_epoch,
        }
        budget.check(stage)

        stage = "plan"
        inv = instance.discounted_inv_costs()
        solver = SimplexSolver()
        plans = {}
        for name, model, embed in (("lr", linear, embed_linear),
                                   ("mlp", mlp_model, embed_mlp)):
            t0 = time.perf_counter()
            emb = embed(model, instance.polytope, inv)
            plan, pred_obj, res = solve_plan(emb, solver, gap_tol=cfg.gap_tol,
                                             time_limit=cfg.solve_time_limit)
            dt = time.perf_counter() - t0
            timings[f"solve_{name}"] = dt
            path = out / f"plan_{name}.json"
            save_plan_file(plan, path, {
                "model": name,
                "predicted_objective": pred_obj,
                "investment_cost": investment_cost(instance, plan),
                "milp_gap": res.gap,
                "binaries": getattr(emb, "n_binaries", 0),
            })
            record(f"plan_{name}.json", path)
            plans[name] = plan
        budget.check(stage)

        stage = "validate"
        t0 = time.perf_counter()
        reports = {}
        for name, plan in plans.items():
            reports[name] = validate_plan(
                plan, instance, n=cfg.validation_scenarios,
                seed=cfg.seeds["validation"], horizon=cfg.benchmark_horizon,
                plan_id=f"a-{name}", workers=cfg.workers)
            traj_path = out / f"trajectory_{name}.tsv"
            save_trajectory(instance, reports[name].trajectory, traj_path)
            record(f"trajectory_{name}.tsv", traj_path)
        timings["validation"] = time.perf_counter() - t0
        manifest["validation"] = {
            name: {"mean_cost": r.mean_cost, "cv_pct": r.cv_pct}
            for name, r in reports.items()
        }
        budget.check(stage)

        if include_baselines:
            stage = "baselines"
            manifest["benchmark"] = _run_baselines(cfg, instance, plans,
                                                   reports, out, files,
                                                   timings, budget)
    except TimeoutError as exc:
        manifest["error"] = {"stage": stage, "kind": "budget", "detail": str(exc)}
        _write_manifest(manifest, files, out)
        raise
    except CapplanError as exc:
        manifest["error"] = {"stage": stage, "kind": "stage", "detail": str(exc)}
        _write_manifest(manifest, files, out)
        raise
    _write_manifest(manifest, files, out)
    return manifest, out


def _run_baselines(cfg, instance, plans, reports, out, files, timings, budget):
    """EF/PH baselines plus the benchmark comparison table."""
    rows = []
    val_kw = dict(n=cfg.validation_scenarios, seed=cfg.seeds["validation"],
                  horizon=cfg.benchmark_horizon, workers=cfg.workers)

    t0 = time.perf_counter()
    ref_set = ScenarioSet(n_scenarios=cfg.ef_reference_scenarios,
                          horizon=cfg.benchmark_horizon,
                          seed=cfg.seeds["baseline"])
    ref_plan, ref_obj, _ = extensive_form(instance, ref_set)
    timings["ef_reference"] = time.perf_counter() - t0
    ref_report = validate_plan(ref_plan, instance,
                               plan_id=f"ef{cfg.ef_reference_scenarios}", **val_kw)
    ref_cost = ref_report.mean_cost
    rows.append((f"EF({cfg.ef_reference_scenarios})", 0.0, ref_report.cv_pct,
                 timings["ef_reference"]))
    path = out / "plan_ef_reference.json"
    save_plan_file(ref_plan, path, {"model": "ef-reference",
                                    "objective": ref_obj,
                                    "scenarios": cfg.ef_reference_scenarios})
    files["plan_ef_reference.json"] = sha256_file(path)
    budget.check("baselines")

    t0 = time.perf_counter()
    ef_set = ScenarioSet(n_scenarios=cfg.ef_scenarios,
                         horizon=cfg.benchmark_horizon,
                         seed=cfg.seeds["baseline"])
    ef_plan, _, _ = extensive_form(instance, ef_set)
    ef_time = time.perf_counter() - t0
    ef_report = validate_plan(ef_plan, instance, reference_cost=ref_cost,
                              plan_id=f"ef{cfg.ef_scenarios}", **val_kw)
    rows.append((f"EF({cfg.ef_scenarios})", ef_report.gap_pct,
                 ef_report.cv_pct, ef_time))
    budget.check("baselines")

    t0 = time.perf_counter()
    ph_set = ScenarioSet(n_scenarios=cfg.ph_scenarios,
                         horizon=cfg.benchmark_horizon,
                         seed=cfg.seeds["baseline"])
    ph = progressive_hedging(instance, ph_set, PhConfig())
    ph_time = time.perf_counter() - t0
    ph_report = validate_plan(ph.plan, instance, reference_cost=ref_cost,
                              plan_id=f"ph{cfg.ph_scenarios}", **val_kw)
    rows.append((f"PH({cfg.ph_scenarios})", ph_report.gap_pct,
                 ph_report.cv_pct, ph_time))
    ph_log = out / "ph_residuals.tsv"
    with open(ph_log, "w") as fh:
        fh.write("iteration\tresidual\n")
        for i, r in enumerate(ph.residuals):
            fh.write(f"{i}\t{fmt(r)}\n")
    files["ph_residuals.tsv"] = sha256_file(ph_log)
    budget.check("baselines")

    bench = {"reference_cost": ref_cost,
             "ph": {"iterations": ph.iterations, "converged": ph.converged,
                    "residual": ph.residuals[-1]}}
    for name in ("lr", "mlp"):
        rep = reports[name]
        gap = optimality_gap(rep.mean_cost, ref_cost)
        solve_t = timings[f"solve_{name}"]
        total_t = (timings["sampling"] + timings["labeling"]
                   + timings["training"] + solve_t)
        rows.append((f"A-{name.upper()}({cfg.dataset_size})",
                     gap, rep.cv_pct, solve_t))
        bench[f"a_{name}"] = {"gap_pct": gap, "cv_pct": rep.cv_pct,
                              "solve_seconds": solve_t,
                              "total_seconds": total_t}

    table_path = out / "benchmark.tsv"
    with open(table_path, "w") as fh:
        fh.write("method\tgap_pct\tcv_pct\ttime_s\n")
        for method, gap, cv, t in rows:
            fh.write(f"{method}\t{gap:.4f}\t{cv:.4f}\t{t:.3f}\n")
    report_path = out / "benchmark.txt"
    with open(report_path, "w") as fh:
        fh.write(f"{'Method':<14}{'Gap (%)':>10}{'CV (%)':>10}{'Time (s)':>12}\n")
        for method, gap, cv, t in rows:
            fh.write(f"{method:<14}{gap:>10.2f}{cv:>10.2f}{t:>12.2f}\n")
    bench["table"] = rows
    return bench


def _write_manifest(manifest, files, out):
    manifest["files"] = files
    path = out / "manifest.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, default=float)
        fh.write("\n")


def verify_manifest(out_dir) -> bool:
    """Recompute artifact hashes and compare with the stored manifest."""
    out = Path(out_dir)
    with open(out / "manifest.json") as fh:
        manifest = json.load(fh)
    for name, digest in manifest["files"].items():
        if sha256_file(out / name) != digest:
            return False
    return True


def compare_adaptive_fixed(cfg: RunConfig, grid_s=(5, 10, 20, 30),
                           grid_h=(12, 24, 36, 48)):
    """Label one sampled plan under a fixed parameter grid and adaptively.

    Returns a report with per-cell relative error (vs the largest fixed
    configuration) and wall times; writes heatmap TSV + JSON into out_dir.
    """
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.instance_path:
        instance = load_instance(cfg.instance_path)
    else:
        instance = default_instance()
    plan = sample_plans(1, instance.polytope, seed=cfg.seeds["sampler"]).plans[0]
    deps = LabelDeps(instance=instance, seed=cfg.seeds["labeler"],
                     purpose=PURPOSE_REFERENCE)

    s_big, h_big = max(grid_s), max(grid_h)
    cells = {}
    for s in grid_s:
        for h in grid_h:
            t0 = time.perf_counter()
            lab = fixed_label(plan, deps, s=s, horizon=h, sample_id=0)
            cells[(s, h)] = {"q_hat": lab.q_hat,
                             "seconds": time.perf_counter() - t0}
    ref = cells[(s_big, h_big)]["q_hat"]
    for cell in cells.values():
        cell["rel_err"] = abs(cell["q_hat"] - ref) / ref

    adeps = LabelDeps(instance=instance, seed=cfg.seeds["labeler"])
    t0 = time.perf_counter()
    alab = adaptive_label(plan, adeps, cfg.label_config(), sample_id=0)
    a_seconds = time.perf_counter() - t0
    adaptive = {
        "q_hat": alab.q_hat,
        "seconds": a_seconds,
        "rel_err": abs(alab.q_hat - ref) / ref,
        "selected": [(ps.s_final, ps.horizon) for ps in alab.period_stats],
    }

    heat_path = out / "adaptive_vs_fixed.tsv"
    with open(heat_path, "w") as fh:
        fh.write("scenarios\thorizon\trel_err\tseconds\tq_hat\n")
        for (s, h), cell in sorted(cells.items()):
            fh.write(f"{s}\t{h}\t{fmt(cell['rel_err'])}\t"
                     f"{cell['seconds']:.3f}\t{fmt(cell['q_hat'])}\n")
        fh.write(f"adaptive\t-\t{fmt(adaptive['rel_err'])}\t"
                 f"{a_seconds:.3f}\t{fmt(alab.q_hat)}\n")
    report = {"cells": {f"{s}x{h}": c for (s, h), c in cells.items()},
              "adaptive": adaptive,
              "largest": {"s": s_big, "h": h_big, "q_hat": ref}}
    with open(out / "adaptive_vs_fixed.json", "w") as fh:
        json.dump(report, fh, indent=1, default=float)
        fh.write("\n")
    return report
