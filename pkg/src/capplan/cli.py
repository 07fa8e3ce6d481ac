"""Command-line interface.

Subcommands: gen-instance, sample, label, train, plan, ef, ph, evaluate,
bench, compare-adaptive-fixed. Exit codes: 0 success, 2 configuration error,
3 stage failure, 4 wall-clock budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .baselines import PhConfig, ScenarioSet, extensive_form, progressive_hedging
from .embedding import embed_linear, embed_mlp, solve_plan
from .errors import CapplanError, ConfigError
from .evaluate import save_trajectory, validate_plan
from .instances import default_instance, load_instance, save_instance
from .labeling import LabelConfig, label_many, load_labels, save_labels
from .model import investment_cost
from .mlp import MlpSurrogate
from .optimize import SimplexSolver, write_lp
from .pipeline import (RunConfig, compare_adaptive_fixed, load_plan_file,
                       run_pipeline, save_plan_file, verify_manifest)
from .sampling import load_plans, sample_plans, save_plans
from .surrogate import Dataset, LinearSurrogate, fit_linear, load_model, mape, save_model
from .mlp import TrainConfig, fit_mlp
from .textio import fmt

EXIT_OK, EXIT_CONFIG, EXIT_STAGE, EXIT_BUDGET = 0, 2, 3, 4


def _add_common(p):
    p.add_argument("--instance", help="instance file (default: built-in synthetic)")
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--out", default="-", help="output path ('-' = stdout)")


def _load_inst(args):
    return load_instance(args.instance) if args.instance else default_instance()


def cmd_gen_instance(args):
    inst = default_instance(n_nodes=args.nodes, n_periods=args.periods)
    save_instance(inst, args.out)
    print(f"wrote {args.out}: {len(inst.candidates)} candidates, "
          f"{inst.n_periods} periods, {inst.n_vars} first-stage variables")
    return EXIT_OK


def cmd_sample(args):
    inst = _load_inst(args)
    batch = sample_plans(args.count, inst.polytope, seed=args.seed,
                         order_policy=args.order)
    save_plans(batch, args.out)
    print(f"wrote {args.out}: {len(batch)} plans "
          f"(clamped={batch.clamped}, rejected={batch.rejected})")
    return EXIT_OK


def cmd_label(args):
    inst = _load_inst(args)
    plans = load_plans(args.plans)
    cfg = LabelConfig(s0=args.s0, h0=args.h0, dh=args.dh, cv_tol=args.cv_tol,
                      ci_tol=args.ci_tol, alpha=args.alpha, h_max=args.h_max)
    t0 = time.perf_counter()
    labels = label_many(plans, inst, cfg, seed=args.seed, workers=args.workers)
    save_labels(labels, args.out)
    print(f"wrote {args.out}: {len(labels)} labels in "
          f"{time.perf_counter() - t0:.1f}s with {args.workers} workers")
    return EXIT_OK


def cmd_train(args):
    labels_x, labels_y, _ = load_labels(args.labels)
    ds = Dataset.build(labels_x, labels_y, val_fraction=args.val_fraction,
                       seed=args.seed)
    if args.model == "linear":
        model = fit_linear(ds)
    else:
        cfg = TrainConfig(seed=args.seed, hidden=tuple(args.hidden))
        model, hist = fit_mlp(ds, cfg)
        print(f"stopped at epoch {hist.stopped_epoch} "
              f"(best {hist.best_epoch}, val MSE {hist.best_val:.6f})")
    save_model(model, args.out)
    print(f"wrote {args.out}: validation MAPE "
          f"{mape(model, ds.x[ds.val_idx], ds.y[ds.val_idx]):.2f}%")
    return EXIT_OK


def cmd_plan(args):
    inst = _load_inst(args)
    model = load_model(args.model)
    inv = inst.discounted_inv_costs()
    if isinstance(model, LinearSurrogate):
        emb = embed_linear(model, inst.polytope, inv)
    else:
        emb = embed_mlp(model, inst.polytope, inv)
    if args.export_lp:
        write_lp(emb.problem, args.export_lp)
    plan, pred, res = solve_plan(emb, SimplexSolver(), gap_tol=args.gap_tol,
                                 time_limit=args.time_limit)
    if plan is None:
        print("planning problem infeasible", file=sys.stderr)
        return EXIT_STAGE
    save_plan_file(plan, args.out, {
        "model": args.model, "predicted_objective": pred,
        "investment_cost": investment_cost(inst, plan),
        "milp_gap": res.gap, "binaries": getattr(emb, "n_binaries", 0)})
    print(f"wrote {args.out}: predicted objective {pred:.6e} "
          f"(gap={res.gap if res.gap is not None else 0})")
    return EXIT_OK


def cmd_ef(args):
    inst = _load_inst(args)
    sset = ScenarioSet(n_scenarios=args.scenarios, horizon=args.horizon,
                       seed=args.seed)
    t0 = time.perf_counter()
    plan, obj, _ = extensive_form(inst, sset)
    save_plan_file(plan, args.out, {"model": f"ef{args.scenarios}",
                                    "objective": obj,
                                    "scenarios": args.scenarios,
                                    "horizon": args.horizon})
    print(f"wrote {args.out}: EF({args.scenarios}) objective {obj:.6e} "
          f"in {time.perf_counter() - t0:.1f}s")
    return EXIT_OK


def cmd_ph(args):
    inst = _load_inst(args)
    sset = ScenarioSet(n_scenarios=args.scenarios, horizon=args.horizon,
                       seed=args.seed)
    cfg = PhConfig(max_iterations=args.max_iterations,
                   subproblem_time_limit=args.time_limit)
    res = progressive_hedging(inst, sset, cfg)
    save_plan_file(res.plan, args.out, {
        "model": f"ph{args.scenarios}", "objective": res.objective,
        "iterations": res.iterations, "converged": res.converged,
        "residual": res.residuals[-1]})
    if args.log:
        with open(args.log, "w") as fh:
            fh.write("iteration\tresidual\n")
            for i, r in enumerate(res.residuals):
                fh.write(f"{i}\t{fmt(r)}\n")
    print(f"wrote {args.out}: PH({args.scenarios}) objective {res.objective:.6e}, "
          f"{res.iterations} iterations, residual {res.residuals[-1]:.2e}")
    return EXIT_OK


def cmd_evaluate(args):
    inst = _load_inst(args)
    plan, meta = load_plan_file(args.plan)
    ref = args.reference_cost
    rep = validate_plan(plan, inst, n=args.scenarios, seed=args.seed,
                        horizon=args.horizon, plan_id=meta.get("model", "plan"),
                        reference_cost=ref, workers=args.workers)
    doc = {"plan_id": rep.plan_id, "n_scenarios": rep.n_scenarios,
           "horizon": rep.horizon, "seed": rep.seed,
           "mean_cost": rep.mean_cost, "cv_pct": rep.cv_pct,
           "investment": rep.investment, "gap_pct": rep.gap_pct,
           "reference_cost": rep.reference_cost, "wall_time": rep.wall_time}
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=1, default=float)
        fh.write("\n")
    if args.trajectory:
        save_trajectory(inst, rep.trajectory, args.trajectory)
    print(f"wrote {args.out}: mean cost {rep.mean_cost:.6e}, CV {rep.cv_pct:.2f}%"
          + (f", gap {rep.gap_pct:.2f}%" if rep.gap_pct is not None else ""))
    return EXIT_OK


def cmd_run(args, include_baselines):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.out_dir:
        cfg.out_dir = args.out_dir
    if args.workers is not None:
        cfg.workers = args.workers
    if args.dataset_size is not None:
        cfg.dataset_size = args.dataset_size
    if args.budget is not None:
        cfg.budget_seconds = args.budget
    try:
        manifest, out = run_pipeline(cfg, include_baselines=include_baselines)
    except TimeoutError:
        return EXIT_BUDGET
    except CapplanError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE
    print(f"pipeline complete: artifacts in {out}")
    if include_baselines:
        print((out / "benchmark.txt").read_text())
    return EXIT_OK


def cmd_verify(args):
    ok = verify_manifest(args.run_dir)
    print("manifest hashes match" if ok else "HASH MISMATCH")
    return EXIT_OK if ok else EXIT_STAGE


def cmd_compare(args):
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.out_dir:
        cfg.out_dir = args.out_dir
    report = compare_adaptive_fixed(cfg)
    a = report["adaptive"]
    print(f"adaptive: rel err {a['rel_err']:.3%}, {a['seconds']:.1f}s, "
          f"selected {a['selected']}")
    big = report["largest"]
    big_cell = report["cells"][f"{big['s']}x{big['h']}"]
    print(f"largest fixed ({big['s']}, {big['h']}): {big_cell['seconds']:.1f}s")
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="capplan",
                                 description="surrogate-assisted capacity "
                                             "expansion planning toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-instance", help="write a synthetic instance file")
    p.add_argument("--nodes", type=int, default=3)
    p.add_argument("--periods", type=int, default=3)
    p.add_argument("--out", default="instance.json")
    p.set_defaults(func=cmd_gen_instance)

    p = sub.add_parser("sample", help="draw feasible plans (constraint propagation)")
    _add_common(p)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--order", choices=["random", "fixed"], default="random")
    p.set_defaults(func=cmd_sample, out="plans.tsv")

    p = sub.add_parser("label", help="adaptive expected-cost labels for plans")
    _add_common(p)
    p.add_argument("--plans", required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--s0", type=int, default=5)
    p.add_argument("--h0", type=int, default=6)
    p.add_argument("--dh", type=int, default=6)
    p.add_argument("--cv-tol", type=float, default=0.05)
    p.add_argument("--ci-tol", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--h-max", type=int, default=168)
    p.set_defaults(func=cmd_label, out="labels.tsv")

    p = sub.add_parser("train", help="fit a surrogate on a labeled dataset")
    p.add_argument("--labels", required=True)
    p.add_argument("--model", choices=["linear", "mlp"], default="mlp")
    p.add_argument("--hidden", type=int, nargs="+", default=[16, 8])
    p.add_argument("--val-fraction", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=13)
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="solve the surrogate-embedded planning problem")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--gap-tol", type=float, default=0.01)
    p.add_argument("--time-limit", type=float, default=60.0)
    p.add_argument("--export-lp", help="also write the problem in LP format")
    p.set_defaults(func=cmd_plan, out="plan.json")

    p = sub.add_parser("ef", help="extensive-form baseline")
    _add_common(p)
    p.add_argument("--scenarios", type=int, default=5)
    p.add_argument("--horizon", type=int, default=18)
    p.set_defaults(func=cmd_ef, out="plan_ef.json")

    p = sub.add_parser("ph", help="progressive-hedging baseline")
    _add_common(p)
    p.add_argument("--scenarios", type=int, default=5)
    p.add_argument("--horizon", type=int, default=18)
    p.add_argument("--max-iterations", type=int, default=200)
    p.add_argument("--time-limit", type=float)
    p.add_argument("--log", help="residual trace TSV")
    p.set_defaults(func=cmd_ph, out="plan_ph.json")

    p = sub.add_parser("evaluate", help="out-of-sample validation of a plan")
    _add_common(p)
    p.add_argument("--plan", required=True)
    p.add_argument("--scenarios", type=int, default=1000)
    p.add_argument("--horizon", type=int, default=18)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--reference-cost", type=float)
    p.add_argument("--trajectory", help="also write capacity trajectory TSV")
    p.set_defaults(func=cmd_evaluate, out="validation.json")

    for name, baselines in (("run", False), ("bench", True)):
        p = sub.add_parser(name, help="full pipeline" + (
            " plus baselines and comparison table" if baselines else ""))
        p.add_argument("--config", help="RunConfig JSON file")
        p.add_argument("--out-dir")
        p.add_argument("--workers", type=int)
        p.add_argument("--dataset-size", type=int)
        p.add_argument("--budget", type=float, help="wall-clock budget (s)")
        p.set_defaults(func=lambda a, b=baselines: cmd_run(a, b))

    p = sub.add_parser("verify", help="recheck a run directory's manifest hashes")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare-adaptive-fixed",
                       help="fixed-grid vs adaptive labeling comparison")
    p.add_argument("--config")
    p.add_argument("--out-dir")
    p.set_defaults(func=cmd_compare)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
