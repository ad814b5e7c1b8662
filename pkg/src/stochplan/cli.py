"""Experiment driver.

Subcommands: ``run`` executes one rollout and writes its trajectory,
``sweep`` runs the Monte Carlo grid and writes per-rollout and summary CSVs,
``verify`` runs the scaling-law and high-noise reports, ``report`` joins
sweep outputs into one figure-ready table. Output layout per experiment:
<out>/<experiment>/{rollout.json, rollouts.csv, summary.csv, scaling.json,
config.json}.
"""

import argparse
import json
import math
import os
import shutil
import sys

import numpy as np

from . import montecarlo
from .config import ConfigError, load_config
from .montecarlo import (NoiseStream, high_noise_check, nominal_cost_for,
                         run_rollout, run_sweep, verify_decoupling)
from .policies import make_plan
from .trajopt import SolverError


def _out_dir(cfg, override):
    base = override or cfg.out_dir
    path = os.path.join(base, cfg.experiment)
    os.makedirs(path, exist_ok=True)
    return path


def _copy_config(config_path, out):
    shutil.copyfile(config_path, os.path.join(out, "config.json"))


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value)!r}")


def _clean_nan(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean_nan(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean_nan(v) for v in value]
    return value


def cmd_run(args):
    cfg = load_config(args.config)
    scenario = cfg.scenario()
    policy = cfg.policies[0]
    if args.policy is not None:
        matches = [p for p in cfg.policies if p.label() == args.policy]
        if not matches:
            raise ConfigError("policies",
                              f"config defines no policy labelled {args.policy!r}")
        policy = matches[0]
    eps = cfg.eps_grid[0] if args.eps is None else args.eps
    seed = cfg.base_seed if args.seed is None else args.seed

    record, result = run_rollout(scenario, policy, eps, seed,
                                 options=cfg.solver)
    out = _out_dir(cfg, args.out)
    _copy_config(args.config, out)
    payload = {
        "policy": record.policy,
        "model": scenario.name,
        "eps": float(eps),
        "seed": int(seed),
        "cost": record.cost,
        "nominal_cost": record.nominal_cost,
        "ratio": record.ratio,
        "replans": [
            {"time": e.time, "trigger": e.trigger, "solve_ms": e.solve_ms,
             "skipped": e.skipped, "failed": e.failed}
            for e in record.replan_events
        ],
        "comm_events": record.comm_events,
        "states": record.states,
        "controls": record.controls,
        "step_plan_ms": record.step_plan_ms,
        "terminal_error": record.terminal_error,
    }
    if scenario.is_multi:
        payload["n_agents"] = scenario.multi.n_agents
        payload["agent_nx"] = scenario.multi.model.n_x
    path = os.path.join(out, "rollout.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean_nan(json.loads(
            json.dumps(payload, default=_json_default))), fh, indent=1)
        fh.write("\n")
    print(f"wrote {path} (cost ratio {record.ratio:.6f}, "
          f"{record.replan_count} replans)")
    return 0


def cmd_sweep(args):
    cfg = load_config(args.config)
    scenario = cfg.scenario()
    workers = args.workers or cfg.workers
    base_seed = cfg.base_seed if args.seed is None else args.seed
    sweep = run_sweep(scenario, list(cfg.policies), list(cfg.eps_grid),
                      cfg.seeds, base_seed=base_seed, options=cfg.solver,
                      workers=workers)
    out = _out_dir(cfg, args.out)
    _copy_config(args.config, out)
    montecarlo.write_rollouts_csv(os.path.join(out, "rollouts.csv"),
                                  sweep.rollout_rows)
    montecarlo.write_summary_csv(os.path.join(out, "summary.csv"),
                                 sweep.summary_rows)
    failures = sum(r["failed"] for r in sweep.rollout_rows)
    print(f"wrote {out}/rollouts.csv ({len(sweep.rollout_rows)} rollouts, "
          f"{failures} failures) and {out}/summary.csv")
    return 0 if failures == 0 else 1


def cmd_verify(args):
    cfg = load_config(args.config)
    scenario = cfg.scenario()
    if scenario.is_multi:
        raise ConfigError("preset", "verify expects a single-agent preset")
    plan, _, _ = make_plan(scenario.model, scenario.cost, scenario.x0,
                           scenario.horizon, options=cfg.solver)
    scaling = verify_decoupling(scenario.model, scenario.cost, plan,
                                list(cfg.verify_eps_grid), cfg.verify_seeds,
                                base_seed=cfg.base_seed)
    high = high_noise_check(scenario.model, scenario.cost, scenario.x0,
                            scenario.horizon, cfg.high_noise_eps,
                            cfg.high_noise_seeds,
                            hc_grid=cfg.high_noise_hc_grid,
                            base_seed=cfg.base_seed, options=cfg.solver)
    out = _out_dir(cfg, args.out)
    _copy_config(args.config, out)
    path = os.path.join(out, "scaling.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_clean_nan({"decoupling": scaling, "high_noise": high}),
                  fh, indent=1)
        fh.write("\n")
    print(f"wrote {path} (expected-cost-gap slope "
          f"{scaling['expected_cost_gap_slope']:.3f}, "
          f"state-gap slope {scaling['state_prediction_gap_slope']:.3f})")
    return 0 if not scaling["low_confidence"] else 1


def cmd_report(args):
    rows = []
    for path in args.inputs:
        rows.extend(montecarlo.read_csv(path))
    if not rows:
        print("no input rows", file=sys.stderr)
        return 1
    groups = {}
    for row in rows:
        key = (row["policy"], row["model"], float(row["eps"]))
        groups.setdefault(key, []).append(row)
    out_rows = []
    for (policy, model, eps) in sorted(groups):
        cell = groups[(policy, model, eps)]
        good = [r for r in cell if r["failed"] == "0"]
        ratios = np.array([float(r["ratio"]) for r in good])
        replans = np.array([float(r["replans"]) for r in good])
        plan_ms = np.array([float(r["total_plan_ms"]) for r in good])
        out_rows.append({
            "policy": policy, "model": model, "eps": eps,
            "n": len(good), "failures": len(cell) - len(good),
            "ratio_mean": float(ratios.mean()) if good else math.nan,
            "ratio_std": (float(ratios.std(ddof=1))
                          if len(good) > 1 else 0.0),
            "replans_mean": float(replans.mean()) if good else math.nan,
            "replans_std": (float(replans.std(ddof=1))
                            if len(good) > 1 else 0.0),
            "plan_ms_mean": float(plan_ms.mean()) if good else math.nan,
            "plan_ms_std": (float(plan_ms.std(ddof=1))
                            if len(good) > 1 else 0.0),
            "step_ms_mean": math.nan,
            "step_ms_std": math.nan,
        })
    os.makedirs(os.path.dirname(args.out_file) or ".", exist_ok=True)
    montecarlo.write_summary_csv(args.out_file, out_rows)
    print(f"wrote {args.out_file} ({len(out_rows)} summary rows)")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="stochplan",
        description="Trajectory planning under actuator noise: tracking with "
                    "event-triggered replanning versus receding-horizon "
                    "re-solving.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one rollout")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--policy", default=None,
                       help="policy label from the config (default: first)")
    p_run.add_argument("--eps", type=float, default=None)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--out", default=None)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run the Monte Carlo grid")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--seed", type=int, default=None,
                         help="override the base seed")
    p_sweep.add_argument("--out", default=None)
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify",
                              help="scaling-law and high-noise reports")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--out", default=None)
    p_verify.set_defaults(func=cmd_verify)

    p_report = sub.add_parser("report", help="join sweep CSVs into one table")
    p_report.add_argument("inputs", nargs="+",
                          help="rollouts.csv files from sweep runs")
    p_report.add_argument("--out-file", default="report.csv")
    p_report.set_defaults(func=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SolverError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
