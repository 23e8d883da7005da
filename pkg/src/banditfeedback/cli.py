"""Command line entry point.

    banditfeedback simulate   --config sim.json --out DIR      -> DIR/logs.jsonl
    banditfeedback train      --logs FILE --config fit.json --out DIR   -> DIR/beta.json
    banditfeedback evaluate   --beta FILE --config sim.json --out DIR   -> DIR/evaluation.json
    banditfeedback experiment --config exp.json --out DIR      -> results.csv, timings.csv, figure.svg
    banditfeedback shift-demo [--config demo.json] --out DIR   -> shift_demo.csv, shift_demo.svg

Config files are JSON. Simulator settings may sit under a ``"sim"`` key or at
the top level.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .agents import METHODS, FitOptions, PriorSpec, fit
from .core import read_log, write_log
from .harness import EVAL_STREAM, TRAIN_STREAM, ExperimentConfig, run_and_write
from .simulator import SimConfig, ab_test, generate_logs, new_env
from .shift_demo import ShiftDemoConfig, run_shift_demo, shift_demo_svg

BETA_FORMAT = "beta-v1"


def _load(path) -> dict:
    if path is None:
        return {}
    with open(path) as fh:
        return json.load(fh)


# keys a simulate/train/evaluate config may carry besides the simulator's own
_COMMAND_KEYS = {"sim", "n_events", "logging_policy", "ab_test_size", "method", "prior", "fit"}


def _sim_from(cfg: dict, seed) -> SimConfig:
    sim_keys = {f.name for f in fields(SimConfig)}
    unknown = set(cfg) - sim_keys - _COMMAND_KEYS
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    d = cfg.get("sim", {k: v for k, v in cfg.items() if k in sim_keys})
    sim = SimConfig.from_dict(d)
    return replace(sim, seed=seed) if seed is not None else sim


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args) -> None:
    cfg = _load(args.config)
    sim = _sim_from(cfg, args.seed)
    n = args.n_events or cfg.get("n_events", 2000)
    policy = args.logging_policy or cfg.get("logging_policy", "popularity")
    logs = generate_logs(new_env(sim, stream=TRAIN_STREAM), policy, n)
    path = _out_dir(args) / "logs.jsonl"
    write_log(logs, path)
    print(f"wrote {len(logs)} events to {path}")


def cmd_train(args) -> None:
    cfg = _load(args.config)
    data = read_log(args.logs)
    method = args.method or cfg.get("method", "mle")
    prior = PriorSpec(**cfg.get("prior", {})).with_items(data.num_items)
    opts = FitOptions(**cfg.get("fit", {}))
    result = fit(method, data, prior, opts)
    record = {
        "format": BETA_FORMAT,
        "num_items": data.num_items,
        "method": method,
        "beta": result.beta.tolist(),
        "converged": result.converged,
        "iterations": result.iterations,
        "final_objective": result.final_objective,
        "final_grad_norm": result.final_grad_norm,
    }
    path = _out_dir(args) / "beta.json"
    path.write_text(json.dumps(record, indent=1) + "\n")
    print(f"{method}: converged={result.converged} iterations={result.iterations} -> {path}")


def cmd_evaluate(args) -> None:
    cfg = _load(args.config)
    sim = _sim_from(cfg, args.seed)
    record = _load(args.beta)
    if record.get("format") != BETA_FORMAT:
        raise ValueError(f"{args.beta}: not a {BETA_FORMAT} file")
    beta = np.asarray(record["beta"], dtype=np.float64)
    if record["num_items"] != sim.num_items:
        raise ValueError(f"beta is for {record['num_items']} items, simulator has {sim.num_items}")
    n = args.n_events or cfg.get("ab_test_size", 10000)
    ctr, stderr = ab_test(new_env(sim, stream=EVAL_STREAM), beta, n)
    report = {"ab_ctr": ctr, "ab_stderr": stderr, "n_events": n, "seed": sim.seed}
    (_out_dir(args) / "evaluation.json").write_text(json.dumps(report, indent=1) + "\n")
    print(json.dumps(report))


def cmd_experiment(args) -> None:
    cfg = _load(args.config)
    config = ExperimentConfig.from_dict(cfg)
    if args.seed is not None:
        config = replace(config, sim=replace(config.sim, seed=args.seed))
    if args.workers is not None:
        config = replace(config, workers=args.workers)
    out = Path(args.out) if args.out else Path(config.output_dir)
    rows = run_and_write(config, out)
    print(f"wrote {len(rows)} rows to {out / 'results.csv'}")


def cmd_shift_demo(args) -> None:
    cfg = ShiftDemoConfig(**_load(args.config))
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    out = _out_dir(args)
    with open(out / "shift_demo.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("seed", "mse_source_unweighted", "mse_target_unweighted", "mse_target_weighted"))
        for i in range(args.n_seeds):
            run_cfg = replace(cfg, seed=cfg.seed + i)
            result = run_shift_demo(run_cfg)
            writer.writerow([run_cfg.seed] + [format(v, ".6g") for v in result.report().values()])
            if i == 0:
                shift_demo_svg(result, run_cfg, out / "shift_demo.svg")
    print(f"wrote {out / 'shift_demo.csv'} and {out / 'shift_demo.svg'}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="banditfeedback", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default="."):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--out", default=out_default, help="output directory")
        return p

    p = common(sub.add_parser("simulate", help="generate a banditlog-v1 file"))
    p.add_argument("--n-events", type=int)
    p.add_argument("--logging-policy", choices=["popularity", "inverse-popularity", "uniform"])
    p.set_defaults(func=cmd_simulate)

    p = common(sub.add_parser("train", help="fit a method on a log file"))
    p.add_argument("--logs", required=True)
    p.add_argument("--method", choices=METHODS)
    p.set_defaults(func=cmd_train)

    p = common(sub.add_parser("evaluate", help="A/B test a fitted beta in the simulator"))
    p.add_argument("--beta", required=True)
    p.add_argument("--n-events", type=int)
    p.set_defaults(func=cmd_evaluate)

    p = common(sub.add_parser("experiment", help="full sweep -> CSV + SVG"), out_default=None)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_experiment)

    p = common(sub.add_parser("shift-demo", help="linear fit under covariate shift"))
    p.add_argument("--n-seeds", type=int, default=1)
    p.set_defaults(func=cmd_shift_demo)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
