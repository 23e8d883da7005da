"""Experiment sweeps: logging policy x method x training size x seed.

Every cell is computed from scratch: a fresh environment for the cell's seed
generates the training logs, the chosen method is fitted, and the greedy
policy is A/B tested on users from a separate random stream.

Random streams per seed (see :func:`banditfeedback.simulator.new_env`):
the catalogue depends on the seed only, and users are drawn from
``SeedSequence([seed, stream])`` with stream 0 for training logs, 1 for the
A/B test and 2 for the held-out logs used by the IPS estimate. Streams never
share users, so evaluation users are never seen in training.
"""
from __future__ import annotations

import csv
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import svgplot
from .agents import METHODS, FitOptions, PriorSpec, fit
from .estimators import ips_value
from .policies import LOGGING_POLICIES
from .simulator import SimConfig, ab_test, generate_logs, new_env

log = logging.getLogger(__name__)

TRAIN_STREAM = 0
EVAL_STREAM = 1
HOLDOUT_STREAM = 2

COLUMNS = (
    "method",
    "logging_policy",
    "train_size",
    "seed",
    "ab_ctr",
    "ab_stderr",
    "ips_value_on_holdout",
    "train_converged",
    "wall_time",
)


@dataclass(frozen=True)
class ExperimentConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    logging_policy: str = "popularity"
    methods: tuple = ("mle", "reweighted", "cb", "bayes-map")
    train_sizes: tuple = (2000, 4000, 6000, 8000)
    ab_test_size: int = 10000
    n_seeds: int = 20
    prior: PriorSpec = field(default_factory=PriorSpec)
    fit: FitOptions = field(default_factory=FitOptions)
    # held-out log size for the IPS column; None means the training size
    holdout_size: Optional[int] = None
    output_dir: str = "results"
    # wall times make the CSV non-reproducible, so they go to timings.csv
    # unless this is set
    record_wall_time: bool = False
    workers: int = 1

    def validate(self) -> None:
        self.sim.validate()
        if self.logging_policy not in LOGGING_POLICIES:
            raise ValueError(f"unknown logging policy {self.logging_policy!r}")
        if not self.methods:
            raise ValueError("methods must be nonempty")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        if not self.train_sizes or min(self.train_sizes) < 1 or self.ab_test_size < 1:
            raise ValueError("sizes must be >= 1")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        self.prior.validate()
        self.fit.validate()

    @property
    def seeds(self) -> list[int]:
        return [self.sim.seed + i for i in range(self.n_seeds)]

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown experiment keys: {sorted(unknown)}")
        kw = dict(d)
        if "sim" in kw:
            kw["sim"] = SimConfig.from_dict(kw["sim"])
        if "prior" in kw:
            kw["prior"] = PriorSpec(**kw["prior"])
        if "fit" in kw:
            kw["fit"] = FitOptions(**kw["fit"])
        for key in ("methods", "train_sizes"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass(frozen=True)
class ResultRow:
    method: str
    logging_policy: str
    train_size: int
    seed: int
    ab_ctr: float
    ab_stderr: float
    ips_value_on_holdout: float
    train_converged: bool
    wall_time: Optional[float] = None


def run_cell(config: ExperimentConfig, method: str, train_size: int, seed: int) -> ResultRow:
    """One (method, size, seed) cell; independent of every other cell."""
    start = time.perf_counter()
    sim = replace(config.sim, seed=seed)
    env = new_env(sim, stream=TRAIN_STREAM)
    logs = generate_logs(env, config.logging_policy, train_size)
    prior = config.prior.with_items(sim.num_items)
    try:
        result = fit(method, logs, prior, config.fit)
        beta, converged = result.beta, result.converged
    except Exception as exc:  # recorded in the row, sweep continues
        log.warning("fit failed for %s size=%d seed=%d: %s", method, train_size, seed, exc)
        beta = prior.mean if method == "bayes-map" else np.zeros(sim.num_items**2)
        converged = False
    ctr, stderr = ab_test(env.with_stream(EVAL_STREAM), beta, config.ab_test_size)
    holdout = generate_logs(env.with_stream(HOLDOUT_STREAM), config.logging_policy,
                            config.holdout_size or train_size)
    ips = ips_value(holdout, beta)
    return ResultRow(method, config.logging_policy, train_size, seed, ctr, stderr, ips, converged,
                     time.perf_counter() - start)


def _run_cell_args(args):
    return run_cell(*args)


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """All cells in (method, size, seed) order, whatever the completion order."""
    config.validate()
    cells = [(config, m, n, s) for m in config.methods for n in config.train_sizes for s in config.seeds]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_cell_args, cells))
    return [run_cell(*c) for c in cells]


# -- output -------------------------------------------------------------------


def _fmt_float(x: Optional[float]) -> str:
    if x is None:
        return ""
    return format(float(x), ".6g")


def write_results_csv(rows: list[ResultRow], path, include_wall_time: bool = True) -> None:
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COLUMNS)
        for r in rows:
            writer.writerow([
                r.method,
                r.logging_policy,
                r.train_size,
                r.seed,
                _fmt_float(r.ab_ctr),
                _fmt_float(r.ab_stderr),
                _fmt_float(r.ips_value_on_holdout),
                "true" if r.train_converged else "false",
                _fmt_float(r.wall_time) if include_wall_time else "",
            ])


def read_results_csv(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            ResultRow(
                rec["method"],
                rec["logging_policy"],
                int(rec["train_size"]),
                int(rec["seed"]),
                float(rec["ab_ctr"]),
                float(rec["ab_stderr"]),
                float(rec["ips_value_on_holdout"]),
                rec["train_converged"] == "true",
                float(rec["wall_time"]) if rec["wall_time"] else None,
            )
            for rec in reader
        ]


def summarize(rows: list[ResultRow]) -> dict:
    """{(logging_policy, method, train_size): (q25, median, q75)} of the A/B CTR."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.logging_policy, r.method, r.train_size), []).append(r.ab_ctr)
    return {k: tuple(float(q) for q in np.percentile(v, [25, 50, 75])) for k, v in groups.items()}


def emit_plot_svg(rows: list[ResultRow], path) -> None:
    """Median A/B CTR against training size, one chart per logging policy."""
    if not rows:
        raise ValueError("no rows to plot")
    stats = summarize(rows)
    panels = []
    for policy in dict.fromkeys(r.logging_policy for r in rows):
        panel = svgplot.Panel(f"logging policy: {policy}", "training events", "A/B CTR (median, IQR)")
        for method in dict.fromkeys(r.method for r in rows if r.logging_policy == policy):
            sizes = sorted({k[2] for k in stats if k[0] == policy and k[1] == method})
            q = [stats[(policy, method, n)] for n in sizes]
            panel.series.append(svgplot.Series(method, sizes, [v[1] for v in q],
                                               [v[0] for v in q], [v[2] for v in q]))
        panels.append(panel)
    Path(path).write_text(svgplot.render(panels))


def write_timings_csv(rows: list[ResultRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("method", "logging_policy", "train_size", "seed", "wall_time"))
        for r in rows:
            writer.writerow((r.method, r.logging_policy, r.train_size, r.seed, _fmt_float(r.wall_time)))


def run_and_write(config: ExperimentConfig, out_dir=None) -> list[ResultRow]:
    out = Path(out_dir or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_experiment(config)
    write_results_csv(rows, out / "results.csv", include_wall_time=config.record_wall_time)
    write_timings_csv(rows, out / "timings.csv")
    emit_plot_svg(rows, out / "figure.svg")
    return rows


def config_to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["sim"] = config.sim.to_dict()
    d["prior"] = {k: v for k, v in d["prior"].items() if k != "num_items"}
    return d


def median_ctr(rows: list[ResultRow], method: str, logging_policy: str, train_size: int) -> float:
    vals = [r.ab_ctr for r in rows
            if r.method == method and r.logging_policy == logging_policy and r.train_size == train_size]
    return float(np.median(vals)) if vals else math.nan
