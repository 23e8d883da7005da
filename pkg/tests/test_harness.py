import csv
import math
import xml.etree.ElementTree as ET
from dataclasses import replace

import numpy as np
import pytest

from banditfeedback.harness import (
    COLUMNS,
    EVAL_STREAM,
    HOLDOUT_STREAM,
    TRAIN_STREAM,
    ExperimentConfig,
    ResultRow,
    config_to_dict,
    emit_plot_svg,
    median_ctr,
    read_results_csv,
    run_and_write,
    run_cell,
    run_experiment,
    summarize,
    write_results_csv,
)
from banditfeedback.simulator import SimConfig, new_env, sample_users

SMALL = ExperimentConfig(
    sim=SimConfig(num_items=4, seed=3),
    methods=("mle",),
    train_sizes=(300,),
    ab_test_size=500,
    n_seeds=1,
)
SVG = "{http://www.w3.org/2000/svg}"


def row(**kw):
    base = dict(method="mle", logging_policy="popularity", train_size=2000, seed=0,
                ab_ctr=0.0123456789, ab_stderr=0.001, ips_value_on_holdout=0.02,
                train_converged=True, wall_time=None)
    base.update(kw)
    return ResultRow(**base)


def test_single_cell_gives_one_row():
    rows = run_experiment(SMALL)
    assert len(rows) == 1 and rows[0].method == "mle" and rows[0].train_size == 300
    assert 0 <= rows[0].ab_ctr <= 1


def test_row_count_and_order():
    cfg = replace(SMALL, methods=("mle", "cb"), train_sizes=(100, 200), n_seeds=2)
    rows = run_experiment(cfg)
    assert [(r.method, r.train_size, r.seed) for r in rows] == [
        (m, n, s) for m in ("mle", "cb") for n in (100, 200) for s in (3, 4)
    ]


def test_cell_independence():
    cfg = replace(SMALL, methods=("mle", "reweighted"), train_sizes=(150, 250), n_seeds=2)
    rows = run_experiment(cfg)
    alone = run_cell(cfg, "reweighted", 250, 4)
    assert replace(alone, wall_time=None) == replace(rows[-1], wall_time=None)


def test_parallel_matches_serial():
    cfg = replace(SMALL, methods=("mle", "cb"), n_seeds=2)
    strip = lambda rs: [replace(r, wall_time=None) for r in rs]  # noqa: E731
    assert strip(run_experiment(replace(cfg, workers=2))) == strip(run_experiment(cfg))


def test_streams_are_disjoint():
    env = new_env(SimConfig(seed=9))
    latents = [sample_users(env.with_stream(s), 50).latent for s in (TRAIN_STREAM, EVAL_STREAM, HOLDOUT_STREAM)]
    for i in range(3):
        for j in range(i + 1, 3):
            assert not np.intersect1d(latents[i].ravel(), latents[j].ravel()).size


def test_fit_failure_recorded_in_row():
    # clicks essentially impossible: the contextual bandit objective has no clicked event
    cfg = replace(SMALL, sim=replace(SMALL.sim, click_bias=-40.0), methods=("cb", "mle"), train_sizes=(50,))
    rows = run_experiment(cfg)
    assert rows[0].method == "cb" and not rows[0].train_converged
    assert rows[0].ab_ctr == 0.0
    assert len(rows) == 2


def test_invalid_config_rejected():
    for bad in (dict(methods=()), dict(methods=("ucb",)), dict(train_sizes=(0,)), dict(n_seeds=0),
                dict(logging_policy="greedy")):
        with pytest.raises(ValueError):
            run_experiment(replace(SMALL, **bad))


def test_config_dict_round_trip():
    cfg = replace(SMALL, methods=("mle", "bayes-map"))
    assert ExperimentConfig.from_dict(config_to_dict(cfg)) == cfg
    with pytest.raises(ValueError, match="unknown experiment keys"):
        ExperimentConfig.from_dict({"n_seed": 3})


# -- CSV ----------------------------------------------------------------------


def test_csv_one_row_two_lines(tmp_path):
    path = tmp_path / "r.csv"
    write_results_csv([row()], path)
    lines = path.read_text().splitlines()
    assert len(lines) == 2
    assert lines[0] == ",".join(COLUMNS)
    assert lines[1] == "mle,popularity,2000,0,0.0123457,0.001,0.02,true,"


def test_csv_round_trip(tmp_path):
    rows = [row(), row(method="cb", seed=5, ab_ctr=0.5, train_converged=False, wall_time=1.25)]
    path = tmp_path / "r.csv"
    write_results_csv(rows, path)
    back = read_results_csv(path)
    assert back[1] == rows[1]
    assert back[0] == replace(rows[0], ab_ctr=0.0123457)


def test_csv_quotes_when_needed(tmp_path):
    path = tmp_path / "r.csv"
    write_results_csv([row(method='odd,"name"')], path)
    with open(path, newline="") as fh:
        assert list(csv.reader(fh))[1][0] == 'odd,"name"'


def test_csv_wall_time_optional(tmp_path):
    path = tmp_path / "r.csv"
    write_results_csv([row(wall_time=2.0)], path, include_wall_time=False)
    assert read_results_csv(path)[0].wall_time is None


def test_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        write_results_csv([], tmp_path / "r.csv")


# -- summaries and plots ------------------------------------------------------


def test_summarize_and_median():
    rows = [row(seed=s, ab_ctr=v) for s, v in enumerate([0.1, 0.4, 0.2, 0.3])]
    q25, med, q75 = summarize(rows)[("popularity", "mle", 2000)]
    assert med == pytest.approx(0.25) and q25 < med < q75
    assert median_ctr(rows, "mle", "popularity", 2000) == pytest.approx(0.25)
    assert math.isnan(median_ctr(rows, "cb", "popularity", 2000))


def test_svg_single_point(tmp_path):
    path = tmp_path / "f.svg"
    emit_plot_svg([row()], path)
    root = ET.parse(path).getroot()
    (line,) = root.iter(f"{SVG}polyline")
    assert len(line.get("points").split()) == 1


def test_svg_four_methods_with_legend(tmp_path):
    rows = [row(method=m, train_size=n, seed=s, ab_ctr=0.01 * (i + 1) + 0.001 * s)
            for i, m in enumerate(("mle", "reweighted", "cb", "bayes-map"))
            for n in (2000, 4000) for s in range(3)]
    path = tmp_path / "f.svg"
    emit_plot_svg(rows, path)
    root = ET.parse(path).getroot()
    lines = [p for p in root.iter(f"{SVG}polyline") if p.get("class") == "series"]
    assert len(lines) == 4
    assert len({p.get("stroke") for p in lines}) == 4
    legend = [g for g in root.iter(f"{SVG}g") if g.get("class") == "legend-entry"]
    assert [next(g.iter(f"{SVG}text")).text for g in legend] == ["mle", "reweighted", "cb", "bayes-map"]


def test_svg_one_panel_per_logging_policy(tmp_path):
    rows = [row(), row(logging_policy="inverse-popularity")]
    path = tmp_path / "f.svg"
    emit_plot_svg(rows, path)
    text = path.read_text()
    assert "logging policy: popularity" in text and "logging policy: inverse-popularity" in text


def test_run_and_write_outputs(tmp_path):
    rows = run_and_write(SMALL, tmp_path)
    assert read_results_csv(tmp_path / "results.csv")[0].wall_time is None
    assert (tmp_path / "timings.csv").read_text().count("\n") == 1 + len(rows)
    ET.parse(tmp_path / "figure.svg")
