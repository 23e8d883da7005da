import json
from pathlib import Path

import numpy as np
import pytest

from banditfeedback.cli import main
from banditfeedback.core import read_log

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def test_simulate_train_evaluate(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["simulate", "--n-events", "400", "--seed", "2", "--out", out]) == 0
    logs = read_log(tmp_path / "logs.jsonl")
    assert len(logs) == 400 and logs.num_items == 10

    assert main(["train", "--logs", str(tmp_path / "logs.jsonl"), "--method", "mle", "--out", out]) == 0
    record = json.loads((tmp_path / "beta.json").read_text())
    assert record["format"] == "beta-v1" and len(record["beta"]) == 100

    assert main(["evaluate", "--beta", str(tmp_path / "beta.json"), "--n-events", "1000", "--seed", "2",
                 "--out", out]) == 0
    report = json.loads((tmp_path / "evaluation.json").read_text())
    assert 0 <= report["ab_ctr"] <= 1 and report["n_events"] == 1000


def test_simulate_finite_config(tmp_path):
    assert main(["simulate", "--config", str(CONFIGS / "finite_example.json"), "--n-events", "50",
                 "--logging-policy", "uniform", "--out", str(tmp_path)]) == 0
    logs = read_log(tmp_path / "logs.jsonl")
    assert np.all(logs.views.sum(axis=1) == 2)
    assert np.all(logs.propensities == 1 / 3)


def test_experiment_writes_outputs(tmp_path):
    cfg = write_json(tmp_path / "exp.json", {
        "sim": {"num_items": 4, "seed": 1}, "methods": ["mle", "cb"], "train_sizes": [200],
        "ab_test_size": 300, "n_seeds": 2,
    })
    out = tmp_path / "run"
    assert main(["experiment", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "results.csv").read_text().count("\n") == 5
    assert (out / "figure.svg").exists() and (out / "timings.csv").exists()


def test_shift_demo_command(tmp_path):
    assert main(["shift-demo", "--n-seeds", "3", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "shift_demo.csv").read_text().splitlines()
    assert lines[0] == "seed,mse_source_unweighted,mse_target_unweighted,mse_target_weighted"
    assert len(lines) == 4
    assert (tmp_path / "shift_demo.svg").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["train", "--logs", "/nonexistent/logs.jsonl"],
        ["evaluate", "--beta", "/nonexistent/beta.json"],
        ["experiment", "--config", "/nonexistent/config.json"],
    ],
)
def test_failures_exit_nonzero_with_one_line(argv, tmp_path, capsys):
    assert main(argv + ["--out", str(tmp_path)]) != 0
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error:")


def test_bad_config_key(tmp_path, capsys):
    cfg = write_json(tmp_path / "bad.json", {"num_itmes": 5})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 1
    assert "num_itmes" in capsys.readouterr().err


def test_evaluate_rejects_mismatched_beta(tmp_path, capsys):
    beta = write_json(tmp_path / "beta.json", {"format": "beta-v1", "num_items": 3, "beta": [0.0] * 9})
    assert main(["evaluate", "--beta", beta, "--out", str(tmp_path)]) == 1
    assert "3 items" in capsys.readouterr().err


def test_unknown_subcommand_exits_nonzero():
    with pytest.raises(SystemExit) as exc:
        main(["fly"])
    assert exc.value.code != 0
