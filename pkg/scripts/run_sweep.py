"""Training-size sweep under both logging policies: A/B CTR against training size.

Writes results.csv, timings.csv and figure.svg per logging policy, plus a
combined figure with one panel per policy.

    python3 scripts/run_sweep.py --out results/sweep [--n-seeds 20] [--workers 1]
"""
import argparse
import json
from dataclasses import replace
from pathlib import Path

from banditfeedback.harness import ExperimentConfig, emit_plot_svg, run_and_write, summarize

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--out", default="results/sweep")
    parser.add_argument("--n-seeds", type=int)
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    rows = []
    for name in ("experiment_popularity.json", "experiment_inverse_popularity.json"):
        config = ExperimentConfig.from_dict(json.loads((CONFIGS / name).read_text()))
        config = replace(config, workers=args.workers)
        if args.n_seeds:
            config = replace(config, n_seeds=args.n_seeds)
        rows += run_and_write(config, Path(args.out) / config.logging_policy)

    emit_plot_svg(rows, Path(args.out) / "figure.svg")
    for (policy, method, size), (q25, med, q75) in sorted(summarize(rows).items()):
        print(f"{policy:20s} {method:10s} {size:5d}  median {med:.4f}  IQR [{q25:.4f}, {q75:.4f}]")


if __name__ == "__main__":
    main()
