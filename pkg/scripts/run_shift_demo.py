"""Covariate-shift demo over many seeds: how often does IPS weighting help?

    python3 scripts/run_shift_demo.py --n-seeds 50 --out results/shift_demo
"""
import argparse
from pathlib import Path

import numpy as np

from banditfeedback.shift_demo import ShiftDemoConfig, run_shift_demo, shift_demo_svg


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--n-seeds", type=int, default=50)
    parser.add_argument("--noise-sd", type=float, default=0.05)
    parser.add_argument("--out", default="results/shift_demo")
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for seed in range(args.n_seeds):
        cfg = ShiftDemoConfig(noise_sd=args.noise_sd, seed=seed)
        result = run_shift_demo(cfg)
        reports.append(result.report())
        if seed == 0:
            shift_demo_svg(result, cfg, out / "shift_demo.svg")

    plain = np.array([r["mse_target_unweighted"] for r in reports])
    weighted = np.array([r["mse_target_weighted"] for r in reports])
    source = np.array([r["mse_source_unweighted"] for r in reports])
    print(f"weighted fit wins on the target in {(weighted < plain).sum()}/{len(reports)} seeds")
    print(f"median target MSE: unweighted {np.median(plain):.4f}, weighted {np.median(weighted):.4f}")
    print(f"median source MSE of the unweighted fit: {np.median(source):.4f}")


if __name__ == "__main__":
    main()
