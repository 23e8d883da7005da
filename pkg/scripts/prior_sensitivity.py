"""Median A/B CTR of the MAP estimate as the prior scale a = b grows.

With raw view counts as contexts, scores are sums of ~10 coefficients, so a
prior tuned for one-view contexts is very tight. Large a, b recover the
unregularised MLE.

    python3 scripts/prior_sensitivity.py [--n-seeds 20] [--size 8000]
"""
import argparse

from banditfeedback.agents import PriorSpec
from banditfeedback.harness import ExperimentConfig, median_ctr, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--n-seeds", type=int, default=20)
    parser.add_argument("--size", type=int, default=8000)
    parser.add_argument("--logging-policy", default="inverse-popularity")
    parser.add_argument("--scales", type=float, nargs="+", default=[0.01, 0.03, 0.1, 0.3, 1.0, 10.0])
    args = parser.parse_args()

    base = ExperimentConfig(logging_policy=args.logging_policy, methods=("mle",),
                            train_sizes=(args.size,), n_seeds=args.n_seeds)
    mle = median_ctr(run_experiment(base), "mle", args.logging_policy, args.size)
    print(f"mle          median {mle:.4f}")
    for s in args.scales:
        config = ExperimentConfig(logging_policy=args.logging_policy, methods=("bayes-map",),
                                  train_sizes=(args.size,), n_seeds=args.n_seeds,
                                  prior=PriorSpec(mu=-6.0, a=s, b=s))
        med = median_ctr(run_experiment(config), "bayes-map", args.logging_policy, args.size)
        print(f"a = b = {s:<5g} median {med:.4f}")


if __name__ == "__main__":
    main()
