"""Fraction of separable null datasets as p/n crosses 1/2."""
import argparse
from dataclasses import dataclass

import numpy as np
from scipy import stats

from hdlrt.simulate import separability_fraction


@dataclass
class SweepConfig:
    n: int = 200
    trials: int = 100
    seed: int = 0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=SweepConfig.n)
    ap.add_argument("--trials", type=int, default=SweepConfig.trials)
    ap.add_argument("--seed", type=int, default=SweepConfig.seed)
    args = ap.parse_args(argv)
    print("kappa   observed   Cover")
    for kappa in np.arange(0.3, 0.71, 0.05):
        p = int(round(kappa * args.n))
        frac = separability_fraction(args.n, p, args.trials, args.seed)
        # exact probability for Gaussian rows: P(Bin(n - 1, 1/2) <= p - 1)
        exact = stats.binom.cdf(p - 1, args.n - 1, 0.5)
        print(f"{p / args.n:5.3f}   {frac:8.3f}   {exact:.3f}")


if __name__ == "__main__":
    main()
