"""Run AMP on a Gaussian design and compare with the Newton MLE and alpha-tilde."""
import argparse
from dataclasses import dataclass

import numpy as np

from hdlrt.amp import amp_run_full, canonical_mle, gaussian_design, stationarity_gap
from hdlrt.glm import Dataset, empirical_alpha_tilde, fit_mle
from hdlrt.scaling import solve_system


@dataclass
class AmpConfig:
    n: int = 4000
    p: int = 1200
    iters: int = 25
    seed: int = 0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=AmpConfig.n)
    ap.add_argument("--p", type=int, default=AmpConfig.p)
    ap.add_argument("--iters", type=int, default=AmpConfig.iters)
    ap.add_argument("--seeds", type=int, nargs="+", default=[AmpConfig.seed])
    args = ap.parse_args(argv)
    s = solve_system("logistic", args.p / args.n)
    print(f"tau*^2={s.tau_sq:.6f} b*={s.b_star:.6f}")
    print("seed  ||b_T||^2/tau*^2  ||b_mle||^2/tau*^2  rel.dist  alpha~/b*  stationarity")
    for seed in args.seeds:
        X, rng = gaussian_design(args.n, args.p, seed)
        run = amp_run_full(X, s, args.iters, rng)
        mle = canonical_mle(X)
        data = Dataset(X, -np.ones(args.n))
        at = empirical_alpha_tilde(data, fit_mle(data, drop=0), j=0)
        lhs, rhs = stationarity_gap(X, s, run)
        rel = np.linalg.norm(run.beta - mle.beta_hat) / np.linalg.norm(mle.beta_hat)
        print(f"{seed:4d}  {run.trajectory[-1][1] / s.tau_sq:16.4f}  "
              f"{mle.beta_hat @ mle.beta_hat / s.tau_sq:18.4f}  {rel:8.2e}  {at / s.b_star:9.4f}  "
              f"{abs(lhs - rhs):.1e}")


if __name__ == "__main__":
    main()
