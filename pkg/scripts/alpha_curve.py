"""alpha(kappa) = tau*^2 / b* for both links over a kappa grid (CSV to stdout or --out)."""
import argparse
import csv
import sys
from dataclasses import dataclass

import numpy as np

from hdlrt.scaling import alpha_curve


@dataclass
class CurveConfig:
    kappa_min: float = 0.02
    kappa_max: float = 0.45
    points: int = 44


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=CurveConfig.points)
    ap.add_argument("--out", default=None)
    args = ap.parse_args(argv)
    cfg = CurveConfig(points=args.points)
    grid = np.linspace(cfg.kappa_min, cfg.kappa_max, cfg.points)
    curves = {m: alpha_curve(m, grid) for m in ("logistic", "probit")}
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["kappa", "alpha_logistic", "alpha_probit"])
    for k, a, b in zip(grid, curves["logistic"], curves["probit"]):
        w.writerow([f"{k:.6g}", f"{a.alpha:.12g}", f"{b.alpha:.12g}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
