"""Command-line front end: ``hdlrt {solve,curve,simulate,adjust,separability,amp}``.

Exit codes: 0 success, 1 usage, 2 domain error (kappa range, separable
data), 3 I/O or parse error, 4 numerical non-convergence.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import dist
from .errors import BracketFailure, EmptyInput, KappaOutOfRange, NonConvergence, SingularMatrixError
from .links import get_link
from .scaling import alpha_curve, check_kappa, curve_to_csv, solve_system

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3, 4
DIGITS = 12


class UsageError(Exception):
    pass


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _round(x: float) -> float:
    return float(f"{x:.{DIGITS}g}")


def clean_json(obj):
    """Round floats to 12 significant digits; non-finite values become strings.

    Any dict that contained a non-finite value gains ``"error": true``.
    """
    if isinstance(obj, dict):
        out, bad = {}, False
        for k, v in obj.items():
            if isinstance(v, (float, np.floating)) and not math.isfinite(v):
                bad = True
            out[k] = clean_json(v)
        if bad:
            out["error"] = True
        return out
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _round(float(obj)) if math.isfinite(obj) else str(float(obj))
    return obj


def dump_json(obj, fh=None):
    text = json.dumps(clean_json(obj), indent=2, allow_nan=False)
    (fh or sys.stdout).write(text + "\n")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _workers(args) -> int:
    from .simulate import default_workers
    return args.workers if args.workers else default_workers()


def _write_text(path, text):
    try:
        if path in (None, "-"):
            sys.stdout.write(text)
        else:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write {path}: {exc}") from exc


def _solution_json(sol) -> dict:
    return {"kappa": sol.kappa, "tau_star": sol.tau_star, "b_star": sol.b_star, "alpha": sol.alpha}


def _kappa_from(args) -> float:
    if args.kappa is not None:
        return check_kappa(args.kappa)
    if args.n is None or args.p is None:
        raise UsageError("give --kappa or both --n and --p")
    if args.n < 1 or args.p < 1:
        raise UsageError("--n and --p must be positive")
    return check_kappa(args.p / args.n)


# ---- commands ---------------------------------------------------------------

def cmd_solve(args):
    link = get_link(args.model)
    kappa = check_kappa(args.kappa)
    dump_json(_solution_json(solve_system(link, kappa)))


def cmd_curve(args):
    link = get_link(args.model)
    lo, hi = args.kappa_min, args.kappa_max
    check_kappa(lo)
    check_kappa(hi)
    if hi < lo:
        raise UsageError("--kappa-max must not be below --kappa-min")
    grid = [lo] if args.points == 1 else np.linspace(lo, hi, args.points).tolist()
    workers = _workers(args)
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(grid))) as ex:
            points = alpha_curve(link, grid, executor=ex)
    else:
        points = alpha_curve(link, grid)
    failed = [pt for pt in points if pt.error]
    if args.format == "json":
        rows = [{"kappa": pt.kappa, "tau_star": pt.tau_star, "b_star": pt.b_star, "alpha": pt.alpha}
                | ({"message": pt.error} if pt.error else {}) for pt in points]
        buf = io.StringIO()
        dump_json(rows[0] if len(rows) == 1 else rows, buf)
        _write_text(args.out, buf.getvalue())
    else:
        _write_text(args.out, curve_to_csv(points))
    for pt in failed:
        print(f"kappa={pt.kappa:g}: {pt.error}", file=sys.stderr)
    if failed:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_simulate(args):
    from .simulate import SimConfig, run_simulation

    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    if args.p >= args.n:
        raise UsageError("--p must be smaller than --n")
    coords = "all" if args.coords == "all" else _parse_coords(args.coords)
    cov = args.toeplitz if args.design == "gaussian_cov" else None
    if args.design == "gaussian_cov" and cov is None:
        raise UsageError("--design gaussian_cov needs --toeplitz RHO")
    link = get_link(args.model)
    kappa = check_kappa(args.p / args.n)
    cfg = SimConfig(n=args.n, p=args.p, trials=args.trials, design=args.design, link=link.name,
                    coords=coords, master_seed=args.seed, covariance=cov,
                    separation_check=args.separation_check)
    scaling = solve_system(link, kappa)
    report = run_simulation(cfg, scaling, workers=_workers(args))
    payload = report.to_json_dict()
    payload["scaling"] = _solution_json(scaling)
    buf = io.StringIO()
    dump_json(payload, buf)
    if args.out:
        _write_text(f"{args.out}.json", buf.getvalue())
        _write_text(f"{args.out}.csv", report.pvalues_csv())
    else:
        sys.stdout.write(buf.getvalue())
    for msg in report.errors:
        print(msg, file=sys.stderr)
    return EXIT_OK


def _parse_coords(s):
    try:
        k = int(s)
    except ValueError:
        raise UsageError(f"--coords must be 'all' or a positive integer, got {s!r}") from None
    if k < 1:
        raise UsageError("--coords must be positive")
    return k


def _read_llr_csv(path):
    try:
        fh = sys.stdin if path == "-" else open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: line 1: empty file") from None
        header = [h.strip() for h in header]
        if "lambda" not in header:
            raise InputError(f"{path}: line 1: missing 'lambda' column")
        rows = []
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}: line {line}: expected {len(header)} fields, got {len(row)}")
            try:
                lam = float(row[header.index("lambda")])
            except ValueError:
                raise InputError(f"{path}: line {line}: lambda is not a number") from None
            if not math.isfinite(lam) or lam < 0:
                raise InputError(f"{path}: line {line}: lambda must be finite and non-negative")
            rows.append((row, lam))
    return header, rows


def cmd_adjust(args):
    header, rows = _read_llr_csv(args.input)
    link = get_link(args.model)
    sol = solve_system(link, _kappa_from(args))
    if "p_adjusted" in header:
        col = header.index("p_adjusted")
    else:
        col = len(header)
        header = header + ["p_adjusted"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row, lam in rows:
        p_adj = float(dist.chisq_sf(1, 2.0 * lam / sol.alpha))
        row = list(row)
        if col == len(row):
            row.append("")
        row[col] = f"{p_adj:.{DIGITS}g}"
        w.writerow(row)
    _write_text(args.out, buf.getvalue())


def cmd_separability(args):
    from .simulate import separability_fraction

    if args.trials < 1:
        raise UsageError("--trials must be at least 1")
    frac = separability_fraction(args.n, args.p, args.trials, args.seed)
    dump_json({"n": args.n, "p": args.p, "trials": args.trials, "seed": args.seed,
               "separable_fraction": frac})


def cmd_amp(args):
    from .amp import amp_run_full, gaussian_design, trajectory_to_csv

    if args.p >= args.n:
        raise UsageError("--p must be smaller than --n")
    link = get_link(args.model)
    sol = solve_system(link, check_kappa(args.p / args.n))
    X, rng = gaussian_design(args.n, args.p, args.seed)
    run = amp_run_full(X, sol, args.iters, rng, link)
    _write_text(args.out, trajectory_to_csv(run.trajectory))
    if args.out not in (None, "-"):
        final = run.trajectory[-1][1]
        dump_json({"tau_star_sq": sol.tau_sq, "b_star": sol.b_star, "iters": args.iters,
                   "final_norm_sq": final, "relative_gap": abs(final - sol.tau_sq) / sol.tau_sq})


# ---- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="hdlrt", description="Calibrated likelihood-ratio tests for high-dimensional GLMs.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def model(p):
        p.add_argument("--model", choices=["logistic", "probit"], default="logistic")

    def workers(p):
        p.add_argument("--workers", type=_positive_int, default=None,
                       help="worker processes (default: $HDLRT_WORKERS or CPU count)")

    p = sub.add_parser("solve", help="solve for (tau*, b*) and alpha at one kappa")
    model(p)
    p.add_argument("--kappa", type=float, required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("curve", help="alpha(kappa) over a grid")
    model(p)
    p.add_argument("--kappa-min", type=float, default=0.05)
    p.add_argument("--kappa-max", type=float, default=0.45)
    p.add_argument("--points", type=_positive_int, default=9)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out", default=None)
    workers(p)
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("simulate", help="Monte Carlo null LLR experiment")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--p", type=int, default=60)
    p.add_argument("--trials", type=int, default=400)
    p.add_argument("--design", choices=["gaussian", "bernoulli", "gaussian_cov"], default="gaussian")
    p.add_argument("--toeplitz", type=float, default=None,
                   help="row covariance rho^|i-j| for --design gaussian_cov")
    model(p)
    p.add_argument("--coords", default="all", help="'all' or the number of leading coordinates")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--separation-check", choices=["always", "guard"], default="always",
                   help="LP check every trial, or only when the fit diverges")
    p.add_argument("--out", default=None, help="output prefix for PREFIX.json and PREFIX.csv")
    workers(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("adjust", help="append adjusted p-values to an LLR CSV")
    p.add_argument("--input", required=True)
    model(p)
    p.add_argument("--kappa", type=float, default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_adjust)

    p = sub.add_parser("separability", help="fraction of separable null datasets")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--p", type=_positive_int, required=True)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_separability)

    p = sub.add_parser("amp", help="AMP norm trajectory on a Gaussian design")
    model(p)
    p.add_argument("--n", type=_positive_int, default=4000)
    p.add_argument("--p", type=_positive_int, default=1200)
    p.add_argument("--iters", type=_positive_int, default=25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_amp)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        code = args.func(args)
    except UsageError as exc:
        print(f"hdlrt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KappaOutOfRange as exc:
        print(f"hdlrt: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (InputError, EmptyInput) as exc:
        print(f"hdlrt: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NonConvergence, BracketFailure, SingularMatrixError) as exc:
        print(f"hdlrt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"hdlrt: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
