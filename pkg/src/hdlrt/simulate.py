"""Monte Carlo harness for null LLR p-values.

Each trial draws a design and i.i.d. Bernoulli(1/2) responses, fits the
full model, and computes the LLR p-values for the requested coordinates.
Trials are seeded independently from (master_seed, trial_index), so the
pooled output does not depend on how trials are scheduled.
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import dist
from .errors import EmptyInput, HdlrtError
from .glm import Dataset, check_separable, fit_mle, llr_all
from .links import get_link

METHODS = ("classical", "bartlett", "adjusted")
THRESHOLDS = (0.05, 0.01, 0.005, 0.001, 0.0005, 0.0001)
GOF_BINS = 20


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    trials: int
    design: str = "gaussian"  # gaussian | bernoulli | gaussian_cov
    link: str = "logistic"
    coords: int | str = "all"  # "all" or the number of leading coordinates
    master_seed: int = 0
    # row covariance for gaussian_cov: a p x p matrix or a Toeplitz parameter
    covariance: object = None
    separation_check: str = "always"  # always | guard

    def __post_init__(self):
        if self.p >= self.n:
            raise ValueError(f"need p < n, got n={self.n}, p={self.p}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.design not in ("gaussian", "bernoulli", "gaussian_cov"):
            raise ValueError(f"unknown design {self.design!r}")
        if self.separation_check not in ("always", "guard"):
            raise ValueError("separation_check must be 'always' or 'guard'")

    @property
    def kappa(self) -> float:
        return self.p / self.n

    def coord_list(self) -> list[int]:
        if self.coords == "all":
            return list(range(self.p))
        return list(range(min(int(self.coords), self.p)))

    def describe(self) -> dict:
        d = asdict(self)
        cov = d.pop("covariance")
        if cov is not None:
            d["covariance"] = cov if np.isscalar(cov) else "matrix"
        return d


def toeplitz_covariance(p: int, rho: float) -> np.ndarray:
    idx = np.arange(p)
    return rho ** np.abs(idx[:, None] - idx[None, :])


def _cov_factor(cfg: SimConfig) -> np.ndarray:
    cov = cfg.covariance
    if cov is None:
        raise ValueError("gaussian_cov design needs a covariance")
    if np.isscalar(cov):
        cov = toeplitz_covariance(cfg.p, float(cov))
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (cfg.p, cfg.p) or not np.allclose(cov, cov.T):
        raise ValueError("covariance must be a symmetric p x p matrix")
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise ValueError("covariance is not positive definite") from exc


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(master_seed), spawn_key=(int(trial_index),)))


def make_design(cfg: SimConfig, trial_index: int, factor: np.ndarray | None = None) -> Dataset:
    """Design and null responses for one trial; deterministic in (seed, trial)."""
    rng = trial_rng(cfg.master_seed, trial_index)
    n, p = cfg.n, cfg.p
    if cfg.design == "bernoulli":
        X = rng.choice(np.array([-1.0, 1.0]), size=(n, p))
    else:
        X = rng.standard_normal((n, p))
        if cfg.design == "gaussian_cov":
            L = _cov_factor(cfg) if factor is None else factor
            X = X @ L.T
    y = rng.choice(np.array([-1.0, 1.0]), size=n)
    return Dataset(X, y)


@dataclass
class TrialResult:
    trial: int
    separable: bool = False
    error: str | None = None
    coords: list[int] = field(default_factory=list)
    lam: np.ndarray | None = None
    pvalues: np.ndarray | None = None  # shape (len(coords), 3)
    beta_hat: np.ndarray | None = None


def run_trial(cfg: SimConfig, scaling, trial_index: int, factor=None) -> TrialResult:
    link = get_link(cfg.link)
    data = make_design(cfg, trial_index, factor)
    if cfg.separation_check == "always" and check_separable(data):
        return TrialResult(trial_index, separable=True)
    try:
        fit = fit_mle(data, link)
        if fit.separable:
            return TrialResult(trial_index, separable=True)
        if not fit.converged:
            return TrialResult(trial_index, error=f"full fit failed: {fit.message}")
        recs = llr_all(data, fit, cfg.coord_list(), scaling, link)
    except HdlrtError as exc:
        return TrialResult(trial_index, error=f"{type(exc).__name__}: {exc}")
    ok = [r for r in recs if r.ok]
    failed = [r for r in recs if not r.ok]
    res = TrialResult(
        trial_index,
        coords=[r.j for r in ok],
        lam=np.array([r.lam for r in ok]),
        pvalues=np.array([[r.p_classical, r.p_bartlett, r.p_adjusted] for r in ok]).reshape(-1, 3),
        beta_hat=fit.beta_hat,
    )
    if failed:
        res.error = f"{len(failed)} reduced fits failed"
    return res


def _run_chunk(args):
    cfg, scaling, indices = args
    factor = _cov_factor(cfg) if cfg.design == "gaussian_cov" else None
    return [run_trial(cfg, scaling, i, factor) for i in indices]


def default_workers() -> int:
    env = os.environ.get("HDLRT_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class SimulationReport:
    config: SimConfig
    pooled_pvalues: dict[str, np.ndarray]
    tail_table: dict[str, dict[float, tuple[float, float]]]
    gof_stat: float
    gof_pvalue: float
    separable_trials: int
    failed_trials: int
    gof_by_method: dict[str, tuple[float, float]] = field(default_factory=dict)
    # (trial, j) for each pooled p-value, in canonical order
    index: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=int), repr=False)
    lam: np.ndarray = field(default_factory=lambda: np.zeros(0), repr=False)
    # full-model MLEs of the non-separable, successful trials (rows)
    beta_hats: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)), repr=False)
    errors: list[str] = field(default_factory=list)

    @property
    def n_pooled(self) -> int:
        return len(self.pooled_pvalues["adjusted"])

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.describe(),
            "tail_table": {
                m: {f"{t:g}": {"fraction": f, "se": se} for t, (f, se) in tab.items()}
                for m, tab in self.tail_table.items()
            },
            "gof": {"stat": self.gof_stat, "pvalue": self.gof_pvalue},
            "gof_by_method": {m: {"stat": s, "pvalue": pv} for m, (s, pv) in self.gof_by_method.items()},
            "separable_trials": self.separable_trials,
            "failed_trials": self.failed_trials,
            "pooled_count": self.n_pooled,
        }

    def pvalues_csv(self, fh=None) -> str:
        buf = fh or io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trial", "j", "p_classical", "p_bartlett", "p_adjusted"])
        pv = [self.pooled_pvalues[m] for m in METHODS]
        for k, (trial, j) in enumerate(self.index):
            w.writerow([int(trial), int(j)] + [f"{col[k]:.12g}" for col in pv])
        return buf.getvalue() if fh is None else ""


def tail_table(pvalues, thresholds=THRESHOLDS) -> dict[float, tuple[float, float]]:
    """Fraction of p-values at or below each threshold, with binomial SE."""
    pv = np.asarray(pvalues, dtype=float)
    n = len(pv)
    out = {}
    for t in thresholds:
        f = float(np.mean(pv <= t)) if n else float("nan")
        out[t] = (f, math.sqrt(f * (1.0 - f) / n) if n else float("nan"))
    return out


def gof_uniformity(pvalues, bins: int = GOF_BINS) -> tuple[float, float]:
    """Pearson chi-square of 20 equal-width bins on [0, 1] vs. uniform; df = 19."""
    pv = np.asarray(pvalues, dtype=float)
    if pv.size == 0:
        raise EmptyInput("goodness-of-fit needs at least one p-value")
    if np.any((pv < 0) | (pv > 1)) or np.isnan(pv).any():
        raise ValueError("p-values must lie in [0, 1]")
    counts, _ = np.histogram(pv, bins=bins, range=(0.0, 1.0))
    expected = pv.size / bins
    stat = float(np.sum((counts - expected) ** 2) / expected)
    return stat, dist.chisq_sf(bins - 1, stat)


def empirical_cdf(pvalues, grid) -> list[tuple[float, float]]:
    """[(t, fraction of p-values <= t)] for each grid point."""
    pv = np.sort(np.asarray(pvalues, dtype=float))
    g = np.asarray(grid, dtype=float)
    if pv.size == 0:
        raise EmptyInput("empirical CDF of an empty sample")
    frac = np.searchsorted(pv, g, side="right") / pv.size
    return list(zip(g.tolist(), frac.tolist()))


def tail_grid(p: int) -> np.ndarray:
    """Grid 0.1/p, 1.1/p, ..., up to 12/p used for the small-p-value CDF."""
    return np.arange(0.1, 12.0 + 1e-9, 1.0) / p


def run_simulation(cfg: SimConfig, scaling, workers: int | None = None,
                   progress=None) -> SimulationReport:
    """Run all trials and pool their p-values.

    With ``workers > 1`` trials are spread over processes in contiguous
    chunks; results are re-sorted by trial so the output is identical.
    """
    workers = 1 if workers is None else max(1, int(workers))
    indices = list(range(cfg.trials))
    if workers == 1:
        factor = _cov_factor(cfg) if cfg.design == "gaussian_cov" else None
        results = []
        for i in indices:
            results.append(run_trial(cfg, scaling, i, factor))
            if progress:
                progress(i + 1, cfg.trials)
    else:
        chunks = [indices[k::workers] for k in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = ex.map(_run_chunk, [(cfg, scaling, c) for c in chunks if c])
            results = [r for part in parts for r in part]
    results.sort(key=lambda r: r.trial)
    return summarize(cfg, results)


def summarize(cfg: SimConfig, results: list[TrialResult]) -> SimulationReport:
    separable = sum(r.separable for r in results)
    failed = sum(1 for r in results if r.error is not None and r.pvalues is None)
    good = [r for r in results if r.pvalues is not None and len(r.pvalues)]
    if good:
        pv = np.vstack([r.pvalues for r in good])
        index = np.array([(r.trial, j) for r in good for j in r.coords], dtype=int)
        lam = np.concatenate([r.lam for r in good])
        betas = np.vstack([r.beta_hat for r in good])
    else:
        pv = np.zeros((0, 3))
        index = np.zeros((0, 2), dtype=int)
        lam = np.zeros(0)
        betas = np.zeros((0, cfg.p))
    pooled = {m: pv[:, k] for k, m in enumerate(METHODS)}
    tails = {m: tail_table(pooled[m]) for m in METHODS}
    gofs = {m: gof_uniformity(pooled[m]) if len(pooled[m]) else (float("nan"), float("nan"))
            for m in METHODS}
    return SimulationReport(
        config=cfg,
        pooled_pvalues=pooled,
        tail_table=tails,
        gof_stat=gofs["adjusted"][0],
        gof_pvalue=gofs["adjusted"][1],
        separable_trials=separable,
        failed_trials=failed,
        gof_by_method=gofs,
        index=index,
        lam=lam,
        beta_hats=betas,
        errors=[f"trial {r.trial}: {r.error}" for r in results if r.error],
    )


def separability_fraction(n: int, p: int, trials: int, seed: int) -> float:
    """Fraction of Gaussian-design null trials whose data are separable.

    Uses the same per-trial streams as ``make_design`` but allows p >= n.
    """
    if n < 1 or p < 1 or trials < 1:
        raise ValueError("n, p and trials must be positive")
    hits = 0
    for i in range(trials):
        rng = trial_rng(seed, i)
        X = rng.standard_normal((n, p))
        y = rng.choice(np.array([-1.0, 1.0]), size=n)
        hits += check_separable(Dataset(X, y))
    return hits / trials
