"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py`` (lines appear in the terminal
summary) or directly with ``python tests/test_acceptance.py``.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from hdlrt import dist
from hdlrt.amp import amp_run_full, canonical_mle, gaussian_design
from hdlrt.glm import Dataset, empirical_alpha_tilde, fit_mle
from hdlrt.links import LOGISTIC, PROBIT
from hdlrt.prox import dpsi_dz, prox, psi
from hdlrt.scaling import (g_of_b, logistic_b_ratio_limit, logistic_variance_ratio_limit,
                           probit_b_limit, solve_b, solve_system, variance_map)
from hdlrt.simulate import SimConfig, run_simulation, run_trial, separability_fraction

RESULTS: dict[int, str] = {}
DESK = SimConfig(n=200, p=60, trials=400, design="gaussian", link="logistic", master_seed=7)
AMP_SEED = 0


def record(k: int, ok: bool, detail: str):
    line = f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[k] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def scaling():
    return solve_system(LOGISTIC, 0.3)


@pytest.fixture(scope="module")
def desk_run(scaling):
    t0 = time.perf_counter()
    report = run_simulation(DESK, scaling)
    return report, time.perf_counter() - t0


@pytest.fixture(scope="module")
def amp_setting(scaling):
    t0 = time.perf_counter()
    X, rng = gaussian_design(4000, 1200, AMP_SEED)
    run = amp_run_full(X, scaling, 25, rng)
    fit = canonical_mle(X)
    return X, run, fit, time.perf_counter() - t0


def test_criterion_01_rescaling_factor():
    t0 = time.perf_counter()
    res = subprocess.run([sys.executable, "-m", "hdlrt", "solve", "--model", "logistic", "--kappa", "0.3"],
                         capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    alpha = json.loads(res.stdout)["alpha"] if res.returncode == 0 else float("nan")
    record(1, 1.40 <= alpha <= 1.60 and elapsed < 1.0, f"alpha={alpha:.6f} in {elapsed:.2f}s (process)")


def test_criterion_02_probit_asymptotics():
    t0 = time.perf_counter()
    tau = 1e3
    worst = 0.0
    for kappa in (0.1, 0.2, 0.3, 0.4):
        b = solve_b(PROBIT, kappa, tau)
        v = variance_map(PROBIT, kappa, tau**2)
        worst = max(worst, abs(b / probit_b_limit(kappa) - 1), abs(v / (2 * kappa * tau**2) - 1))
    elapsed = time.perf_counter() - t0
    record(2, worst < 0.02 and elapsed < 5.0, f"max rel. deviation {worst:.2e} in {elapsed:.2f}s")


def test_criterion_03_logistic_asymptotics():
    tau = 1e3
    worst = 0.0
    for kappa in (0.1, 0.3):
        b = solve_b(LOGISTIC, kappa, tau)
        v = variance_map(LOGISTIC, kappa, tau**2)
        worst = max(worst, abs(b / tau / logistic_b_ratio_limit(kappa) - 1),
                    abs(v / tau**2 / logistic_variance_ratio_limit(kappa) - 1))
    record(3, worst < 0.02, f"max rel. deviation {worst:.2e}")


def test_criterion_04_classical_recovery():
    s = solve_system(LOGISTIC, 0.01)
    ratio = s.tau_sq / (4 * 0.01)
    record(4, 0.98 <= ratio <= 1.10, f"tau*^2/(4 kappa)={ratio:.5f}")


def test_criterion_05_property_suite(scaling):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    moreau = 0.0
    for link in (LOGISTIC, PROBIT):
        for b in 100.0 - rng.uniform(0, 100, 50):
            z = rng.uniform(-50, 50, 100)
            x = prox(link, b, z)
            moreau = max(moreau, np.max(np.abs(b * link.rho1(x) + x - z)))
    fd = 0.0
    h = 1e-5
    for link in (LOGISTIC, PROBIT):
        for b, z in zip(rng.uniform(0.05, 20, 50), rng.uniform(-10, 10, 50)):
            num = (psi(link, b, z + h) - psi(link, b, z - h)) / (2 * h)
            d = dpsi_dz(link, b, z)
            fd = max(fd, abs(num - d) / max(d, 1e-4))
    mono = all(g_of_b(LOGISTIC, tau, b1) < g_of_b(LOGISTIC, tau, b2)
               for tau, (b1, b2) in zip(rng.uniform(0.1, 20, 50), np.sort(rng.uniform(0.01, 50, (50, 2)))))
    starts = [solve_system(LOGISTIC, 0.3, tau0_sq=f * scaling.tau_sq).tau_sq for f in (0.1, 10.0)]
    unique = abs(starts[0] - starts[1])
    elapsed = time.perf_counter() - t0
    ok = moreau < 1e-10 and fd < 1e-5 and mono and unique < 1e-6 and elapsed < 10
    record(5, ok, f"moreau={moreau:.1e} fd={fd:.1e} G-monotone={mono} fixed-point gap={unique:.1e} "
                  f"in {elapsed:.1f}s")


def test_criterion_06_desk_monte_carlo(desk_run):
    report, elapsed = desk_run
    f = {m: report.tail_table[m][0.05][0] for m in ("classical", "bartlett", "adjusted")}
    ok = (report.n_pooled == 24_000 and 0.044 <= f["adjusted"] <= 0.056 and f["classical"] > 0.08
          and f["adjusted"] < f["bartlett"] < f["classical"] and report.gof_pvalue > 0.01 and elapsed < 600)
    record(6, ok, f"N={report.n_pooled} classical={f['classical']:.4f} bartlett={f['bartlett']:.4f} "
                  f"adjusted={f['adjusted']:.4f} gof p={report.gof_pvalue:.3f} in {elapsed:.0f}s")


def test_criterion_07_full_scale_trial(scaling):
    t0 = time.perf_counter()
    res = run_trial(SimConfig(n=4000, p=1200, trials=1, master_seed=0), scaling, 0)
    elapsed = time.perf_counter() - t0
    padj = res.pvalues[:, 2] if res.pvalues is not None else np.zeros(0)
    finite = int(np.sum(np.isfinite(padj)))
    record(7, finite == 1200 and elapsed < 300, f"{finite} finite adjusted p-values in {elapsed:.0f}s")


def test_criterion_08_separability():
    t0 = time.perf_counter()
    high = separability_fraction(200, 130, 100, seed=0)
    low = separability_fraction(200, 60, 100, seed=0)
    elapsed = time.perf_counter() - t0
    record(8, high >= 0.95 and low <= 0.05 and elapsed < 120,
           f"separable: p=130 {round(high * 100)}/100, p=60 {round(low * 100)}/100 in {elapsed:.0f}s")


def test_criterion_09_amp(scaling, amp_setting):
    X, run, fit, elapsed = amp_setting
    norm_gap = abs(run.trajectory[-1][1] - scaling.tau_sq) / scaling.tau_sq
    dist_gap = np.linalg.norm(run.beta - fit.beta_hat) / np.linalg.norm(fit.beta_hat)
    record(9, norm_gap < 0.10 and dist_gap < 0.10 and elapsed < 180,
           f"| ||b25||^2 - tau*^2 |/tau*^2={norm_gap:.4f} rel. dist to MLE={dist_gap:.2e} in {elapsed:.0f}s")


def test_criterion_10_alpha_tilde(scaling, amp_setting):
    X = amp_setting[0]
    data = Dataset(X, -np.ones(X.shape[0]))
    reduced = fit_mle(data, drop=0)
    at = empirical_alpha_tilde(data, reduced, j=0)
    gap = abs(at - scaling.b_star) / scaling.b_star
    record(10, reduced.converged and gap < 0.05, f"alpha~={at:.5f} b*={scaling.b_star:.5f} rel. gap={gap:.4f}")


def test_criterion_11_marginal_variance(scaling, desk_run):
    report, _ = desk_run
    v = np.var(math.sqrt(DESK.p) * report.beta_hats.ravel(), ddof=1)
    ratio = v / scaling.tau_sq
    record(11, abs(ratio - 1) < 0.10, f"var(sqrt(p) beta_j)/tau*^2={ratio:.4f}")


def test_criterion_12_numeric_primitives():
    a = dist.chisq_sf(1, 3.841459)
    b = dist.chisq_sf(19, 16.049)
    record(12, abs(a - 0.05) < 1e-6 and abs(b - 0.654) < 0.002, f"sf1={a:.9f} sf19={b:.6f}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
