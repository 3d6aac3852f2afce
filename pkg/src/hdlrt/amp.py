"""Approximate message passing for min_beta sum_i rho(x_i' beta).

Under the global null the MLE has the law of the minimizer of this
sign-free problem. With eta^{-1} = 0 and b_{-1} = 0 the recursion is

    eta^t       = X beta^t + Psi(eta^{t-1}; b_{t-1})
    beta^{t+1}  = beta^t - X' Psi(eta^t; b_t) / p

and starting at ||beta^0||^2 = tau*^2 the state-evolution sequence is
constant, so b_t = b* for every t. X is n x p with i.i.d. N(0, 1) entries.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .links import LOGISTIC, get_link
from .prox import prox


@dataclass
class AmpState:
    beta_t: np.ndarray
    eta_t: np.ndarray
    t: int
    b_t: float


@dataclass
class AmpRun:
    trajectory: list[tuple[int, float]]
    beta: np.ndarray
    # beta^{T-1}, eta^{T-1} and Psi(eta^{T-1}; b*) for the final T
    beta_prev: np.ndarray = field(repr=False)
    eta: np.ndarray = field(repr=False)
    psi: np.ndarray = field(repr=False)
    step_norms: list[float] = field(default_factory=list)


def amp_iterate(X, scaling, iters: int, beta0, link=LOGISTIC) -> AmpRun:
    link = get_link(link)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    b = scaling.b_star
    beta = np.array(beta0, dtype=float)
    beta_prev = beta.copy()
    psi_prev = np.zeros(n)  # Psi(eta^{-1}; b_{-1} = 0)
    eta = np.zeros(n)
    traj = [(0, float(beta @ beta))]
    steps = []
    for t in range(iters):
        eta = X @ beta + psi_prev
        psi_t = eta - prox(link, b, eta)
        beta_prev, beta = beta, beta - (X.T @ psi_t) / p
        psi_prev = psi_t
        traj.append((t + 1, float(beta @ beta)))
        steps.append(float(np.linalg.norm(beta - beta_prev)))
    return AmpRun(traj, beta, beta_prev, eta, psi_prev, steps)


def amp_run(X, scaling, iters: int, seed, link=LOGISTIC) -> list[tuple[int, float]]:
    """Norm trajectory [(t, ||beta^t||^2)] from a seeded random start.

    beta^0 is a uniformly random direction scaled to squared norm tau*^2.
    """
    run = amp_run_full(X, scaling, iters, seed, link)
    return run.trajectory


def amp_run_full(X, scaling, iters: int, seed, link=LOGISTIC) -> AmpRun:
    p = np.asarray(X).shape[1]
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(p)
    beta0 = scaling.tau_star * direction / np.linalg.norm(direction)
    return amp_iterate(X, scaling, iters, beta0, link)


def gaussian_design(n: int, p: int, seed) -> tuple[np.ndarray, np.random.Generator]:
    """Seeded n x p N(0, 1) design; the returned generator continues the stream."""
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, p)), rng


def canonical_mle(X, link=LOGISTIC, tol: float = 1e-10):
    """Newton solution of min_beta sum_i rho(x_i' beta), the problem AMP targets."""
    from .glm import Dataset, fit_mle

    X = np.asarray(X, dtype=float)
    return fit_mle(Dataset(X, -np.ones(X.shape[0])), get_link(link), tol=tol)


def stationarity_gap(X, scaling, run: AmpRun, link=LOGISTIC) -> tuple[float, float]:
    """Both sides of (b*/p) ||X' rho'(X beta^t + eta^{t-1} - eta^t)|| = ||beta^t - beta^{t-1}||."""
    link = get_link(link)
    p = np.asarray(X).shape[1]
    xb = X @ run.beta
    eta_next = xb + run.psi
    arg = xb + run.eta - eta_next
    lhs = scaling.b_star / p * np.linalg.norm(X.T @ link.rho1(arg))
    rhs = float(np.linalg.norm(run.beta - run.beta_prev))
    return float(lhs), rhs


def trajectory_to_csv(traj, fh=None) -> str:
    buf = fh or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "beta_norm_sq"])
    for t, v in traj:
        w.writerow([t, f"{v:.12g}"])
    return buf.getvalue() if fh is None else ""
