"""Fixed-point solver for the high-dimensional LLR rescaling constant.

For an aspect ratio kappa = p/n < 1/2 the pair (tau*, b*) solves

    tau^2 = E[Psi(tau Z; b)^2] / kappa
    kappa = E[Psi'(tau Z; b)]

with Z ~ N(0, 1), and twice the LLR statistic for a null coefficient is
asymptotically (tau*^2 / b*) chi2_1. The second equation defines b(tau);
substituting it into the first gives the variance map V(tau^2), whose
unique fixed point is tau*^2.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import dist
from .errors import BracketFailure, HdlrtError, KappaOutOfRange, NonConvergence
from .links import get_link
from .prox import prox, psi_and_derivative, psi_window
from .quad import GaussianQuadrature, default_quadrature

KAPPA_MAX = 0.5 - 1e-3
B_MAX = 1e12
B_MIN = 1e-300
NEWTON_B_STEPS = 6
NEWTON_B_TOL = 1e-12
DAMPING = 0.5
FIXED_POINT_TOL = 1e-9
MAX_FIXED_POINT_ITER = 100_000


def check_kappa(kappa: float) -> float:
    kappa = float(kappa)
    if not (0.0 < kappa <= KAPPA_MAX) or math.isnan(kappa):
        raise KappaOutOfRange(
            f"kappa = {kappa} is outside (0, 1/2): for p/n above 1/2 the data are "
            "separable with high probability and the MLE does not exist"
        )
    return kappa


@dataclass(frozen=True)
class ScalingSolution:
    kappa: float
    tau_star: float
    b_star: float
    alpha: float
    iterations: int = 0
    residuals: tuple[float, float] = (0.0, 0.0)
    model: str = "logistic"

    @property
    def tau_sq(self) -> float:
        return self.tau_star**2

    def as_dict(self) -> dict:
        return {
            "model": self.model,
            "kappa": self.kappa,
            "tau_star": self.tau_star,
            "b_star": self.b_star,
            "alpha": self.alpha,
            "iterations": self.iterations,
            "residual_tau": self.residuals[0],
            "residual_b": self.residuals[1],
        }

    @classmethod
    def identity(cls, kappa: float = 0.0) -> "ScalingSolution":
        """A dummy solution with alpha = 1 (classical Wilks calibration)."""
        return cls(kappa=kappa, tau_star=1.0, b_star=1.0, alpha=1.0, model="identity")


@dataclass
class StateEvolutionTrace:
    tau_seq: list[float] = field(default_factory=list)
    b_seq: list[float] = field(default_factory=list)

    @property
    def tau_sq_seq(self) -> list[float]:
        return [t * t for t in self.tau_seq]


def g_of_b(link, tau: float, b: float, q: GaussianQuadrature | None = None) -> float:
    """G(b) = E[Psi'(tau Z; b)]; strictly increasing from 0 to 1 in b."""
    q = q or default_quadrature()
    z, w = q.rule(tau, psi_window(link, b))
    _, d = psi_and_derivative(link, b, z)
    return float(np.dot(w, d))


def _g_and_slope(link, tau, b, q):
    """G(b) and dG/d(log b), sharing one prox solve.

    With x = prox(z), w = b rho2(x) and dx/db = -rho1(x) / (1 + w):
    dG/db = E[(rho2(x) + b rho3(x) dx/db) / (1 + w)^2].
    """
    z, wts = q.rule(tau, psi_window(link, b))
    x = prox(link, b, z)
    r1, r2, r3 = link.rho1(x), link.rho2(x), link.rho3(x)
    w = b * r2
    dw = r2 - b * r3 * r1 / (1.0 + w)
    return float(np.dot(wts, w / (1.0 + w))), b * float(np.dot(wts, dw / (1.0 + w) ** 2))


def _newton_b(link, kappa, tau, q, hint):
    """Newton on log b from a warm start; None if it does not settle quickly."""
    log_b = math.log(hint)
    for _ in range(NEWTON_B_STEPS):
        g, slope = _g_and_slope(link, tau, math.exp(log_b), q)
        if abs(g - kappa) < NEWTON_B_TOL:
            return math.exp(log_b)
        if not slope > 0:
            return None
        step = (g - kappa) / slope
        if abs(step) > 1.0:
            return None
        log_b -= step
    return None


def _moments(link, tau, b, q):
    z, w = q.rule(tau, psi_window(link, b))
    p, d = psi_and_derivative(link, b, z)
    return float(np.dot(w, p * p)), float(np.dot(w, d))


def solve_b(link, kappa: float, tau: float, q: GaussianQuadrature | None = None,
            hint: float | None = None) -> float:
    """Unique b > 0 with E[Psi'(tau Z; b)] = kappa.

    With a warm-start ``hint`` a few Newton steps on log b usually suffice.
    Otherwise (or if Newton stalls) it brackets geometrically and runs
    Brent's method on log b. ``tau = 0`` gives the degenerate-limit value.
    """
    link = get_link(link)
    q = q or default_quadrature()
    if not 0.0 < kappa < 1.0:
        raise BracketFailure(f"no solution of G(b) = kappa for kappa = {kappa}")
    if tau < 0:
        raise ValueError("tau must be non-negative")

    if hint and hint > 0:
        b = _newton_b(link, kappa, tau, q, hint)
        if b is not None:
            return b

    def f(log_b):
        return g_of_b(link, tau, math.exp(log_b), q) - kappa

    # a warm-start hint is usually within a few percent, so bracket tightly
    first = math.log(1.02) if hint and hint > 0 else math.log(4.0)
    start = hint if hint and hint > 0 else 1.0
    lo = hi = math.log(start)
    f_lo = f_hi = f(lo)
    step = first
    while f_hi <= 0:
        lo, f_lo = hi, f_hi
        hi += step
        step *= 2.0
        if hi > math.log(B_MAX):
            raise BracketFailure(f"G(b) < kappa={kappa} for all b up to {B_MAX:g}")
        f_hi = f(hi)
    step = first
    while f_lo >= 0:
        hi, f_hi = lo, f_lo
        lo -= step
        step *= 2.0
        if lo < math.log(B_MIN):
            raise BracketFailure(f"G(b) > kappa={kappa} for all b down to {B_MIN:g}")
        f_lo = f(lo)
    log_b = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return math.exp(log_b)


def variance_map(link, kappa: float, tau_sq: float, q: GaussianQuadrature | None = None,
                 hint: float | None = None) -> float:
    """V(tau^2) = E[Psi(tau Z; b(tau))^2] / kappa."""
    return _variance_map(link, kappa, tau_sq, q, hint)[0]


def _variance_map(link, kappa, tau_sq, q=None, hint=None):
    q = q or default_quadrature()
    if tau_sq < 0:
        raise ValueError("tau_sq must be non-negative")
    tau = math.sqrt(tau_sq)
    b = solve_b(link, kappa, tau, q, hint)
    m2, _ = _moments(link, tau, b, q)
    return m2 / kappa, b


def residuals(link, kappa: float, tau: float, b: float,
              q: GaussianQuadrature | None = None) -> tuple[float, float]:
    """Defects (tau^2 - E[Psi^2]/kappa, kappa - E[Psi']) of the two equations."""
    q = q or default_quadrature()
    m2, m1 = _moments(link, tau, b, q)
    return tau * tau - m2 / kappa, kappa - m1


def solve_system(link, kappa: float, q: GaussianQuadrature | None = None,
                 tau0_sq: float | None = None, damping: float = DAMPING) -> ScalingSolution:
    """Solve for (tau*, b*) by damped iteration of the variance map.

    Starts from the classical variance 4 kappa unless ``tau0_sq`` is given.
    """
    link = get_link(link)
    kappa = check_kappa(kappa)
    q = q or default_quadrature()
    tau_sq = 4.0 * kappa if tau0_sq is None else float(tau0_sq)
    b = None
    for it in range(1, MAX_FIXED_POINT_ITER + 1):
        v, b = _variance_map(link, kappa, tau_sq, q, hint=b)
        new = (1.0 - damping) * tau_sq + damping * v
        converged = abs(new - tau_sq) < FIXED_POINT_TOL * max(1.0, tau_sq)
        tau_sq = new
        if converged:
            break
    else:
        raise NonConvergence(f"variance map iteration did not converge for kappa={kappa}")
    tau = math.sqrt(tau_sq)
    b = solve_b(link, kappa, tau, q, hint=b)
    res = residuals(link, kappa, tau, b, q)
    return ScalingSolution(kappa=kappa, tau_star=tau, b_star=b, alpha=tau_sq / b,
                           iterations=it, residuals=res, model=link.name)


@dataclass(frozen=True)
class CurvePoint:
    kappa: float
    alpha: float = float("nan")
    tau_star: float = float("nan")
    b_star: float = float("nan")
    error: str | None = None


def _curve_point(link, kappa, order):
    q = GaussianQuadrature.build(order)
    try:
        s = solve_system(link, kappa, q)
    except HdlrtError as exc:
        return CurvePoint(kappa=kappa, error=f"{type(exc).__name__}: {exc}")
    return CurvePoint(kappa=s.kappa, alpha=s.alpha, tau_star=s.tau_star, b_star=s.b_star)


def alpha_curve(link, kappa_grid, q: GaussianQuadrature | None = None,
                executor: Executor | None = None) -> list[CurvePoint]:
    """Solve on every grid point; failures become error records in place."""
    link = get_link(link)
    order = (q or default_quadrature()).order
    grid = [float(k) for k in kappa_grid]
    if executor is None:
        return [_curve_point(link, k, order) for k in grid]
    return list(executor.map(_curve_point, [link] * len(grid), grid, [order] * len(grid)))


def curve_to_csv(points, fh=None) -> str:
    buf = fh or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kappa", "tau_star", "b_star", "alpha"])
    for pt in points:
        w.writerow([f"{pt.kappa:.12g}", f"{pt.tau_star:.12g}", f"{pt.b_star:.12g}", f"{pt.alpha:.12g}"])
    return buf.getvalue() if fh is None else ""


def state_evolution(link, kappa: float, tau0_sq: float, steps: int,
                    q: GaussianQuadrature | None = None) -> StateEvolutionTrace:
    """Undamped recursion b_t = b(tau_t), tau_{t+1}^2 = V(tau_t^2)."""
    link = get_link(link)
    q = q or default_quadrature()
    if tau0_sq < 0:
        raise ValueError("tau0_sq must be non-negative")
    trace = StateEvolutionTrace(tau_seq=[math.sqrt(tau0_sq)])
    tau_sq, b = float(tau0_sq), None
    for _ in range(steps):
        tau_sq, b = _variance_map(link, kappa, tau_sq, q, hint=b)
        trace.b_seq.append(b)
        trace.tau_seq.append(math.sqrt(tau_sq))
    return trace


# Large-tau limits of b(tau) and V(tau^2) for fixed kappa in (0, 1/2).

def probit_b_limit(kappa: float) -> float:
    return 2.0 * kappa / (1.0 - 2.0 * kappa)


def probit_variance_ratio_limit(kappa: float) -> float:
    return 2.0 * kappa


def logistic_b_ratio_limit(kappa: float) -> float:
    """lim b(tau)/tau = Phi^{-1}(kappa + 1/2)."""
    return dist.normal_quantile(kappa + 0.5)


def logistic_variance_ratio_limit(kappa: float) -> float:
    """lim V(tau^2)/tau^2 = (x^2 P{Z>x} + E[Z^2; 0<Z<x]) / P{0<Z<x}, x = Phi^{-1}(kappa+1/2)."""
    x = logistic_b_ratio_limit(kappa)
    upper = 1.0 - dist.normal_cdf(x)
    mid = dist.normal_cdf(x) - 0.5
    # int_0^x z^2 phi(z) dz = Phi(x) - 1/2 - x phi(x)
    second = mid - x * dist.normal_pdf(x)
    return (x * x * upper + second) / mid
