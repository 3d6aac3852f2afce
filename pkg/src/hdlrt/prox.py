"""Scalar proximal operator of b * rho and the map Psi(z; b) = z - prox.

prox_{b rho}(z) minimizes b rho(x) + (x - z)^2 / 2. Its stationarity
equation g(x) = x + b rho'(x) - z = 0 has g' = 1 + b rho'' > 1, so a
Newton iteration safeguarded by bisection on a valid bracket always
converges. All functions here broadcast over arrays of ``z``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergence
from .links import EffectiveLink, get_link

MAX_ITER = 200
RTOL = 1e-12


def _bracket(link: EffectiveLink, b: float, z: np.ndarray):
    # rho'(t) <= max(t, 0) + c gives a point where g <= 0.
    shifted = z - b * link.rho1_offset
    lo = np.minimum(shifted, shifted / (1.0 + b))
    return lo, z.copy()


def prox(link, b: float, z):
    """prox_{b rho}(z), elementwise over ``z``."""
    link = get_link(link)
    if b < 0:
        raise ValueError(f"prox scale must be non-negative, got {b!r}")
    z_arr = np.asarray(z, dtype=float)
    scalar = z_arr.ndim == 0
    z_arr = np.atleast_1d(z_arr)
    if b == 0:
        x = z_arr.copy()
        return float(x[0]) if scalar else x

    lo, hi = _bracket(link, b, z_arr)
    x = np.clip(z_arr - b * link.rho1(z_arr), lo, hi)
    tol = RTOL * np.maximum(1.0, np.abs(z_arr))
    dx_old = hi - lo
    active = np.ones(z_arr.shape, dtype=bool)
    for _ in range(MAX_ITER):
        xa = x[active]
        g = xa + b * link.rho1(xa) - z_arr[active]
        done = np.abs(g) < tol[active]
        lo_a, hi_a = lo[active], hi[active]
        lo_a = np.where(g < 0, xa, lo_a)
        hi_a = np.where(g > 0, xa, hi_a)
        dx = g / (1.0 + b * link.rho2(xa))
        step = xa - dx
        # bisect when Newton leaves the bracket or is not at least halving
        slow = np.abs(dx) > 0.5 * dx_old[active]
        bisect = slow | ~((step > lo_a) & (step < hi_a))
        step = np.where(bisect, 0.5 * (lo_a + hi_a), step)
        dx_old[active] = np.where(bisect, 0.5 * (hi_a - lo_a), np.abs(dx))
        # bracket collapsed to adjacent floats: accept the current point
        stuck = (hi_a - lo_a) <= 4 * np.spacing(np.maximum(np.abs(lo_a), np.abs(hi_a)))
        step = np.where(done | stuck, xa, step)
        x[active] = step
        lo[active], hi[active] = lo_a, hi_a
        idx = np.flatnonzero(active)
        active[idx[done | stuck]] = False
        if not active.any():
            return float(x[0]) if scalar else x
    raise NonConvergence(f"prox did not converge in {MAX_ITER} iterations (b={b})")


def psi(link, b: float, z):
    """Psi(z; b) = b rho'(prox_{b rho}(z)), computed as z - prox (Moreau split)."""
    z_arr = np.asarray(z, dtype=float)
    out = z_arr - prox(link, b, z_arr)
    return out if np.ndim(out) else float(out)


def dpsi_dz(link, b: float, z):
    """d/dz Psi(z; b) = b rho''(x*) / (1 + b rho''(x*)), in [0, 1)."""
    link = get_link(link)
    if b == 0:
        out = np.zeros_like(np.asarray(z, dtype=float))
        return out if out.ndim else 0.0
    x = prox(link, b, z)
    w = b * np.asarray(link.rho2(x))
    out = w / (1.0 + w)
    return out if np.ndim(out) else float(out)


@dataclass(frozen=True)
class ProxEval:
    z: float
    b: float
    x_star: float
    psi: float
    dpsi_dz: float


def prox_eval(link, b: float, z: float) -> ProxEval:
    link = get_link(link)
    x = prox(link, b, float(z))
    w = b * link.rho2(x)
    return ProxEval(z=float(z), b=float(b), x_star=x, psi=float(z) - x, dpsi_dz=w / (1.0 + w))


def psi_and_derivative(link, b: float, z: np.ndarray):
    """(Psi, Psi') sharing one prox solve; the hot path of the scaling solver."""
    link = get_link(link)
    z = np.asarray(z, dtype=float)
    if b == 0:
        return np.zeros_like(z), np.zeros_like(z)
    x = prox(link, b, z)
    w = b * np.asarray(link.rho2(x))
    return z - x, w / (1.0 + w)


# Beyond |x| = 40 both links are flat (logistic) or nearly linear (probit).
CURVATURE_RANGE = 40.0


def psi_window(link, b: float) -> tuple[float, float]:
    """Interval of z whose prox lands in [-40, 40], where Psi(.; b) bends.

    Outside it Psi is affine in z up to slowly varying corrections, which
    is what the composite quadrature rule relies on.
    """
    link = get_link(link)
    k = CURVATURE_RANGE
    return -k + b * link.rho1(-k), k + b * link.rho1(k)
