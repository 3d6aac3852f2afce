"""Normal and chi-square primitives built on the standard library.

The chi-square tail goes through the regularized incomplete gamma function:
power series below ``a + 1`` and a Lentz continued fraction above it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)
_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 10_000


def normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return out if out.ndim else float(out)


_erfc = np.vectorize(math.erfc, otypes=[float])


def normal_cdf(x):
    """Standard normal CDF, accurate in both tails."""
    x = np.asarray(x, dtype=float)
    out = 0.5 * _erfc(-x / _SQRT2)
    return out if out.ndim else float(out)


# Acklam's rational approximation, used only as the Newton starting point.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)


def _acklam(u: float) -> float:
    lo = 0.02425
    if u < lo:
        q = math.sqrt(-2.0 * math.log(u))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if u > 1.0 - lo:
        return -_acklam(1.0 - u)
    q = u - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))


def _quantile_scalar(u: float) -> float:
    if not 0.0 < u < 1.0:
        raise ValueError(f"normal_quantile requires u in (0, 1), got {u!r}")
    x = _acklam(u)
    # Halley refinement; work on the smaller tail to keep the residual exact.
    for _ in range(50):
        if x > 0:
            err = (0.5 * math.erfc(x / _SQRT2)) - (1.0 - u)
            err = -err
        else:
            err = 0.5 * math.erfc(-x / _SQRT2) - u
        pdf = _INV_SQRT_2PI * math.exp(-0.5 * x * x)
        if pdf == 0.0:
            break
        step = err / pdf
        step = step / (1.0 + 0.5 * x * step)
        x -= step
        if abs(step) <= 1e-15 * max(1.0, abs(x)):
            break
    return x


def normal_quantile(u):
    """Inverse of :func:`normal_cdf` on the open unit interval."""
    arr = np.asarray(u, dtype=float)
    if arr.ndim == 0:
        return _quantile_scalar(float(arr))
    return np.array([_quantile_scalar(float(v)) for v in arr.ravel()]).reshape(arr.shape)


def _gamma_p_series(a: float, x: float) -> float:
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_cf(a: float, x: float) -> float:
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x)."""
    if x < 0 or a <= 0:
        raise ValueError("gamma_q requires a > 0 and x >= 0")
    if x == 0.0:
        return 1.0
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_cf(a, x)


def _chisq_sf_scalar(df: float, x: float) -> float:
    if x < 0 or math.isnan(x):
        raise ValueError(f"chi-square argument must be non-negative, got {x!r}")
    if math.isinf(x):
        return 0.0
    return min(1.0, max(0.0, gamma_q(0.5 * df, 0.5 * x)))


def chisq_sf(df, x):
    """Upper tail P{chi2_df > x}; vectorizes over ``x``."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        return _chisq_sf_scalar(df, float(arr))
    return np.array([_chisq_sf_scalar(df, float(v)) for v in arr.ravel()]).reshape(arr.shape)


@dataclass(frozen=True)
class ChiSquare:
    df: int

    def __post_init__(self):
        if self.df <= 0:
            raise ValueError("degrees of freedom must be positive")

    def sf(self, x):
        return chisq_sf(self.df, x)

    def cdf(self, x):
        return 1.0 - chisq_sf(self.df, x)
