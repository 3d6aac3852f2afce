"""Effective links for symmetric binary regression.

Under the symmetry condition mu(t) + mu(-t) = 1 the negative log-likelihood
is ``sum_i rho(-y_i x_i' beta)`` with y_i in {-1, +1}. Two links are shipped:

* logistic: rho(t) = log(1 + e^t)
* probit:   rho(t) = -log Phi(-t)

Every evaluator accepts scalars or arrays and is overflow-free on the whole
float range we use (|t| up to ~1e4 inside the prox solver).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_SQRT_2_OVER_PI = math.sqrt(2.0 / math.pi)

# Above this the inverse Mills ratio is evaluated by continued fraction.
PROBIT_TAIL = 8.0
_CF_DEPTH = 60


class Model(str, enum.Enum):
    LOGISTIC = "logistic"
    PROBIT = "probit"


def _out(x):
    return x if np.ndim(x) else float(x)


def _logistic_rho(t):
    return np.logaddexp(0.0, t)


def _logistic_rho1(t):
    return special.expit(t)


def _logistic_rho2(t):
    return special.expit(t) * special.expit(-t)


def _logistic_rho3(t):
    s = special.expit(t)
    return s * (1.0 - s) * (1.0 - 2.0 * s)


def _mills(t):
    """Probit hazard r = phi(t)/Phi(-t) and its excess r - t, both stable.

    For t > 0 the excess is the continued fraction
    r - t = 1/(t + 2/(t + 3/(t + ...))); for moderate t the scaled
    complementary error function gives r directly.
    """
    t = np.asarray(t, dtype=float)
    r = np.empty_like(t)
    e = np.empty_like(t)
    tail = t > PROBIT_TAIL
    if np.any(tail):
        tt = t[tail]
        acc = tt.copy()
        for k in range(_CF_DEPTH, 1, -1):
            acc = tt + k / acc
        e[tail] = 1.0 / acc
        r[tail] = tt + e[tail]
    body = ~tail
    if np.any(body):
        tb = t[body]
        r[body] = _SQRT_2_OVER_PI / special.erfcx(tb / _SQRT2)
        e[body] = r[body] - tb
    return r, e


def _probit_rho(t):
    return -special.log_ndtr(-np.asarray(t, dtype=float))


def _probit_rho1(t):
    return _mills(t)[0]


def _probit_rho2(t):
    r, e = _mills(t)
    return r * e


def _probit_rho3(t):
    # r (r - t)(2r - t) - r with r the hazard
    r, e = _mills(t)
    return r * (e * (r + e) - 1.0)



@dataclass(frozen=True)
class EffectiveLink:
    """A convex effective link together with its first three derivatives."""

    model: Model
    # sup_t rho''(t): exact for logistic, numerical bound for probit
    rho2_sup: float
    # rho'(t) <= max(t, 0) + rho1_offset for every t; used to bracket the prox
    rho1_offset: float

    def rho(self, t):
        return _out(_RHO[self.model][0](t))

    def rho1(self, t):
        return _out(_RHO[self.model][1](t))

    def rho2(self, t):
        return _out(_RHO[self.model][2](t))

    def rho3(self, t):
        return _out(_RHO[self.model][3](t))

    def mean(self, t):
        """Mean function mu(t) of the response, i.e. P{y = 1 | x'beta = t}."""
        if self.model is Model.LOGISTIC:
            return _out(special.expit(t))
        return _out(special.ndtr(t))

    @property
    def name(self) -> str:
        return self.model.value


_RHO = {
    Model.LOGISTIC: (_logistic_rho, _logistic_rho1, _logistic_rho2, _logistic_rho3),
    Model.PROBIT: (_probit_rho, _probit_rho1, _probit_rho2, _probit_rho3),
}

LOGISTIC = EffectiveLink(Model.LOGISTIC, rho2_sup=0.25, rho1_offset=1.0)
PROBIT = EffectiveLink(Model.PROBIT, rho2_sup=1.0, rho1_offset=_SQRT_2_OVER_PI)


def get_link(name) -> EffectiveLink:
    if isinstance(name, EffectiveLink):
        return name
    model = Model(str(getattr(name, "value", name)).lower())
    return LOGISTIC if model is Model.LOGISTIC else PROBIT


# Module-level conveniences mirroring the method API.
def rho(link, t):
    return get_link(link).rho(t)


def rho1(link, t):
    return get_link(link).rho1(t)


def rho2(link, t):
    return get_link(link).rho2(t)


def rho3(link, t):
    return get_link(link).rho3(t)
