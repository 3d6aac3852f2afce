"""Binary-regression MLE, separability check, and LLR p-values.

The negative log-likelihood under a symmetric link is

    l(beta) = sum_i rho(-y_i x_i' beta),    y_i in {-1, +1}

(see :mod:`hdlrt.links`). For each tested coordinate j the statistic is
Lambda_j = l(beta_hat_{(-j)}) - l(beta_hat), and three p-values are
reported against chi2_1: classical (2 Lambda), Bartlett-corrected
(2 Lambda / (1 + alpha_n / n)) and rescaled (2 Lambda * b* / tau*^2).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.optimize import linprog

from . import dist
from .errors import DimensionMismatch, SingularMatrixError
from .links import LOGISTIC, get_link

GRAD_TOL = 1e-8  # times n, on the sup norm of the gradient
MAX_NEWTON = 100
MAX_HALVINGS = 40
DIVERGENCE_NORM = 50.0
SEPARATION_MARGIN = 1e-7
_ARMIJO = 1e-4


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    y_signed: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y_signed, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"design must be 2-D, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DimensionMismatch(f"response has shape {y.shape}, expected ({X.shape[0]},)")
        if np.isnan(X).any() or np.isnan(y).any():
            raise ValueError("design and response must not contain NaN")
        if not np.all(np.abs(y) == 1):
            raise ValueError("y_signed entries must be +1 or -1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y_signed", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @classmethod
    def from_binary(cls, X, y01) -> "Dataset":
        """Build from 0/1 responses (y = 1 maps to +1, y = 0 to -1)."""
        y01 = np.asarray(y01)
        return cls(X, np.where(y01 == 1, 1.0, -1.0))


@dataclass
class FitResult:
    beta_hat: np.ndarray
    negloglik: float
    converged: bool
    separable: bool
    newton_iters: int
    grad_norm: float
    message: str = ""
    # Hessian of l at beta_hat; kept for warm-starting reduced fits
    hessian: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.converged and self.separable:
            raise ValueError("a fit cannot be both converged and separable")


@dataclass(frozen=True)
class LlrRecord:
    j: int
    lam: float
    p_classical: float
    p_bartlett: float
    p_adjusted: float
    bartlett_alpha_n: float
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def negloglik(X, y_signed, beta, link=LOGISTIC) -> float:
    link = get_link(link)
    return float(np.sum(link.rho(-y_signed * (X @ beta))))


def _gradient(X, ys, m, link):
    return -(X.T @ (ys * link.rho1(m)))


def _hessian(X, m, link):
    w = link.rho2(m)
    return X.T @ (w[:, None] * X)


def _line_search(X, ys, link, beta, direction, ell, slope):
    """Backtracking by halving until the Armijo condition holds."""
    step = 1.0
    for _ in range(MAX_HALVINGS):
        cand = beta + step * direction
        m = -ys * (X @ cand)
        val = float(np.sum(link.rho(m)))
        if val <= ell + _ARMIJO * step * slope:
            return cand, m, val
        step *= 0.5
    return None


def fit_mle(data: Dataset, link=LOGISTIC, *, beta0=None, drop: int | None = None,
            tol: float = GRAD_TOL, max_iter: int = MAX_NEWTON,
            check_separation: bool = True) -> FitResult:
    """Newton's method with step halving, started at ``beta0`` (default 0).

    ``drop`` pins one coordinate at zero, giving the reduced-model fit with
    the full-length coefficient vector. When the iterate norm exceeds 50
    the data are tested for separation; separable data return
    ``separable=True`` instead of a diverging estimate. An iterate that
    classifies every row strictly correctly is taken as a separation
    certificate as well, since no finite MLE can do that.
    """
    link = get_link(link)
    X, ys = data.X, data.y_signed
    n, p = X.shape
    if n <= p:
        raise DimensionMismatch(f"need n > p to fit, got n={n}, p={p}")
    free = np.ones(p, dtype=bool)
    if drop is not None:
        free[drop] = False
    beta = np.zeros(p) if beta0 is None else np.array(beta0, dtype=float)
    if beta.shape != (p,):
        raise DimensionMismatch(f"beta0 has shape {beta.shape}, expected ({p},)")
    beta[~free] = 0.0
    m = -ys * (X @ beta)
    ell = float(np.sum(link.rho(m)))
    threshold = tol * n
    checked = not check_separation
    H = None
    for it in range(max_iter + 1):
        g = _gradient(X, ys, m, link)
        g[~free] = 0.0
        gnorm = float(np.max(np.abs(g)))
        if gnorm < threshold:
            # a finite MLE never classifies every row strictly correctly; if
            # this iterate does, it is itself a separating direction
            if check_separation and np.all(m < 0):
                return FitResult(beta, ell, False, True, it, gnorm, "data are separable")
            H = _hessian(X, m, link)
            return FitResult(beta, ell, True, False, it, gnorm, "converged", H)
        if it == max_iter:
            break
        if not checked and np.linalg.norm(beta) > DIVERGENCE_NORM:
            checked = True
            if np.all(m < 0) or check_separable(data):
                return FitResult(beta, ell, False, True, it, gnorm, "data are separable")
        H = _hessian(X, m, link)
        Hf = H[np.ix_(free, free)]
        try:
            cf = linalg.cho_factor(Hf, check_finite=False)
        except linalg.LinAlgError:
            return FitResult(beta, ell, False, False, it, gnorm, "singular Hessian")
        direction = np.zeros(p)
        direction[free] = -linalg.cho_solve(cf, g[free], check_finite=False)
        found = _line_search(X, ys, link, beta, direction, ell, float(g @ direction))
        if found is None:
            # no decrease possible at working precision: stationary up to rounding
            return FitResult(beta, ell, False, False, it, gnorm, "line search failed")
        beta, m, ell = found
    return FitResult(beta, ell, False, False, max_iter, gnorm, "iteration limit reached")


def check_separable(data: Dataset) -> bool:
    """True iff some beta gives y_i x_i' beta > 0 for every row.

    Solves max t s.t. y_i x_i' beta >= t, |beta|_inf <= 1, t <= 1 as a
    linear program; separable when the optimal margin exceeds 1e-7.
    """
    X, ys = data.X, data.y_signed
    n, p = X.shape
    c = np.zeros(p + 1)
    c[-1] = -1.0
    A = np.hstack([-(ys[:, None] * X), np.ones((n, 1))])
    bounds = [(-1.0, 1.0)] * p + [(None, 1.0)]
    res = linprog(c, A_ub=A, b_ub=np.zeros(n), bounds=bounds, method="highs")
    if res.status != 0:
        return False
    return bool(-res.fun > SEPARATION_MARGIN)


def _gram_qr(X):
    Q, R = linalg.qr(X, mode="economic", check_finite=False)
    d = np.abs(np.diag(R))
    if d.size and d.min() <= 1e-10 * max(d.max(), 1.0) * math.sqrt(X.shape[0]):
        raise SingularMatrixError("design Gram matrix X'X is singular")
    return Q, R


def bartlett_alphas(X) -> np.ndarray:
    """alpha_n for every column: (n/2)[tr D_p^2 - tr D_{p-1}^2].

    D_p holds the leverages h = diag(X (X'X)^{-1} X'). Dropping column j
    lowers them by W_ij^2 / M_jj with M = (X'X)^{-1}, W = X M, so no n x n
    hat matrix is formed.
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    Q, R = _gram_qr(X)
    h = np.einsum("ij,ij->i", Q, Q)
    Rinv = linalg.solve_triangular(R, np.eye(R.shape[0]), check_finite=False)
    W = Q @ Rinv.T
    Mjj = np.einsum("ij,ij->i", Rinv, Rinv)
    reduced = h[:, None] - W**2 / Mjj[None, :]
    return 0.5 * n * (np.sum(h**2) - np.sum(reduced**2, axis=0))


def bartlett_alpha(data: Dataset, j: int) -> float:
    return float(bartlett_alphas(data.X)[j])


def empirical_alpha_tilde(data: Dataset, fit_reduced: FitResult, j: int = 0, link=LOGISTIC) -> float:
    """(1/n) tr(G^{-1}) with G = (1/n) X~' diag(rho''(-y_i x~_i' beta~)) X~.

    X~ is the design without column ``j`` and ``fit_reduced.beta_hat`` the
    reduced-model MLE, either of length p - 1 or full length with a zero in
    position ``j``.
    """
    link = get_link(link)
    n, p = data.X.shape
    if p < 2:
        raise ValueError("reduced model is empty; alpha-tilde is undefined for p = 1")
    keep = np.arange(p) != j
    Xt = data.X[:, keep]
    beta = np.asarray(fit_reduced.beta_hat, dtype=float)
    if beta.shape == (p,):
        beta = beta[keep]
    if beta.shape != (p - 1,):
        raise DimensionMismatch("reduced coefficient vector has the wrong length")
    w = link.rho2(-data.y_signed * (Xt @ beta))
    H = Xt.T @ (w[:, None] * Xt)
    try:
        L = linalg.cholesky(H, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("reduced weighted Gram matrix is singular") from exc
    Linv = linalg.solve_triangular(L, np.eye(p - 1), lower=True, check_finite=False)
    # tr(G^{-1}) / n = tr((X~'DX~)^{-1})
    return float(np.sum(Linv**2))


def _reduced_fit(data, link, j, fit, Hinv, tol, max_iter=60):
    """Reduced fit with the full-model inverse Hessian as a fixed metric.

    The inverse of H_{-j,-j} is Hinv_{-j,-j} - Hinv_{-j,j} Hinv_{j,-j} / Hinv_jj,
    applied without forming it. The gradient is exact, so the limit is the
    exact reduced MLE; only the convergence rate depends on the metric.
    """
    X, ys = data.X, data.y_signed
    n = X.shape[0]
    beta = fit.beta_hat.copy()
    beta[j] = 0.0
    m = -ys * (X @ beta)
    ell = float(np.sum(link.rho(m)))
    hj = Hinv[:, j]
    for it in range(max_iter):
        g = _gradient(X, ys, m, link)
        g[j] = 0.0
        gnorm = float(np.max(np.abs(g)))
        if gnorm < tol * n:
            return FitResult(beta, ell, True, False, it, gnorm, "converged")
        v = Hinv @ g
        direction = -(v - hj * (v[j] / hj[j]))
        direction[j] = 0.0
        found = _line_search(X, ys, link, beta, direction, ell, float(g @ direction))
        if found is None:
            break
        beta, m, ell = found
    # fall back to exact Newton from wherever the metric iteration stopped
    return fit_mle(data, link, beta0=beta, drop=j, tol=tol, check_separation=False)


def pvalues_from_lambda(lam, scaling, alpha_n: float, n: int) -> tuple[float, float, float]:
    """(classical, Bartlett, adjusted) chi2_1 tail p-values for one Lambda."""
    stat = 2.0 * lam
    return (
        dist.chisq_sf(1, stat),
        dist.chisq_sf(1, stat / (1.0 + alpha_n / n)),
        dist.chisq_sf(1, stat / scaling.alpha),
    )


def llr_all(data: Dataset, fit: FitResult, coords, scaling, link=LOGISTIC,
            tol: float = GRAD_TOL) -> list[LlrRecord]:
    """LLR statistic and the three p-values for each coordinate in ``coords``.

    Reduced fits are warm-started at beta_hat with the coordinate zeroed.
    A failed reduced fit is recorded on its record; other coordinates go on.
    """
    link = get_link(link)
    if not fit.converged:
        raise ValueError("llr_all needs a converged full-model fit")
    n, p = data.X.shape
    coords = list(range(p)) if coords is None else [int(j) for j in coords]
    H = fit.hessian if fit.hessian is not None else _hessian(
        data.X, -data.y_signed * (data.X @ fit.beta_hat), link)
    try:
        Hinv = linalg.cho_solve(linalg.cho_factor(H, check_finite=False), np.eye(p),
                                check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("full-model Hessian is singular") from exc
    alphas = bartlett_alphas(data.X)
    floor = -1e-8 * n
    out = []
    for j in coords:
        red = _reduced_fit(data, link, j, fit, Hinv, tol)
        lam = red.negloglik - fit.negloglik
        if not red.converged or lam < floor:
            msg = red.message if not red.converged else f"negative LLR {lam:.3g}"
            out.append(LlrRecord(j, float("nan"), float("nan"), float("nan"), float("nan"),
                                 float(alphas[j]), error=f"reduced fit failed: {msg}"))
            continue
        lam = max(lam, 0.0)
        pc, pb, pa = pvalues_from_lambda(lam, scaling, alphas[j], n)
        out.append(LlrRecord(j, lam, pc, pb, pa, float(alphas[j])))
    return out


def reduced_fit(data: Dataset, fit: FitResult, j: int, link=LOGISTIC, tol: float = GRAD_TOL) -> FitResult:
    """Reduced-model MLE without coordinate ``j`` (full-length, zero at ``j``)."""
    link = get_link(link)
    H = fit.hessian if fit.hessian is not None else _hessian(
        data.X, -data.y_signed * (data.X @ fit.beta_hat), link)
    Hinv = linalg.cho_solve(linalg.cho_factor(H), np.eye(data.p))
    return _reduced_fit(data, link, j, fit, Hinv, tol)


def llr_to_csv(records, fh=None) -> str:
    buf = fh or io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "lambda", "p_classical", "p_bartlett", "p_adjusted"])
    for r in records:
        w.writerow([r.j] + [f"{v:.10g}" for v in (r.lam, r.p_classical, r.p_bartlett, r.p_adjusted)])
    return buf.getvalue() if fh is None else ""
