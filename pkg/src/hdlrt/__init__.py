"""Likelihood-ratio tests for high-dimensional logistic and probit regression.

When p/n -> kappa in (0, 1/2), twice the LLR for a null coefficient is
approximately alpha(kappa) chi2_1 rather than chi2_1. This package solves
for alpha(kappa), fits the MLE, and produces classical, Bartlett-corrected
and rescaled p-values, together with Monte Carlo tooling to check them.
"""
import importlib

_EXPORTS = {
    "dist": ["ChiSquare", "chisq_sf", "normal_cdf", "normal_quantile"],
    "errors": ["BracketFailure", "DimensionMismatch", "EmptyInput", "HdlrtError",
               "KappaOutOfRange", "NonConvergence", "SingularMatrixError"],
    "glm": ["Dataset", "FitResult", "LlrRecord", "check_separable", "fit_mle", "llr_all"],
    "links": ["LOGISTIC", "PROBIT", "EffectiveLink", "get_link"],
    "prox": ["prox", "psi"],
    "quad": ["GaussianQuadrature"],
    "scaling": ["ScalingSolution", "alpha_curve", "solve_system"],
    "simulate": ["SimConfig", "SimulationReport", "run_simulation"],
}
_WHERE = {name: mod for mod, names in _EXPORTS.items() for name in names}
__all__ = sorted(_WHERE)
__version__ = "0.1.0"


def __getattr__(name):
    # imported lazily so the CLI only pays for the scipy modules it uses
    if name in _WHERE:
        return getattr(importlib.import_module(f".{_WHERE[name]}", __name__), name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
