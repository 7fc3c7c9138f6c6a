"""Martingale estimating equations for clustered time series."""

import json

from . import _core
from ._core import (
    ContractError,
    DataError,
    NumericalError,
    fixed_corr,
    link_eval,
    normal_quantile,
    simulate_ar2,
)

__all__ = [
    "ContractError",
    "DataError",
    "NumericalError",
    "estimating_function",
    "fit",
    "fixed_corr",
    "link_eval",
    "monte_carlo",
    "normal_quantile",
    "read_csv",
    "run",
    "simulate_ar2",
]

__version__ = "0.1.0"


def fit(Y, X, *, link="identity", corr="independence", alpha=0.0, fixed=None,
        method="newton", level=0.95, tol=1e-8, max_iter=50, diagnostics=False):
    """Fit the model. Y is (n, m); X is a sequence of n (m, p) matrices.

    Returns the report as a dict (beta_hat, se, ci, Psi_tilde, ...).
    """
    text = _core.fit_json(Y, list(X), link=link, corr=corr, alpha=alpha, fixed=fixed,
                          method=method, level=level, tol=tol, max_iter=max_iter,
                          diagnostics=diagnostics)
    return json.loads(text)


def estimating_function(Y, X, beta, *, link="identity", corr="independence", alpha=0.0):
    return _core.estimating_function(Y, list(X), beta, link=link, corr=corr, alpha=alpha)


def monte_carlo(*, n=500, m=5, beta0=(0.5, 0.2), truths=("R1", "R2", "R3"), alpha=0.7,
                s=500, level=0.95, seed=1):
    text = _core.monte_carlo_json(n=n, m=m, beta0=list(beta0), truths=list(truths),
                                  alpha=alpha, s=s, level=level, seed=seed)
    return json.loads(text)


def read_csv(path, *, lags=2, intercept=True, long_layout=False):
    """Returns ((Y, X), units, X_next)."""
    return _core.read_csv(path, lags=lags, intercept=intercept, long_layout=long_layout)


def run(*args):
    """Runs a CLI command in-process. Returns (exit_code, stdout, stderr)."""
    return _core.run(list(args))
