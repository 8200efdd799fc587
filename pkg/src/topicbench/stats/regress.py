"""Logistic and ordered-probit regressions of human annotations on metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import expit, ndtr
from scipy.stats import norm

from .tests import StatsError

MAX_ITER = 200
TOL = 1e-10
Z95 = norm.ppf(0.975)


class ConvergenceError(StatsError):
    pass


class SeparationError(StatsError):
    pass


@dataclass
class RegressionFit:
    coef: float
    intercept: float
    coef_se: float
    coef_ci: tuple[float, float]
    n_iter: int


@dataclass
class OrderedProbitFit:
    coef: float
    cutpoints: tuple[float, float]
    coef_se: float
    coef_ci: tuple[float, float]
    n_iter: int


def logistic_regression(y: Sequence[int], x: Sequence[float]) -> RegressionFit:
    """Single-covariate logistic regression by IRLS with Wald intervals."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if len(y) != len(x):
        raise StatsError("y and x must have equal length")
    if set(np.unique(y)) - {0.0, 1.0}:
        raise StatsError("y must be binary 0/1")
    if y.min() == y.max():
        raise StatsError("both outcome classes must be present")

    X = np.column_stack([np.ones_like(x), x])
    beta = np.zeros(2)
    for it in range(1, MAX_ITER + 1):
        eta = X @ beta
        mu = expit(eta)
        w = mu * (1 - mu)
        if np.all(w < 1e-10):
            raise SeparationError(
                "weights collapsed to zero: data are (quasi-)separated"
            )
        grad = X.T @ (y - mu)
        hess = X.T @ (X * w[:, None])
        # lstsq handles rank-deficient designs (e.g. a constant covariate),
        # where the slope direction carries no information and stays at zero
        step = np.linalg.lstsq(hess, grad, rcond=None)[0]
        beta = beta + step
        if np.abs(step).max() < TOL:
            break
    else:
        raise ConvergenceError(f"IRLS did not converge in {MAX_ITER} iterations")
    if np.abs(beta).max() > 30:
        frac = float(np.mean((x > np.median(x)) == (y > 0.5)))
        raise SeparationError(
            f"fitted coefficients diverged (|beta| > 30); covariate predicts the "
            f"outcome for {frac:.0%} of observations -- complete separation"
        )

    mu = expit(X @ beta)
    w = mu * (1 - mu)
    cov = np.linalg.pinv(X.T @ (X * w[:, None]))
    se = math.sqrt(max(cov[1, 1], 0.0))
    return RegressionFit(
        coef=float(beta[1]),
        intercept=float(beta[0]),
        coef_se=se,
        coef_ci=(float(beta[1] - Z95 * se), float(beta[1] + Z95 * se)),
        n_iter=it,
    )


def _ordered_probit_loglik_grad(params, y, x, n_cats):
    """Log-likelihood and gradient; cutpoints parameterized as (c1, log gap)."""
    b, c1, loggap = params
    c2 = c1 + math.exp(loggap)
    cuts = np.array([-np.inf, c1, c2, np.inf])
    eta = b * x
    lo = cuts[y - 1] - eta
    hi = cuts[y] - eta
    p = ndtr(hi) - ndtr(lo)
    p = np.clip(p, 1e-300, None)
    ll = float(np.sum(np.log(p)))

    phi_hi = norm.pdf(hi)
    phi_lo = norm.pdf(lo)
    # d/d eta = (phi_lo - phi_hi) / p
    d_eta = (phi_lo - phi_hi) / p
    g_b = float(np.sum(d_eta * x))
    # cut derivatives: c1 enters hi when y==1 (+phi), lo when y==2 (-phi); c2 likewise
    g_c1 = 0.0
    g_c2 = 0.0
    for cut_idx, g_name in ((1, "c1"), (2, "c2")):
        d = np.zeros_like(p)
        d[y == cut_idx] += phi_hi[y == cut_idx]
        d[y == cut_idx + 1] -= phi_lo[y == cut_idx + 1]
        val = float(np.sum(d / p))
        if g_name == "c1":
            g_c1 = val
        else:
            g_c2 = val
    grad = np.array([g_b, g_c1 + g_c2, g_c2 * math.exp(loggap)])
    return ll, grad


def ordered_probit(y: Sequence[int], x: Sequence[float]) -> OrderedProbitFit:
    """Ordered-probit regression of a 1-3 ordinal outcome on one covariate.

    Newton iterations on the log-likelihood (Hessian from finite differences
    of the analytic gradient); cutpoints are kept strictly increasing by
    construction.
    """
    y = np.asarray(y, dtype=int)
    x = np.asarray(x, dtype=float)
    if len(y) != len(x):
        raise StatsError("y and x must have equal length")
    if set(np.unique(y)) - {1, 2, 3}:
        raise StatsError("y must take values in {1, 2, 3}")
    if len(np.unique(y)) < 2:
        raise StatsError("need at least 2 observed categories")

    # start at the intercept-only closed form
    p1 = max(float(np.mean(y == 1)), 1e-3)
    p12 = min(max(float(np.mean(y <= 2)), p1 + 1e-3), 1 - 1e-3)
    c1 = norm.ppf(p1)
    c2 = norm.ppf(p12)
    params = np.array([0.0, c1, math.log(max(c2 - c1, 1e-3))])

    def hessian(p):
        eps = 1e-6
        H = np.zeros((3, 3))
        for i in range(3):
            dp = np.zeros(3)
            dp[i] = eps
            _, gp = _ordered_probit_loglik_grad(p + dp, y, x, 3)
            _, gm = _ordered_probit_loglik_grad(p - dp, y, x, 3)
            H[:, i] = (gp - gm) / (2 * eps)
        return (H + H.T) / 2

    ll_old = -np.inf
    for it in range(1, MAX_ITER + 1):
        ll, grad = _ordered_probit_loglik_grad(params, y, x, 3)
        if np.abs(grad).max() < 1e-8 and ll - ll_old < 1e-12:
            break
        ll_old = ll
        H = hessian(params)
        # lstsq handles the rank-deficient Hessian of a constant covariate,
        # where the slope stays at zero and only the cutpoints update
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
        # Newton with backtracking on the log-likelihood
        scale = 1.0
        for _ in range(40):
            trial = params - scale * step
            ll_trial, _ = _ordered_probit_loglik_grad(trial, y, x, 3)
            if ll_trial >= ll - 1e-12:
                break
            scale /= 2
        params = params - scale * step
    else:
        raise ConvergenceError(
            f"ordered probit did not converge in {MAX_ITER} iterations; "
            f"last params={params.tolist()}"
        )

    b, c1, loggap = params
    c2 = c1 + math.exp(loggap)
    # delta-method covariance in (b, c1, c2) space
    H = hessian(params)
    cov_internal = np.linalg.pinv(-H)
    se = math.sqrt(max(cov_internal[0, 0], 0.0))
    return OrderedProbitFit(
        coef=float(b),
        cutpoints=(float(c1), float(c2)),
        coef_se=se,
        coef_ci=(float(b - Z95 * se), float(b + Z95 * se)),
        n_iter=it,
    )
