"""Significance tests: Mann-Whitney U, two-proportion z, Welch t, Spearman,
and the one-sided non-inferiority variants built on them.

All tests are one-tailed and return a TestResult carrying the statistic, the
p-value, and the configuration that produced it. Degenerate inputs (no
variance anywhere) yield p = 0.5 with a degenerate flag rather than an error.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata, t as t_dist

EXACT_U_MAX_N = 12
DEFAULT_ALPHA = 0.05


class StatsError(ValueError):
    pass


@dataclass
class TestResult:
    test: str
    statistic: float
    p_value: float
    alternative: str
    alpha: float = DEFAULT_ALPHA
    degenerate: bool = False
    config: dict = field(default_factory=dict)

    @property
    def significant(self) -> bool:
        return self.p_value < self.alpha


def norm_cdf(x):
    """Standard normal CDF (double-precision accurate)."""
    return ndtr(x)


def norm_sf(x):
    return ndtr(-np.asarray(x, dtype=float))


def _check_alternative(alternative: str) -> str:
    if alternative not in ("greater", "less"):
        raise StatsError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    return alternative


def _u_statistic(ranks: np.ndarray, n1: int) -> float:
    return float(ranks[:n1].sum() - n1 * (n1 + 1) / 2)


def _exact_u_pvalue(pooled_ranks: np.ndarray, n1: int, u_obs: float, alternative: str) -> float:
    """Permutation p over all C(n, n1) group assignments of the pooled mid-ranks."""
    n = len(pooled_ranks)
    ge = le = total = 0
    rank_sum_offset = n1 * (n1 + 1) / 2
    for combo in itertools.combinations(range(n), n1):
        u = pooled_ranks[list(combo)].sum() - rank_sum_offset
        total += 1
        if u >= u_obs - 1e-9:
            ge += 1
        if u <= u_obs + 1e-9:
            le += 1
    return (ge if alternative == "greater" else le) / total


def _u_excess_kurtosis(n1: int, n2: int) -> float:
    # exact fourth-cumulant ratio of U under H0, no ties
    n = n1 + n2
    return -(6 / 5) * (n1 * n1 + n2 * n2 + n1 * n2 + n) / (n1 * n2 * (n + 1))


def mann_whitney_u(
    x: Sequence[float],
    y: Sequence[float],
    alternative: str = "greater",
    alpha: float = DEFAULT_ALPHA,
    method: str = "auto",
) -> TestResult:
    """One-tailed Mann-Whitney U test of x against y.

    `alternative="greater"` tests whether x tends to exceed y. For pooled
    n <= 12 the p-value is exact (full enumeration over mid-rank
    assignments, so ties are handled); otherwise a tie-corrected normal
    approximation with continuity correction and an Edgeworth kurtosis term
    is used.
    """
    _check_alternative(alternative)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) == 0 or len(y) == 0:
        raise StatsError("both samples must be nonempty")
    n1, n2 = len(x), len(y)
    n = n1 + n2
    pooled = np.concatenate([x, y])
    ranks = rankdata(pooled)
    u = _u_statistic(ranks, n1)

    if np.ptp(pooled) == 0:
        return TestResult(
            "mann_whitney_u", u, 0.5, alternative, alpha, degenerate=True,
            config={"n1": n1, "n2": n2, "method": "degenerate"},
        )

    if method == "exact" or (method == "auto" and n <= EXACT_U_MAX_N):
        p = _exact_u_pvalue(ranks, n1, u, alternative)
        used = "exact"
    else:
        mu = n1 * n2 / 2
        _, tie_counts = np.unique(pooled, return_counts=True)
        tie_term = float(np.sum(tie_counts**3 - tie_counts))
        var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
        if var <= 0:
            return TestResult(
                "mann_whitney_u", u, 0.5, alternative, alpha, degenerate=True,
                config={"n1": n1, "n2": n2, "method": "degenerate"},
            )
        sd = math.sqrt(var)
        cc = 0.5 if alternative == "greater" else -0.5
        t = (u - cc - mu) / sd
        p = float(norm_sf(t) if alternative == "greater" else norm_cdf(t))
        if tie_term == 0:
            g2 = _u_excess_kurtosis(n1, n2)
            edge = math.exp(-t * t / 2) / math.sqrt(2 * math.pi) * (g2 / 24) * (t**3 - 3 * t)
            p = min(1.0, max(0.0, p + (edge if alternative == "greater" else -edge)))
        used = "normal"
    return TestResult(
        "mann_whitney_u", u, p, alternative, alpha,
        config={"n1": n1, "n2": n2, "method": used},
    )


def proportion_ztest(
    s1: int,
    n1: int,
    s2: int,
    n2: int,
    alternative: str = "greater",
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """Pooled two-sample proportion z test (one-tailed)."""
    _check_alternative(alternative)
    if not (0 <= s1 <= n1 and 0 <= s2 <= n2) or n1 == 0 or n2 == 0:
        raise StatsError(f"invalid counts: {s1}/{n1}, {s2}/{n2}")
    pooled = (s1 + s2) / (n1 + n2)
    if pooled in (0.0, 1.0):
        return TestResult(
            "proportion_ztest", 0.0, 0.5, alternative, alpha, degenerate=True,
            config={"n1": n1, "n2": n2},
        )
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    z = (s1 / n1 - s2 / n2) / se
    p = float(norm_sf(z) if alternative == "greater" else norm_cdf(z))
    return TestResult(
        "proportion_ztest", z, p, alternative, alpha, config={"n1": n1, "n2": n2}
    )


def welch_t(
    x: Sequence[float],
    y: Sequence[float],
    alternative: str = "greater",
    alpha: float = DEFAULT_ALPHA,
) -> TestResult:
    """Welch's unequal-variance t test with Satterthwaite df (one-tailed)."""
    _check_alternative(alternative)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise StatsError("each sample needs at least 2 values")
    n1, n2 = len(x), len(y)
    v1 = float(np.var(x, ddof=1))
    v2 = float(np.var(y, ddof=1))
    if v1 == 0 and v2 == 0:
        return TestResult(
            "welch_t", 0.0, 0.5, alternative, alpha, degenerate=True,
            config={"n1": n1, "n2": n2, "df": float(n1 + n2 - 2)},
        )
    se = math.sqrt(v1 / n1 + v2 / n2)
    df = (v1 / n1 + v2 / n2) ** 2 / (
        (v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1)
    )
    t = (float(np.mean(x)) - float(np.mean(y))) / se
    p = float(t_dist.sf(t, df) if alternative == "greater" else t_dist.cdf(t, df))
    return TestResult(
        "welch_t", t, p, alternative, alpha, config={"n1": n1, "n2": n2, "df": df}
    )


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman rank correlation: Pearson on mid-ranks."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) != len(y) or len(x) < 3:
        raise StatsError("need equal-length samples with at least 3 values")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        raise StatsError("spearman undefined for constant input")
    rx = rankdata(x)
    ry = rankdata(y)
    rx -= rx.mean()
    ry -= ry.mean()
    return float(rx @ ry / math.sqrt((rx @ rx) * (ry @ ry)))


def noninferiority_test(
    x: Sequence[float],
    y: Sequence[float],
    epsilon: float,
    alpha: float = DEFAULT_ALPHA,
    kind: str = "auto",
) -> TestResult:
    """One-sided non-inferiority test with H0: mean(y) - mean(x) > epsilon.

    Rejection means y is not meaningfully above x. Binary samples use a
    z statistic with unpooled binomial standard errors; continuous samples
    use a Welch-style t statistic.
    """
    if epsilon <= 0:
        raise StatsError("epsilon must be positive")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise StatsError("each sample needs at least 2 values")
    if kind == "auto":
        kind = "proportions" if set(np.unique(np.concatenate([x, y]))) <= {0.0, 1.0} else "means"
    diff = float(np.mean(y) - np.mean(x))
    n1, n2 = len(x), len(y)
    if kind == "proportions":
        p1, p2 = float(np.mean(x)), float(np.mean(y))
        var = p1 * (1 - p1) / n1 + p2 * (1 - p2) / n2
        if var == 0:
            return TestResult(
                "noninferiority_z", 0.0, 0.5, "less", alpha, degenerate=True,
                config={"epsilon": epsilon, "kind": kind},
            )
        z = (diff - epsilon) / math.sqrt(var)
        p = float(norm_cdf(z))
        return TestResult(
            "noninferiority_z", z, p, "less", alpha, config={"epsilon": epsilon, "kind": kind}
        )
    v1 = float(np.var(x, ddof=1))
    v2 = float(np.var(y, ddof=1))
    if v1 == 0 and v2 == 0:
        stat = -math.inf if diff <= epsilon else math.inf
        return TestResult(
            "noninferiority_t", stat, 0.0 if diff <= epsilon else 1.0, "less", alpha,
            degenerate=True, config={"epsilon": epsilon, "kind": kind},
        )
    se = math.sqrt(v1 / n1 + v2 / n2)
    df = (v1 / n1 + v2 / n2) ** 2 / (
        (v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1)
    )
    t = (diff - epsilon) / se
    p = float(t_dist.cdf(t, df))
    return TestResult(
        "noninferiority_t", t, p, "less", alpha,
        config={"epsilon": epsilon, "kind": kind, "df": df},
    )


def noninferiority_proportions(
    s1: int, n1: int, s2: int, n2: int, epsilon: float, alpha: float = DEFAULT_ALPHA
) -> TestResult:
    """Count-based convenience wrapper for the proportions non-inferiority test."""
    x = np.concatenate([np.ones(s1), np.zeros(n1 - s1)])
    y = np.concatenate([np.ones(s2), np.zeros(n2 - s2)])
    return noninferiority_test(x, y, epsilon, alpha, kind="proportions")
