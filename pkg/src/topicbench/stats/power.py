"""Simulation-based power analysis for the intrusion and ratings tasks.

Topics carry latent quality labels; annotators emit noisy responses
conditioned on the label. Model A draws labels at random; model B has `r`
fewer high-quality topics. Power is the fraction of simulations in which the
one-tailed test (proportion z for intrusion, U test for ratings) detects A
over B. The non-inferiority bound search reuses the same generative model
under a no-difference null (shared labels, independent annotator noise).

Simulations are vectorized over iterations; the per-iteration statistics are
algebraically identical to the scalar tests in `tests.py` (category counts
determine mid-ranks exactly for the 3-point rating scale).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.stats import t as t_dist

from .tests import DEFAULT_ALPHA, StatsError, norm_sf, norm_cdf

DEFAULT_RATING_EMISSIONS = (
    (3 / 4, 1 / 4, 0.0),
    (1 / 4, 2 / 4, 1 / 4),
    (0.0, 1 / 4, 3 / 4),
)
DEFAULT_M = {"intrusion": 25, "rating": 15}
EPSILON_GRID_STEP = 0.005


@dataclass
class PowerConfig:
    task: str  # "intrusion" | "rating"
    K: int = 50
    r: int = 4
    M: int = 25
    alpha: float = DEFAULT_ALPHA
    p0: float = 1 / 6
    p1: float = 0.85
    rating_emissions: tuple = DEFAULT_RATING_EMISSIONS
    n_sims: int = 10_000

    def __post_init__(self):
        if self.task not in ("intrusion", "rating"):
            raise StatsError(f"unknown task {self.task!r}")
        if not (0 <= self.p0 <= 1 and 0 <= self.p1 <= 1):
            raise StatsError("p0 and p1 must be probabilities")
        if self.r < 0 or self.r > self.K:
            raise StatsError("r must be in [0, K]")
        for row in self.rating_emissions:
            if abs(sum(row) - 1.0) > 1e-9 or any(p < 0 for p in row):
                raise StatsError(f"emission row {row} is not a distribution")


@dataclass
class PowerEstimate:
    power: float
    mc_se: float
    n_sims: int
    config: dict = field(default_factory=dict)


def _draw_coherent_counts(rng, K: int, r: int, n_sims: int) -> np.ndarray:
    """Binomial(K, 1/2) coherent-topic counts, redrawn when below r."""
    c = rng.binomial(K, 0.5, size=n_sims)
    while True:
        bad = c < r
        if not bad.any():
            return c
        c[bad] = rng.binomial(K, 0.5, size=int(bad.sum()))


def _draw_rating_labels(rng, K: int, r: int, n_sims: int) -> np.ndarray:
    """Multinomial(K, uniform) label counts (n_sims, 3), redrawn when the
    top-label count is below r."""
    counts = rng.multinomial(K, [1 / 3, 1 / 3, 1 / 3], size=n_sims)
    while True:
        bad = counts[:, 2] < r
        if not bad.any():
            return counts
        counts[bad] = rng.multinomial(K, [1 / 3, 1 / 3, 1 / 3], size=int(bad.sum()))


def _rating_category_counts(rng, label_counts: np.ndarray, M: int, emissions) -> np.ndarray:
    """Aggregate annotator rating counts (n_sims, 3) given per-label topic counts."""
    out = np.zeros_like(label_counts, dtype=np.int64)
    for label in range(3):
        out += rng.multinomial(M * label_counts[:, label], emissions[label])
    return out


def _proportion_z(s1, n1, s2, n2):
    pooled = (s1 + s2) / (n1 + n2)
    se = np.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, (s1 / n1 - s2 / n2) / se, 0.0)
    return z


def _rating_u_z(cA: np.ndarray, cB: np.ndarray):
    """Tie-corrected, continuity-corrected U-test z from 3-category counts."""
    n1 = cA.sum(axis=1).astype(float)
    n2 = cB.sum(axis=1).astype(float)
    n = n1 + n2
    u = (
        cA[:, 1] * cB[:, 0]
        + cA[:, 2] * (cB[:, 0] + cB[:, 1])
        + 0.5 * (cA[:, 0] * cB[:, 0] + cA[:, 1] * cB[:, 1] + cA[:, 2] * cB[:, 2])
    )
    ties = cA + cB
    tie_term = np.sum(ties.astype(float) ** 3 - ties, axis=1)
    var = n1 * n2 / 12 * ((n + 1) - tie_term / (n * (n - 1)))
    mu = n1 * n2 / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(var > 0, (u - 0.5 - mu) / np.sqrt(var), 0.0)
    return z


def _rating_moments(c: np.ndarray):
    n = c.sum(axis=1).astype(float)
    mean = (c[:, 0] + 2 * c[:, 1] + 3 * c[:, 2]) / n
    ex2 = (c[:, 0] + 4 * c[:, 1] + 9 * c[:, 2]) / n
    var = (ex2 - mean**2) * n / (n - 1)
    return mean, var, n


def power_simulation(cfg: PowerConfig, seed: int = 0) -> PowerEstimate:
    """Monte Carlo power of detecting model A over model B."""
    rng = np.random.default_rng(seed)
    S, K, M, r = cfg.n_sims, cfg.K, cfg.M, cfg.r
    if cfg.task == "intrusion":
        cA = _draw_coherent_counts(rng, K, r, S)
        cB = cA - r
        n = K * M
        sA = rng.binomial(M * cA, cfg.p1) + rng.binomial(M * (K - cA), cfg.p0)
        sB = rng.binomial(M * cB, cfg.p1) + rng.binomial(M * (K - cB), cfg.p0)
        z = _proportion_z(sA.astype(float), n, sB.astype(float), n)
        pvals = norm_sf(z)
    else:
        labels_A = _draw_rating_labels(rng, K, r, S)
        labels_B = labels_A + np.array([r, 0, -r])
        cA = _rating_category_counts(rng, labels_A, M, cfg.rating_emissions)
        cB = _rating_category_counts(rng, labels_B, M, cfg.rating_emissions)
        z = _rating_u_z(cA, cB)
        pvals = norm_sf(z)
    power = float(np.mean(pvals < cfg.alpha))
    mc_se = math.sqrt(power * (1 - power) / S)
    return PowerEstimate(power, mc_se, S, config={"task": cfg.task, "M": M, "seed": seed})


def min_annotators(
    cfg: PowerConfig,
    target_power: float = 0.9,
    seed: int = 0,
    m_step: int = 5,
    m_max: int = 200,
) -> tuple[int, list[PowerEstimate]]:
    """Smallest annotator count (scanned in steps of `m_step`) reaching the target.

    The default step of 5 mirrors the granularity at which annotator pools
    are actually recruited; pass m_step=1 for an exact scan.
    """
    if not 0 < target_power < 1:
        raise StatsError("target_power must be in (0, 1)")
    curve = []
    from dataclasses import replace

    for M in range(m_step, m_max + 1, m_step):
        est = power_simulation(replace(cfg, M=M), seed=seed)
        est.config["M"] = M
        curve.append(est)
        if est.power >= target_power:
            return M, curve
    raise StatsError(
        f"no M <= {m_max} reaches power {target_power}; curve: "
        + ", ".join(f"M={e.config['M']}: {e.power:.3f}" for e in curve)
    )


def _null_difference_samples(cfg: PowerConfig, seed: int):
    """Simulate score differences under the no-difference null (shared labels).

    Returns (diff, se, df) arrays where diff = mean(B) - mean(A) and se is
    the test's standard-error estimate (unpooled binomial for intrusion,
    Welch for ratings).
    """
    rng = np.random.default_rng(seed)
    S, K, M = cfg.n_sims, cfg.K, cfg.M
    if cfg.task == "intrusion":
        c = _draw_coherent_counts(rng, K, 0, S)
        n = float(K * M)
        sA = rng.binomial(M * c, cfg.p1) + rng.binomial(M * (K - c), cfg.p0)
        sB = rng.binomial(M * c, cfg.p1) + rng.binomial(M * (K - c), cfg.p0)
        pA, pB = sA / n, sB / n
        diff = pB - pA
        se = np.sqrt(pA * (1 - pA) / n + pB * (1 - pB) / n)
        return diff, se, None
    labels = _draw_rating_labels(rng, K, 0, S)
    cA = _rating_category_counts(rng, labels, M, cfg.rating_emissions)
    cB = _rating_category_counts(rng, labels, M, cfg.rating_emissions)
    mA, vA, n1 = _rating_moments(cA)
    mB, vB, n2 = _rating_moments(cB)
    diff = mB - mA
    se = np.sqrt(vA / n1 + vB / n2)
    df = (vA / n1 + vB / n2) ** 2 / ((vA / n1) ** 2 / (n1 - 1) + (vB / n2) ** 2 / (n2 - 1))
    return diff, se, df


def equivalence_bound_search(
    cfg: PowerConfig,
    beta_target: float = 0.9,
    seed: int = 0,
    grid_step: float = EPSILON_GRID_STEP,
    eps_max: float = 1.0,
) -> tuple[float, dict]:
    """Smallest non-inferiority bound epsilon whose test attains the target power
    under the no-difference null."""
    diff, se, df = _null_difference_samples(cfg, seed)
    grid = np.arange(grid_step, eps_max + grid_step / 2, grid_step)
    if len(grid) == 0:
        raise StatsError("empty epsilon grid")
    for eps in grid:
        with np.errstate(divide="ignore", invalid="ignore"):
            stat = np.where(se > 0, (diff - eps) / se, -np.inf)
        if df is None:
            pvals = norm_cdf(stat)
        else:
            pvals = t_dist.cdf(stat, df)
        power = float(np.mean(pvals < cfg.alpha))
        if power >= beta_target:
            return float(eps), {"power": power, "task": cfg.task, "M": cfg.M, "seed": seed}
    raise StatsError(f"no epsilon <= {eps_max} reaches power {beta_target}")


def fit_gamma_moments(variances: Sequence[float]) -> tuple[float, float]:
    """Method-of-moments Gamma(shape, scale) fit to empirical score variances."""
    v = np.asarray(variances, dtype=float)
    if len(v) < 2 or np.any(v <= 0):
        raise StatsError("need >= 2 positive variances")
    m = float(np.mean(v))
    s2 = float(np.var(v, ddof=1))
    if s2 == 0:
        raise StatsError("variances are constant; Gamma fit undefined")
    return m * m / s2, s2 / m


def auto_score_equivalence_bound(
    variances: Sequence[float],
    K: int = 50,
    beta_target: float = 0.9,
    alpha: float = DEFAULT_ALPHA,
    n_sims: int = 10_000,
    seed: int = 0,
    grid_step: float = EPSILON_GRID_STEP,
    eps_max: float = 1.0,
) -> tuple[float, dict]:
    """Non-inferiority bound for automated scores.

    Per-topic scores are Normal(0, sigma^2) with sigma^2 ~ Gamma fit by
    moments to the supplied empirical variances; the bound is searched under
    the same no-difference criterion as the human tasks.
    """
    shape, scale = fit_gamma_moments(variances)
    rng = np.random.default_rng(seed)
    sigma2 = rng.gamma(shape, scale, size=(n_sims, 2, K))
    x = rng.normal(0.0, np.sqrt(sigma2))
    mA, mB = x[:, 0].mean(axis=1), x[:, 1].mean(axis=1)
    vA, vB = x[:, 0].var(axis=1, ddof=1), x[:, 1].var(axis=1, ddof=1)
    diff = mB - mA
    se = np.sqrt(vA / K + vB / K)
    df = (vA / K + vB / K) ** 2 / ((vA / K) ** 2 / (K - 1) + (vB / K) ** 2 / (K - 1))
    grid = np.arange(grid_step, eps_max + grid_step / 2, grid_step)
    if len(grid) == 0:
        raise StatsError("empty epsilon grid")
    for eps in grid:
        pvals = t_dist.cdf((diff - eps) / se, df)
        power = float(np.mean(pvals < alpha))
        if power >= beta_target:
            return float(eps), {"power": power, "gamma_shape": shape, "gamma_scale": scale}
    raise StatsError(f"no epsilon <= {eps_max} reaches power {beta_target}")
