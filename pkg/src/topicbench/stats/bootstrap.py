"""Bootstrap machinery: Spearman confidence intervals and the false
discovery / false omission rates of metric-based model comparisons."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .tests import (
    DEFAULT_ALPHA,
    StatsError,
    noninferiority_test,
    proportion_ztest,
    spearman,
    welch_t,
)


def bootstrap_spearman_ci(
    per_topic_annotations: Sequence[Sequence[float]],
    metric_scores: Sequence[float],
    n_boot: int = 1000,
    seed: int = 0,
    ci: float = 0.95,
) -> tuple[float, float, float]:
    """Spearman correlation of mean human scores vs metric scores with a
    percentile bootstrap CI from resampling annotators within each topic."""
    if n_boot < 100:
        raise StatsError("n_boot must be >= 100")
    annotations = [np.asarray(a, dtype=float) for a in per_topic_annotations]
    if any(len(a) == 0 for a in annotations):
        raise StatsError("every topic needs at least one annotation")
    metric_scores = np.asarray(metric_scores, dtype=float)
    if len(annotations) != len(metric_scores):
        raise StatsError("per-topic annotations and metric scores must align")
    rng = np.random.default_rng(seed)
    point = spearman([a.mean() for a in annotations], metric_scores)
    reps = np.empty(n_boot)
    for b in range(n_boot):
        means = [a[rng.integers(0, len(a), size=len(a))].mean() for a in annotations]
        try:
            reps[b] = spearman(means, metric_scores)
        except StatsError:  # constant resample
            reps[b] = np.nan
    reps = reps[~np.isnan(reps)]
    if len(reps) == 0:
        return point, point, point
    tail = (1 - ci) / 2
    lo, hi = np.quantile(reps, [tail, 1 - tail])
    return float(point), float(lo), float(hi)


@dataclass
class TopicPoolEntry:
    auto_score: float
    human: Sequence[float]  # per-annotation values: 0/1 (intrusion) or 1-3 (rating)


@dataclass
class FdrConfig:
    task: str  # "intrusion" | "rating"
    pool_size: int = 150
    K: int = 50
    n_iter: int = 1000
    eps_human: float = 0.05
    eps_auto: float = 0.05
    alpha: float = DEFAULT_ALPHA
    seed: int = 0
    subtract_alpha: bool = False  # alternative type-I "correction" reading

    def __post_init__(self):
        if 2 * self.K > self.pool_size:
            raise StatsError("pool must hold at least 2K topics")
        if self.task not in ("intrusion", "rating"):
            raise StatsError(f"unknown task {self.task!r}")


@dataclass
class FdrResult:
    fdr: Optional[float]
    for_: Optional[float]
    n_discoveries: int
    n_false_discoveries: int
    n_omissions: int
    n_false_omissions: int
    config: FdrConfig


def _human_test(task: str, x: np.ndarray, y: np.ndarray, alternative: str, alpha: float):
    if task == "intrusion":
        return proportion_ztest(
            int(x.sum()), len(x), int(y.sum()), len(y), alternative, alpha
        )
    if alternative == "greater":
        return welch_t(x, y, "greater", alpha)
    return welch_t(x, y, "less", alpha)


def fdr_for_bootstrap(topic_pool: Sequence[TopicPoolEntry], cfg: FdrConfig) -> FdrResult:
    """Bootstrapped false discovery / omission rates of automated comparisons.

    Each iteration draws two disjoint K-topic sets from the pool, resamples
    each topic's human annotations with replacement, then tests the automated
    scores (Welch t, one-tailed both directions) against the human scores.
    A discovery (auto significance) is false when the human non-inferiority
    test at eps_human passes in the same direction, i.e. the "winning" set's
    human scores are not meaningfully higher. An omission (no auto
    significance) is false when the human scores differ significantly.

    The pool is canonically sorted first, so results are deterministic under
    the seed and invariant to input ordering.
    """
    if len(topic_pool) != cfg.pool_size:
        raise StatsError(f"pool size {len(topic_pool)} != configured {cfg.pool_size}")
    entries = sorted(
        topic_pool, key=lambda e: (e.auto_score, len(e.human), tuple(e.human))
    )
    auto = np.array([e.auto_score for e in entries])
    human = [np.asarray(e.human, dtype=float) for e in entries]
    rng = np.random.default_rng(cfg.seed)

    discoveries = false_discoveries = omissions = false_omissions = 0
    for _ in range(cfg.n_iter):
        idx = rng.choice(cfg.pool_size, size=2 * cfg.K, replace=False)
        set1, set2 = idx[: cfg.K], idx[cfg.K :]
        auto1, auto2 = auto[set1], auto[set2]
        h1 = np.concatenate([human[i][rng.integers(0, len(human[i]), len(human[i]))] for i in set1])
        h2 = np.concatenate([human[i][rng.integers(0, len(human[i]), len(human[i]))] for i in set2])

        t_gt = welch_t(auto1, auto2, "greater", cfg.alpha)
        t_lt = welch_t(auto1, auto2, "less", cfg.alpha)
        if t_gt.significant or t_lt.significant:
            discoveries += 1
            # winner/loser by the auto test's direction
            win, lose = (h1, h2) if t_gt.significant else (h2, h1)
            ni = noninferiority_test(
                lose, win, cfg.eps_human, cfg.alpha,
                kind="proportions" if cfg.task == "intrusion" else "means",
            )
            if ni.significant:  # human winner not meaningfully higher
                false_discoveries += 1
        else:
            omissions += 1
            h_gt = _human_test(cfg.task, h1, h2, "greater", cfg.alpha)
            h_lt = _human_test(cfg.task, h1, h2, "less", cfg.alpha)
            if h_gt.significant or h_lt.significant:
                false_omissions += 1

    fdr = false_discoveries / discoveries if discoveries else None
    for_ = false_omissions / omissions if omissions else None
    if cfg.subtract_alpha:
        fdr = max(0.0, fdr - cfg.alpha) if fdr is not None else None
        for_ = max(0.0, for_ - cfg.alpha) if for_ is not None else None
    return FdrResult(
        fdr=fdr,
        for_=for_,
        n_discoveries=discoveries,
        n_false_discoveries=false_discoveries,
        n_omissions=omissions,
        n_false_omissions=false_omissions,
        config=cfg,
    )
