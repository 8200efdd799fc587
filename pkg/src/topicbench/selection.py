"""Fixed-budget random hyperparameter search, degeneracy filters, and
NPMI-based model selection."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cooc import CoocCounts, Topic, npmi_topic

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 164
DEFAULT_TU_THRESHOLD = 0.7

# Classical-baseline hyperparameter grid: topic density, word density,
# re-estimation interval, training sweeps.
GLDA_SPACE: dict[str, list] = {
    "alpha": [0.01, 0.05, 0.1, 0.25, 1.0, 5.0],
    "beta": [0.01, 0.05, 0.1],
    "optimize_interval": [0, 10, 100, 500],
    "n_iter": [1000, 2000],
}


class SelectionError(ValueError):
    pass


@dataclass
class CandidateModel:
    source_tag: str
    topics: list[Topic]
    config: dict = field(default_factory=dict)
    mean_npmi: Optional[float] = None


@dataclass
class FilterReport:
    source_tag: str
    passed: bool
    top5_overlap_pairs: list[tuple[int, int, list[str]]]
    topic_uniqueness: float
    tu_threshold: float
    tu_direction: str

    def to_json(self) -> str:
        return json.dumps(
            {
                "source_tag": self.source_tag,
                "passed": self.passed,
                "top5_overlap_pairs": [
                    {"topics": [i, j], "words": words}
                    for i, j, words in self.top5_overlap_pairs
                ],
                "topic_uniqueness": self.topic_uniqueness,
                "tu_threshold": self.tu_threshold,
                "tu_direction": self.tu_direction,
            }
        )


def random_search(space: dict[str, Sequence], budget: int, seed: int = 0) -> list[dict]:
    """Uniform independent draws from a finite grid; duplicates allowed."""
    if budget < 1:
        raise SelectionError("budget must be >= 1")
    if not space or any(len(v) == 0 for v in space.values()):
        raise SelectionError("hyperparameter space must have nonempty value sets")
    rng = np.random.default_rng(seed)
    configs = []
    for _ in range(budget):
        configs.append(
            {name: values[rng.integers(0, len(values))] for name, values in space.items()}
        )
    n_unique = len({tuple(sorted(c.items())) for c in configs})
    if n_unique < len(configs):
        logger.info("random search drew %d duplicate configs", len(configs) - n_unique)
    return configs


def topic_uniqueness(topics: Sequence[Topic], n: int = 10) -> float:
    """TU = mean over topics of mean over top-n words of 1 / multiplicity."""
    for t in topics:
        if len(t.words) < n:
            raise SelectionError(f"topic {t.source_tag!r} has fewer than {n} words")
    count: dict[str, int] = {}
    for t in topics:
        for w in t.top(n):
            count[w] = count.get(w, 0) + 1
    per_topic = [sum(1.0 / count[w] for w in t.top(n)) / n for t in topics]
    return float(np.mean(per_topic))


def redundancy_filter(
    candidate: CandidateModel,
    tu_threshold: float = DEFAULT_TU_THRESHOLD,
    tu_direction: str = "reject_below",
    tu_top_n: int = 10,
) -> FilterReport:
    """Reject models with any shared top-5 word or a failing uniqueness score.

    NOTE: the published cut is described as eliminating models with TU above
    0.7, which is inconsistent with TU's semantics (1 = fully unique). Both
    directions are supported; the default keeps unique models (reject_below).
    """
    if tu_direction not in ("reject_below", "reject_above"):
        raise SelectionError(f"bad tu_direction: {tu_direction}")
    overlaps = []
    topics = candidate.topics
    top5 = [set(t.top(5)) for t in topics]
    for i in range(len(topics)):
        for j in range(i + 1, len(topics)):
            shared = top5[i] & top5[j]
            if shared:
                overlaps.append((i, j, sorted(shared)))
    tu = topic_uniqueness(topics, n=tu_top_n)
    tu_fail = tu < tu_threshold if tu_direction == "reject_below" else tu > tu_threshold
    if tu_fail:
        logger.warning(
            "candidate %s: TU=%.3f fails %s %.2f (direction is a config flag; "
            "the published description and the TU definition disagree)",
            candidate.source_tag, tu, tu_direction, tu_threshold,
        )
    return FilterReport(
        source_tag=candidate.source_tag,
        passed=not overlaps and not tu_fail,
        top5_overlap_pairs=overlaps,
        topic_uniqueness=tu,
        tu_threshold=tu_threshold,
        tu_direction=tu_direction,
    )


def score_candidate(candidate: CandidateModel, counts: CoocCounts, top_n: int = 10) -> float:
    scores = [npmi_topic(t, counts, top_n=top_n).value for t in candidate.topics]
    candidate.mean_npmi = float(np.mean(scores))
    return candidate.mean_npmi


def select_best(
    candidates: Sequence[CandidateModel],
    counts: CoocCounts,
    tu_threshold: float = DEFAULT_TU_THRESHOLD,
    tu_direction: str = "reject_below",
    top_n: int = 10,
) -> tuple[CandidateModel, list[FilterReport]]:
    """Filter degenerate candidates, score the rest by mean NPMI, return argmax.

    Ties broken by source_tag (lexicographic). Raises when every candidate is
    filtered, listing the reports.
    """
    reports = [
        redundancy_filter(c, tu_threshold=tu_threshold, tu_direction=tu_direction)
        for c in candidates
    ]
    survivors = [c for c, r in zip(candidates, reports) if r.passed]
    if not survivors:
        raise SelectionError(
            "all candidates rejected by the redundancy filter: "
            + "; ".join(r.to_json() for r in reports)
        )
    for c in survivors:
        if c.mean_npmi is None:
            score_candidate(c, counts, top_n=top_n)
    best = min(survivors, key=lambda c: (-c.mean_npmi, c.source_tag))
    return best, reports
