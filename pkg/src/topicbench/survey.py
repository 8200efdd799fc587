"""Word-intrusion and ratings survey generation, response ingestion, and scoring."""

from __future__ import annotations

import csv
import io
import json
import logging
import warnings
from dataclasses import dataclass, field, asdict
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .cooc import Topic
from .stats.tests import spearman, StatsError

logger = logging.getLogger(__name__)

RESPONSE_CSV_HEADER = [
    "annotator_id", "item_id", "task", "response", "familiar", "duration", "submitted_at",
]
INTRUDER_EXCLUSION_TOP_N = 50  # intruders must fall outside the target's top 50
DEFAULT_ITEM_FRACTION = 0.25
RATING_LABELS = {1: "Not related", 2: "Somewhat related", 3: "Very related"}
N_DISTRACTORS = 8


class SurveyError(ValueError):
    pass


@dataclass
class IntrusionItem:
    item_id: str
    topic_ref: tuple[str, int]
    displayed_words: list[str]
    intruder_index: int
    seed: int
    task: str = "intrusion"
    is_calibration: bool = False


@dataclass
class RatingItem:
    item_id: str
    topic_ref: tuple[str, int]
    displayed_words: list[str]
    is_calibration: bool = False
    task: str = "rating"


Item = Union[IntrusionItem, RatingItem]


@dataclass
class AnnotationRecord:
    annotator_id: str
    item_id: str
    task: str  # "intrusion" | "rating"
    response: int  # word index (intrusion) or 1-3 ordinal (rating)
    familiar: bool
    duration: float
    submitted_at: str = ""

    def __post_init__(self):
        if self.duration < 0:
            raise SurveyError(f"negative duration for item {self.item_id}")


@dataclass
class TopicScore:
    topic_ref: tuple[str, int]
    intrusion_accuracy: Optional[float] = None
    n_intrusion: int = 0
    mean_rating: Optional[float] = None
    n_rating: int = 0
    familiarity_rate: Optional[float] = None


@dataclass
class ScoreReport:
    topic_scores: list[TopicScore]
    orphan_records: list[AnnotationRecord] = field(default_factory=list)


def make_intrusion_item(
    topic: Topic,
    all_topics: Sequence[Topic],
    seed: int,
    item_id: Optional[str] = None,
    is_calibration: bool = False,
) -> IntrusionItem:
    """Five of the target's top ten plus one intruder, shuffled.

    The intruder is drawn uniformly from words in the top ten of some other
    topic but outside the target's top fifty.
    """
    if len(all_topics) < 2:
        raise SurveyError("need at least two topics to build an intrusion item")
    if len(topic.words) < 10:
        raise SurveyError(f"topic {topic.source_tag!r} has fewer than 10 words")
    rng = np.random.default_rng(seed)
    own = topic.top(10)
    exclusion = set(topic.top(INTRUDER_EXCLUSION_TOP_N))
    candidates = sorted(
        {w for t in all_topics if t is not topic for w in t.top(10)} - exclusion
    )
    if not candidates:
        raise SurveyError(f"no intruder candidates for topic {topic.source_tag!r}")
    shown = [own[i] for i in rng.choice(10, size=5, replace=False)]
    intruder = candidates[rng.integers(0, len(candidates))]
    words = shown + [intruder]
    order = rng.permutation(6)
    displayed = [words[i] for i in order]
    return IntrusionItem(
        item_id=item_id or f"int-{topic.source_tag}-{seed}",
        topic_ref=(topic.source_tag, 0),
        displayed_words=displayed,
        intruder_index=displayed.index(intruder),
        seed=seed,
        is_calibration=is_calibration,
    )


def make_rating_item(
    topic: Topic, item_id: Optional[str] = None, is_calibration: bool = False
) -> RatingItem:
    if len(topic.words) < 10:
        raise SurveyError(f"topic {topic.source_tag!r} has fewer than 10 words")
    return RatingItem(
        item_id=item_id or f"rat-{topic.source_tag}",
        topic_ref=(topic.source_tag, 0),
        displayed_words=topic.top(10),
        is_calibration=is_calibration,
    )


def make_distractor_topics(
    selected_topics: Sequence[Topic],
    pool_topics: Sequence[Topic],
    n: int,
    vocab: Optional[Sequence[str]] = None,
    seed: int = 0,
) -> list[Topic]:
    """Synthetic poor-quality topics from high-probability words of non-selected runs."""
    if n < 1:
        raise SurveyError("n must be >= 1")
    selected_words = {w for t in selected_topics for w in t.top(10)}
    candidates = {w for t in pool_topics for w in t.top(10)} - selected_words
    if vocab is not None:
        candidates &= set(vocab)
    candidates = sorted(candidates)
    if len(candidates) < 10:
        raise SurveyError(
            f"only {len(candidates)} distractor candidate words; need at least 10"
        )
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        words = [candidates[j] for j in rng.choice(len(candidates), size=10, replace=False)]
        out.append(Topic(words=words, source_tag=f"distractor_{i}"))
    return out


def assign_items(
    item_ids: Sequence[str],
    fraction: float = DEFAULT_ITEM_FRACTION,
    seed: int = 0,
) -> list[str]:
    """Uniform per-annotator sample of the configured fraction of items."""
    if not 0 < fraction <= 1:
        raise SurveyError("fraction must be in (0, 1]")
    rng = np.random.default_rng(seed)
    k = max(1, round(fraction * len(item_ids)))
    idx = rng.choice(len(item_ids), size=k, replace=False)
    return [item_ids[i] for i in sorted(idx)]


def score_responses(
    records: Sequence[AnnotationRecord], items: Sequence[Item]
) -> ScoreReport:
    """Per-topic intrusion accuracy, mean rating, and familiarity rate."""
    by_id = {it.item_id: it for it in items}
    buckets: dict[tuple[str, int], dict] = {}
    orphans = []
    for rec in records:
        item = by_id.get(rec.item_id)
        if item is None:
            orphans.append(rec)
            continue
        b = buckets.setdefault(
            item.topic_ref, {"correct": 0, "n_int": 0, "ratings": [], "familiar": 0, "n": 0}
        )
        b["n"] += 1
        b["familiar"] += int(rec.familiar)
        if rec.task == "intrusion":
            b["n_int"] += 1
            b["correct"] += int(rec.response == item.intruder_index)
        elif rec.task == "rating":
            if rec.response not in (1, 2, 3):
                raise SurveyError(f"rating out of range: {rec.response}")
            b["ratings"].append(rec.response)
        else:
            raise SurveyError(f"unknown task {rec.task!r}")
    if orphans:
        logger.warning(
            "excluded %d orphan records: %s",
            len(orphans), sorted({r.item_id for r in orphans}),
        )
    scores = []
    for ref in sorted(buckets):
        b = buckets[ref]
        scores.append(
            TopicScore(
                topic_ref=ref,
                intrusion_accuracy=b["correct"] / b["n_int"] if b["n_int"] else None,
                n_intrusion=b["n_int"],
                mean_rating=float(np.mean(b["ratings"])) if b["ratings"] else None,
                n_rating=len(b["ratings"]),
                familiarity_rate=b["familiar"] / b["n"],
            )
        )
    return ScoreReport(topic_scores=scores, orphan_records=orphans)


def familiarity_filter(records: Sequence[AnnotationRecord]) -> list[AnnotationRecord]:
    """Drop annotations whose respondent reported unfamiliarity."""
    kept = [r for r in records if r.familiar]
    if records and not kept:
        warnings.warn("familiarity filter removed every record", stacklevel=2)
    return kept


def _per_annotator_topic_scores(
    records: Sequence[AnnotationRecord], items: Sequence[Item]
) -> dict[str, dict[tuple[str, int], float]]:
    by_id = {it.item_id: it for it in items}
    raw: dict[str, dict[tuple[str, int], list[float]]] = {}
    for rec in records:
        item = by_id.get(rec.item_id)
        if item is None:
            continue
        if rec.task == "intrusion":
            value = float(rec.response == item.intruder_index)
        else:
            value = float(rec.response)
        raw.setdefault(rec.annotator_id, {}).setdefault(item.topic_ref, []).append(value)
    return {
        ann: {ref: float(np.mean(vals)) for ref, vals in topics.items()}
        for ann, topics in raw.items()
    }


def annotator_agreement(
    records: Sequence[AnnotationRecord], items: Sequence[Item]
) -> float:
    """Mean one-versus-rest Spearman correlation of per-topic scores."""
    scores = _per_annotator_topic_scores(records, items)
    if len(scores) < 2:
        raise SurveyError("need at least two annotators")
    rhos = []
    for ann, own in scores.items():
        shared = []
        for ref, value in own.items():
            others = [s[ref] for a, s in scores.items() if a != ann and ref in s]
            if others:
                shared.append((value, float(np.mean(others))))
        if len(shared) < 3:
            continue
        x = [v for v, _ in shared]
        y = [m for _, m in shared]
        try:
            rhos.append(spearman(x, y))
        except StatsError:
            warnings.warn(f"annotator {ann!r} skipped: constant score vector", stacklevel=2)
    if not rhos:
        raise SurveyError("no annotator had >= 3 shared, non-constant topics")
    return float(np.mean(rhos))


def quality_screen(
    records: Sequence[AnnotationRecord],
    items: Sequence[Item],
    min_duration: float = 0.0,
    calibration_threshold: float = 2.0,
) -> tuple[list[AnnotationRecord], list[str]]:
    """Reject annotators who rate calibration topics highly or rush the survey.

    An annotator is rejected when their mean rating over calibration
    (distractor) items exceeds the threshold, or their total duration is
    below min_duration. Returns (kept records, rejected annotator ids).
    """
    calib_ids = {it.item_id for it in items if getattr(it, "is_calibration", False)}
    if not calib_ids:
        warnings.warn("no calibration items; quality screen only checks duration", stacklevel=2)
    calib_ratings: dict[str, list[int]] = {}
    durations: dict[str, float] = {}
    for rec in records:
        durations[rec.annotator_id] = durations.get(rec.annotator_id, 0.0) + rec.duration
        if rec.item_id in calib_ids and rec.task == "rating":
            calib_ratings.setdefault(rec.annotator_id, []).append(rec.response)
    rejected = set()
    for ann, ratings in calib_ratings.items():
        if np.mean(ratings) > calibration_threshold:
            rejected.add(ann)
    for ann, total in durations.items():
        if total < min_duration:
            rejected.add(ann)
    kept = [r for r in records if r.annotator_id not in rejected]
    return kept, sorted(rejected)


# ---------------------------------------------------------------------------
# serialization


def item_to_dict(item: Item) -> dict:
    d = asdict(item)
    d["topic_ref"] = list(item.topic_ref)
    return d


def item_from_dict(obj: dict) -> Item:
    obj = dict(obj)
    obj["topic_ref"] = (obj["topic_ref"][0], int(obj["topic_ref"][1]))
    task = obj.pop("task", "rating")
    if task == "intrusion" or "intruder_index" in obj:
        return IntrusionItem(task="intrusion", **obj)
    return RatingItem(**obj)


def write_items_jsonl(items: Iterable[Item], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for item in items:
            f.write(json.dumps(item_to_dict(item)) + "\n")


def read_items_jsonl(path) -> list[Item]:
    items = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            items.append(item_from_dict(json.loads(line)))
    return items


def _record_to_row(rec: AnnotationRecord) -> list[str]:
    return [
        rec.annotator_id,
        rec.item_id,
        rec.task,
        str(rec.response),
        "true" if rec.familiar else "false",
        format(rec.duration, "g"),
        rec.submitted_at,
    ]


def records_to_csv(records: Sequence[AnnotationRecord]) -> str:
    """Bit-exact response CSV; rows ordered by (submitted_at, annotator_id)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RESPONSE_CSV_HEADER)
    for rec in sorted(records, key=lambda r: (r.submitted_at, r.annotator_id)):
        writer.writerow(_record_to_row(rec))
    return buf.getvalue()


def records_from_csv(text: str) -> list[AnnotationRecord]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != RESPONSE_CSV_HEADER:
        raise SurveyError(f"unexpected CSV header: {header}")
    records = []
    for row in reader:
        if not row:
            continue
        annotator_id, item_id, task, response, familiar, duration, submitted_at = row
        records.append(
            AnnotationRecord(
                annotator_id=annotator_id,
                item_id=item_id,
                task=task,
                response=int(response),
                familiar=familiar == "true",
                duration=float(duration),
                submitted_at=submitted_at,
            )
        )
    return records
