"""Boolean sliding-window co-occurrence counting and coherence metrics.

A window of size W slides one token at a time; a word or pair is counted at
most once per window. Documents shorter than W contribute a single window,
and window size 0 treats each document as one window.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .corpus import EncodedCorpus

COOC_MAGIC = b"TBCC0001"
DEFAULT_EPSILON = 1e-12
NPMI_WINDOW = 10
CV_WINDOW = 110


class CoocError(ValueError):
    pass


class Metric(str, Enum):
    npmi = "npmi"
    cv = "cv"
    c_uci = "c_uci"
    c_umass = "c_umass"


@dataclass
class Topic:
    """Ranked word list; the interchange unit between models, metrics, surveys."""

    words: list[str]
    weights: Optional[list[float]] = None
    source_tag: str = ""

    def __post_init__(self):
        if len(set(self.words)) != len(self.words):
            raise ValueError(f"topic words not distinct: {self.words}")
        if self.weights is not None:
            if len(self.weights) != len(self.words):
                raise ValueError("weights length must match words")
            if any(a < b for a, b in zip(self.weights, self.weights[1:])):
                raise ValueError("weights must be nonincreasing")

    def top(self, n: int) -> list[str]:
        return self.words[:n]


@dataclass
class CoherenceScore:
    metric: Metric
    value: float
    top_n: int
    window_size: int
    reference_tag: str = ""
    pair_sum: float = 0.0
    n_pairs: int = 0
    flagged_words: list[str] = field(default_factory=list)


def _pack(i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    return (i << 32) | j


@dataclass
class CoocCounts:
    window_size: int
    total_windows: int
    word_windows: dict[int, int]
    pair_windows: dict[int, int]  # keyed by 64-bit packed (min_id << 32 | max_id)
    terms: list[str]
    reference_tag: str = ""

    @property
    def term_to_id(self) -> dict[str, int]:
        if not hasattr(self, "_t2i"):
            self._t2i = {t: i for i, t in enumerate(self.terms)}
        return self._t2i

    def word_count(self, i: int) -> int:
        return self.word_windows.get(i, 0)

    def pair_count(self, i: int, j: int) -> int:
        return self.pair_windows.get(_pack(i, j), 0)

    def merge(self, other: "CoocCounts") -> "CoocCounts":
        if other.window_size != self.window_size or other.terms != self.terms:
            raise CoocError("cannot merge counts with different window/vocabulary")
        word = dict(self.word_windows)
        for k, v in other.word_windows.items():
            word[k] = word.get(k, 0) + v
        pair = dict(self.pair_windows)
        for k, v in other.pair_windows.items():
            pair[k] = pair.get(k, 0) + v
        return CoocCounts(
            window_size=self.window_size,
            total_windows=self.total_windows + other.total_windows,
            word_windows=word,
            pair_windows=pair,
            terms=self.terms,
            reference_tag=self.reference_tag,
        )

    def save(self, path) -> None:
        with open(path, "wb") as f:
            f.write(COOC_MAGIC)
            ref = self.reference_tag.encode("utf-8")
            f.write(struct.pack("<I", len(ref)))
            f.write(ref)
            f.write(struct.pack("<iQ", self.window_size, self.total_windows))
            f.write(struct.pack("<I", len(self.terms)))
            for t in self.terms:
                raw = t.encode("utf-8")
                f.write(struct.pack("<I", len(raw)))
                f.write(raw)
            f.write(struct.pack("<I", len(self.word_windows)))
            for k in sorted(self.word_windows):
                f.write(struct.pack("<IQ", k, self.word_windows[k]))
            f.write(struct.pack("<I", len(self.pair_windows)))
            for k in sorted(self.pair_windows):
                f.write(struct.pack("<QQ", k, self.pair_windows[k]))

    @classmethod
    def load(cls, path) -> "CoocCounts":
        with open(path, "rb") as f:
            if f.read(len(COOC_MAGIC)) != COOC_MAGIC:
                raise CoocError(f"{path}: not a co-occurrence counts file")
            (ref_len,) = struct.unpack("<I", f.read(4))
            ref = f.read(ref_len).decode("utf-8")
            window_size, total = struct.unpack("<iQ", f.read(12))
            (n_terms,) = struct.unpack("<I", f.read(4))
            terms = []
            for _ in range(n_terms):
                (tl,) = struct.unpack("<I", f.read(4))
                terms.append(f.read(tl).decode("utf-8"))
            (n_words,) = struct.unpack("<I", f.read(4))
            word = {}
            for _ in range(n_words):
                k, v = struct.unpack("<IQ", f.read(12))
                word[k] = v
            (n_pairs,) = struct.unpack("<I", f.read(4))
            pair = {}
            for _ in range(n_pairs):
                k, v = struct.unpack("<QQ", f.read(16))
                pair[k] = v
        return cls(window_size, total, word, pair, terms, ref)

    def save_debug_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"# window={self.window_size}\ttotal_windows={self.total_windows}\n")
            for k in sorted(self.word_windows):
                f.write(f"word\t{self.terms[k]}\t{self.word_windows[k]}\n")
            for k in sorted(self.pair_windows):
                i, j = k >> 32, k & 0xFFFFFFFF
                f.write(f"pair\t{self.terms[i]}\t{self.terms[j]}\t{self.pair_windows[k]}\n")


def count_windows(
    corpus: EncodedCorpus,
    window_size: int,
    terms: Optional[Sequence[str]] = None,
    reference_tag: str = "",
) -> CoocCounts:
    """Count word and pair window occurrences over an encoded corpus."""
    if window_size < 0:
        raise CoocError("window_size must be >= 0")
    if len(corpus) == 0:
        raise CoocError("empty corpus")
    if terms is None:
        max_id = max((max(ids) for _, ids in corpus.docs if ids), default=-1)
        terms = [str(i) for i in range(max_id + 1)]

    word: dict[int, int] = {}
    pair: dict[int, int] = {}
    total = 0
    for _, ids in corpus.docs:
        n = len(ids)
        if window_size == 0 or n <= window_size:
            windows = [ids]
        else:
            windows = [ids[s : s + window_size] for s in range(n - window_size + 1)]
        total += len(windows)
        for win in windows:
            distinct = sorted(set(win))
            for a, wid in enumerate(distinct):
                word[wid] = word.get(wid, 0) + 1
                for wjd in distinct[a + 1 :]:
                    key = (wid << 32) | wjd
                    pair[key] = pair.get(key, 0) + 1
    return CoocCounts(
        window_size=window_size,
        total_windows=total,
        word_windows=word,
        pair_windows=pair,
        terms=list(terms),
        reference_tag=reference_tag,
    )


def pair_npmi(
    counts: CoocCounts, i: int, j: int, epsilon: float = DEFAULT_EPSILON
) -> float:
    """NPMI of one term-id pair; epsilon is added to the joint probability only."""
    total = counts.total_windows
    p_i = counts.word_count(i) / total
    p_j = counts.word_count(j) / total
    p_ij = counts.pair_count(i, j) / total + epsilon
    return math.log(p_ij / (p_i * p_j)) / -math.log(p_ij)


def _resolve_topic(topic: Topic, counts: CoocCounts, top_n: int):
    t2i = counts.term_to_id
    resolved, flagged = [], []
    for w in topic.top(top_n):
        wid = t2i.get(w)
        if wid is None or counts.word_count(wid) == 0:
            flagged.append(w)
        else:
            resolved.append(wid)
    if len(resolved) < 2:
        raise CoocError(
            f"topic {topic.source_tag!r}: fewer than 2 words resolvable in counts "
            f"(missing: {flagged})"
        )
    return resolved, flagged


def npmi_topic(
    topic: Topic,
    counts: CoocCounts,
    top_n: int = 10,
    epsilon: float = DEFAULT_EPSILON,
) -> CoherenceScore:
    """Mean pairwise NPMI over the unordered pairs among the top_n words."""
    ids, flagged = _resolve_topic(topic, counts, top_n)
    pair_values = [
        pair_npmi(counts, ids[a], ids[b], epsilon)
        for a in range(len(ids))
        for b in range(a + 1, len(ids))
    ]
    return CoherenceScore(
        metric=Metric.npmi,
        value=float(np.mean(pair_values)),
        top_n=top_n,
        window_size=counts.window_size,
        reference_tag=counts.reference_tag,
        pair_sum=float(np.sum(pair_values)),
        n_pairs=len(pair_values),
        flagged_words=flagged,
    )


def cv_topic(
    topic: Topic,
    counts: CoocCounts,
    top_n: int = 10,
    epsilon: float = DEFAULT_EPSILON,
    enforce_window: bool = True,
) -> CoherenceScore:
    """C_v: cosine similarity of per-word NPMI vectors against their sum.

    Each top word gets a vector of NPMI values against all top words
    (self-NPMI = 1); the score is the mean cosine similarity between each
    vector and the context (sum) vector. Built for a 110-token window.
    """
    if enforce_window and counts.window_size != CV_WINDOW:
        raise CoocError(
            f"cv expects counts with window {CV_WINDOW}, got {counts.window_size} "
            "(pass enforce_window=False to override)"
        )
    ids, flagged = _resolve_topic(topic, counts, top_n)
    n = len(ids)
    vectors = np.ones((n, n))
    for a in range(n):
        for b in range(a + 1, n):
            v = pair_npmi(counts, ids[a], ids[b], epsilon)
            vectors[a, b] = vectors[b, a] = v
    context = vectors.sum(axis=0)
    ctx_norm = np.linalg.norm(context)
    sims = []
    for a in range(n):
        norm = np.linalg.norm(vectors[a])
        if norm == 0 or ctx_norm == 0:
            sims.append(0.0)
            flagged.append(counts.terms[ids[a]])
        else:
            sims.append(float(vectors[a] @ context / (norm * ctx_norm)))
    return CoherenceScore(
        metric=Metric.cv,
        value=float(np.mean(sims)),
        top_n=top_n,
        window_size=counts.window_size,
        reference_tag=counts.reference_tag,
        pair_sum=float(np.sum(sims)),
        n_pairs=n,
        flagged_words=flagged,
    )


def legacy_coherence(
    topic: Topic,
    counts: CoocCounts,
    metric: Metric,
    top_n: int = 10,
    epsilon: float = DEFAULT_EPSILON,
) -> CoherenceScore:
    """C_UCI (windowed PMI) and C_UMASS (document co-occurrence) coherence.

    C_UMASS expects document-level counts (window 0) from the training corpus;
    for the pair (w_i, w_j) with i ranked before j, the pair score is
    log((D(i, j) + 1) / D(j)) -- the denominator is the later-ranked word.
    """
    metric = Metric(metric)
    if metric not in (Metric.c_uci, Metric.c_umass):
        raise CoocError(f"not a legacy metric: {metric}")
    ids, flagged = _resolve_topic(topic, counts, top_n)
    pair_values = []
    total = counts.total_windows
    for a in range(len(ids)):
        for b in range(a + 1, len(ids)):
            i, j = ids[a], ids[b]
            if metric is Metric.c_umass:
                d_ij = counts.pair_count(i, j)
                d_j = counts.word_count(j)
                pair_values.append(math.log((d_ij + 1) / d_j))
            else:
                p_i = counts.word_count(i) / total
                p_j = counts.word_count(j) / total
                p_ij = counts.pair_count(i, j) / total + epsilon
                pair_values.append(math.log(p_ij / (p_i * p_j)))
    return CoherenceScore(
        metric=metric,
        value=float(np.mean(pair_values)),
        top_n=top_n,
        window_size=counts.window_size,
        reference_tag=counts.reference_tag,
        pair_sum=float(np.sum(pair_values)),
        n_pairs=len(pair_values),
        flagged_words=flagged,
    )


def write_topics_jsonl(topics: Sequence[Topic], path) -> None:
    """Universal topic interchange format, one topic per line."""
    import json

    with open(path, "w", encoding="utf-8") as f:
        for k, t in enumerate(topics):
            obj = {"source_tag": t.source_tag, "topic_id": k, "words": t.words}
            if t.weights is not None:
                obj["weights"] = t.weights
            f.write(json.dumps(obj) + "\n")


def read_topics_jsonl(path) -> list[Topic]:
    import json

    topics = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            obj = json.loads(line)
            topics.append(
                Topic(
                    words=list(obj["words"]),
                    weights=obj.get("weights"),
                    source_tag=obj.get("source_tag", ""),
                )
            )
    return topics


def score_topic(topic: Topic, counts: CoocCounts, metric: Metric, **kw) -> CoherenceScore:
    metric = Metric(metric)
    if metric is Metric.npmi:
        return npmi_topic(topic, counts, **kw)
    if metric is Metric.cv:
        return cv_topic(topic, counts, **kw)
    return legacy_coherence(topic, counts, metric, **kw)
