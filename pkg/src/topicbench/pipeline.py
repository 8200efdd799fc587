"""End-to-end pipeline runner with content-hash stage caching.

Stages: preprocess -> count -> train -> select -> score -> survey-gen.
Each stage is keyed by a hash of its parameters and the content hashes of its
input artifacts; a rerun with unchanged inputs is a cache hit, and changing
one parameter reruns only the stages downstream of it. The run manifest
lists every artifact, stage key, and seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import asdict, dataclass, field
from typing import Optional

import yaml

from . import cooc, corpus, lda, selection, survey

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class PipelineError(ValueError):
    pass


@dataclass
class PipelineConfig:
    """Declarative run configuration; loaded from a YAML mapping."""

    corpus_path: str
    reference_path: Optional[str] = None  # defaults to corpus_path
    truncate_tokens: int = 5000
    entity_policy: str = "spans"
    window_size: int = 10
    metrics: list[str] = field(default_factory=lambda: ["npmi"])
    top_n: int = 10
    n_topics: int = 10
    search_budget: int = 2
    search_space: dict = field(
        default_factory=lambda: {k: list(v) for k, v in selection.GLDA_SPACE.items()}
    )
    tu_threshold: float = selection.DEFAULT_TU_THRESHOLD
    tu_direction: str = "reject_below"
    n_distractors: int = survey.N_DISTRACTORS
    item_fraction: float = survey.DEFAULT_ITEM_FRACTION
    seed: int = 0

    def __post_init__(self):
        if self.reference_path is None:
            self.reference_path = self.corpus_path
        if self.seed is None:
            raise PipelineError("seed must be explicit")
        unknown = set(self.metrics) - {m.value for m in cooc.Metric}
        if unknown:
            raise PipelineError(f"unknown metrics: {sorted(unknown)}")

    def validate_paths(self) -> None:
        for path in (self.corpus_path, self.reference_path):
            if not os.path.exists(path):
                raise PipelineError(f"input file does not exist: {path}")

    @classmethod
    def from_yaml(cls, path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        if not isinstance(data, dict):
            raise PipelineError(f"{path}: expected a mapping")
        known = {f_.name for f_ in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(data) - known
        if unknown:
            raise PipelineError(f"{path}: unknown config keys {sorted(unknown)}")
        if "corpus_path" not in data:
            raise PipelineError(f"{path}: corpus_path is required")
        return cls(**data)


def file_hash(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()[:16]


def stage_key(name: str, params: dict, input_hashes: list[str]) -> str:
    payload = json.dumps(
        {"stage": name, "params": params, "inputs": input_hashes},
        sort_keys=True, default=str,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


class _Run:
    def __init__(self, cfg: PipelineConfig, out_dir: str):
        self.cfg = cfg
        self.out_dir = out_dir
        os.makedirs(out_dir, exist_ok=True)
        self.manifest_path = os.path.join(out_dir, MANIFEST_NAME)
        self.old_stages: dict = {}
        if os.path.exists(self.manifest_path):
            with open(self.manifest_path, encoding="utf-8") as f:
                self.old_stages = json.load(f).get("stages", {})
        self.stages: dict[str, dict] = {}

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def run_stage(self, name: str, params: dict, input_hashes: list[str],
                  artifacts: list[str], fn) -> dict:
        """Execute `fn` unless the stage key matches the previous run and all
        artifacts still exist."""
        key = stage_key(name, params, input_hashes)
        prev = self.old_stages.get(name)
        paths = [self.path(a) for a in artifacts]
        if prev and prev.get("key") == key and all(os.path.exists(p) for p in paths):
            record = {"key": key, "artifacts": artifacts, "cached": True}
        else:
            try:
                fn()
            except Exception as exc:
                raise PipelineError(f"stage {name!r} failed: {exc}") from exc
            record = {"key": key, "artifacts": artifacts, "cached": False}
        self.stages[name] = record
        return record

    def write_manifest(self) -> dict:
        manifest = {
            "config": asdict(self.cfg),
            "seed": self.cfg.seed,
            "stages": self.stages,
            "artifacts": sorted(
                {a for s in self.stages.values() for a in s["artifacts"]}
            ),
        }
        with open(self.manifest_path, "w", encoding="utf-8") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        return manifest


def run_pipeline(cfg: PipelineConfig, out_dir: str) -> dict:
    """Execute all stages into `out_dir`; returns the run manifest."""
    cfg.validate_paths()
    run = _Run(cfg, out_dir)

    pre_cfg = corpus.PreprocessConfig(
        truncate_tokens=cfg.truncate_tokens, entity_policy=cfg.entity_policy
    )

    # -- preprocess: vocabulary from the training corpus, both corpora encoded
    pre_params = {
        "truncate_tokens": cfg.truncate_tokens,
        "entity_policy": cfg.entity_policy,
    }
    pre_inputs = [file_hash(cfg.corpus_path), file_hash(cfg.reference_path)]
    vocab_tsv, enc_bin, ref_bin = "vocab.tsv", "encoded.bin", "reference_encoded.bin"

    def do_preprocess():
        docs = [
            d for d in (
                corpus.process_document(raw, pre_cfg)
                for raw in corpus.read_jsonl_documents(cfg.corpus_path)
            ) if d is not None
        ]
        vocab = corpus.build_vocabulary(docs)
        vocab.save_tsv(run.path(vocab_tsv))
        corpus.encode_corpus(docs, vocab).save_binary(run.path(enc_bin))
        ref_docs = [
            d for d in (
                corpus.process_document(raw, pre_cfg)
                for raw in corpus.read_jsonl_documents(cfg.reference_path)
            ) if d is not None
        ]
        corpus.encode_corpus(ref_docs, vocab).save_binary(run.path(ref_bin))

    run.run_stage("preprocess", pre_params, pre_inputs,
                  [vocab_tsv, enc_bin, ref_bin], do_preprocess)

    vocab = corpus.Vocabulary.load_tsv(run.path(vocab_tsv))
    enc_hash = file_hash(run.path(enc_bin))
    ref_hash = file_hash(run.path(ref_bin))
    vocab_hash_ = file_hash(run.path(vocab_tsv))

    # -- count: reference-corpus window counts
    cooc_bin = "cooc.bin"

    def do_count():
        ref = corpus.EncodedCorpus.load_binary(run.path(ref_bin))
        counts = cooc.count_windows(
            ref, cfg.window_size, terms=vocab.terms, reference_tag="reference"
        )
        counts.save(run.path(cooc_bin))

    run.run_stage("count", {"window_size": cfg.window_size},
                  [ref_hash, vocab_hash_], [cooc_bin], do_count)

    # -- train: fixed-budget random search over the baseline space
    cand_files = [f"candidate_{i}.topics.jsonl" for i in range(cfg.search_budget)]
    configs_json = "candidate_configs.json"

    def do_train():
        encoded = corpus.EncodedCorpus.load_binary(run.path(enc_bin))
        configs = selection.random_search(cfg.search_space, cfg.search_budget, cfg.seed)
        for i, params in enumerate(configs):
            model = lda.GibbsLda(
                n_topics=cfg.n_topics, seed=cfg.seed + i, **params
            ).fit(encoded)
            topics = model.topics(max(cfg.top_n, 10), terms=vocab.terms)
            for t in topics:
                t.source_tag = f"candidate_{i}/{t.source_tag}"
            cooc.write_topics_jsonl(topics, run.path(cand_files[i]))
        with open(run.path(configs_json), "w", encoding="utf-8") as f:
            json.dump(configs, f, indent=2, sort_keys=True)

    train_params = {
        "n_topics": cfg.n_topics,
        "search_budget": cfg.search_budget,
        "search_space": cfg.search_space,
        "seed": cfg.seed,
        "top_n": cfg.top_n,
    }
    run.run_stage("train", train_params, [enc_hash, vocab_hash_],
                  cand_files + [configs_json], do_train)

    # -- select: redundancy filter + NPMI argmax
    best_topics_f, reports_f = "best_topics.jsonl", "filter_reports.jsonl"
    cand_hashes = [file_hash(run.path(f)) for f in cand_files]
    cooc_hash = file_hash(run.path(cooc_bin))

    def do_select():
        counts = cooc.CoocCounts.load(run.path(cooc_bin))
        candidates = [
            selection.CandidateModel(
                source_tag=f"candidate_{i}",
                topics=cooc.read_topics_jsonl(run.path(f)),
            )
            for i, f in enumerate(cand_files)
        ]
        best, reports = selection.select_best(
            candidates, counts,
            tu_threshold=cfg.tu_threshold, tu_direction=cfg.tu_direction,
            top_n=cfg.top_n,
        )
        cooc.write_topics_jsonl(best.topics, run.path(best_topics_f))
        with open(run.path(reports_f), "w", encoding="utf-8") as f:
            for r in reports:
                f.write(r.to_json() + "\n")

    select_params = {
        "tu_threshold": cfg.tu_threshold,
        "tu_direction": cfg.tu_direction,
        "top_n": cfg.top_n,
    }
    run.run_stage("select", select_params, cand_hashes + [cooc_hash],
                  [best_topics_f, reports_f], do_select)

    # -- score: coherence of the selected model's topics under every metric
    scores_json = "scores.json"
    best_hash = file_hash(run.path(best_topics_f))

    def do_score():
        counts = cooc.CoocCounts.load(run.path(cooc_bin))
        topics = cooc.read_topics_jsonl(run.path(best_topics_f))
        out = []
        for t in topics:
            row = {"source_tag": t.source_tag}
            for m in cfg.metrics:
                kw = {"top_n": cfg.top_n}
                if m == "cv":
                    kw["enforce_window"] = False
                score = cooc.score_topic(t, counts, cooc.Metric(m), **kw)
                row[m] = score.value
            out.append(row)
        with open(run.path(scores_json), "w", encoding="utf-8") as f:
            json.dump(out, f, indent=2, sort_keys=True)

    run.run_stage("score", {"metrics": sorted(cfg.metrics), "top_n": cfg.top_n},
                  [best_hash, cooc_hash], [scores_json], do_score)

    # -- survey-gen: intrusion + rating items, calibration distractors when possible
    items_f = "items.jsonl"

    def do_survey():
        topics = cooc.read_topics_jsonl(run.path(best_topics_f))
        pool = []
        for f in cand_files:
            pool.extend(cooc.read_topics_jsonl(run.path(f)))
        items: list[survey.Item] = []
        for k, t in enumerate(topics):
            items.append(
                survey.make_intrusion_item(
                    t, topics, seed=cfg.seed + k, item_id=f"int-{k}"
                )
            )
            items.append(survey.make_rating_item(t, item_id=f"rat-{k}"))
        try:
            distractors = survey.make_distractor_topics(
                topics, pool, cfg.n_distractors, seed=cfg.seed
            )
            for i, d in enumerate(distractors):
                items.append(
                    survey.make_rating_item(
                        d, item_id=f"cal-{i}", is_calibration=True
                    )
                )
        except survey.SurveyError as exc:
            logger.warning("skipping calibration distractors: %s", exc)
        survey.write_items_jsonl(items, run.path(items_f))

    survey_params = {
        "n_distractors": cfg.n_distractors,
        "item_fraction": cfg.item_fraction,
        "seed": cfg.seed,
    }
    run.run_stage("survey-gen", survey_params, [best_hash] + cand_hashes,
                  [items_f], do_survey)

    return run.write_manifest()
