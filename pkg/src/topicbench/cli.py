"""Unified command-line interface.

Exit codes: 0 success, 1 validation error (bad arguments or invalid inputs),
2 runtime failure. Statistical commands emit a single JSON record echoing the
full configuration alongside the result.
"""

from __future__ import annotations

import json
import sys
from dataclasses import asdict

import click
import yaml

from . import cooc, corpus, lda, pipeline, selection, survey
from .stats import bootstrap, power, regress, tests


def _emit(command: str, config: dict, result: dict) -> None:
    click.echo(json.dumps(
        {"command": command, "config": config, "result": result}, sort_keys=True
    ))


def _load_preprocess_config(path) -> corpus.PreprocessConfig:
    if path is None:
        return corpus.PreprocessConfig()
    with open(path, encoding="utf-8") as f:
        data = yaml.safe_load(f) or {}
    kwargs = {}
    for key in ("truncate_tokens", "min_whitespace_tokens", "entity_policy"):
        if key in data:
            kwargs[key] = data[key]
    if "stopwords" in data:
        kwargs["stopwords"] = frozenset(data["stopwords"])
    return corpus.PreprocessConfig(**kwargs)


@click.group()
def cli():
    """Topic-model evaluation workbench."""


# --------------------------------------------------------------------------
# corpus


@cli.group("corpus")
def corpus_group():
    """Preprocess documents, build vocabularies, encode corpora."""


@corpus_group.command("preprocess")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(exists=True))
def corpus_preprocess(input_path, output_path, config_path):
    """Tokenize raw JSONL documents into tokenized JSONL."""
    cfg = _load_preprocess_config(config_path)
    docs = (
        corpus.process_document(raw, cfg)
        for raw in corpus.read_jsonl_documents(input_path)
    )
    kept = [d for d in docs if d is not None]
    corpus.write_tokenized_jsonl(kept, output_path)
    _emit("corpus preprocess",
          {"input": input_path, "config": config_path},
          {"documents": len(kept), "output": output_path})


@corpus_group.command("vocab")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path())
def corpus_vocab(input_path, output_path):
    """Build the filtered vocabulary from tokenized JSONL."""
    vocab = corpus.build_vocabulary(corpus.read_tokenized_jsonl(input_path))
    vocab.save_tsv(output_path)
    _emit("corpus vocab",
          {"input": input_path},
          {"terms": len(vocab), "min_df": vocab.min_df,
           "dropped": len(vocab.dropped), "output": output_path})


@corpus_group.command("encode")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--output", "output_path", required=True, type=click.Path(),
              help="Encoded corpus; .bin extension selects the binary form.")
def corpus_encode(input_path, vocab_path, output_path):
    """Encode tokenized JSONL against a vocabulary TSV."""
    vocab = corpus.Vocabulary.load_tsv(vocab_path)
    encoded = corpus.encode_corpus(corpus.read_tokenized_jsonl(input_path), vocab)
    if output_path.endswith(".bin"):
        encoded.save_binary(output_path)
    else:
        encoded.save_jsonl(output_path)
    _emit("corpus encode",
          {"input": input_path, "vocab": vocab_path},
          {"documents": len(encoded), "output": output_path})


def _load_encoded(path) -> corpus.EncodedCorpus:
    if path.endswith(".bin"):
        return corpus.EncodedCorpus.load_binary(path)
    return corpus.EncodedCorpus.load_jsonl(path)


# --------------------------------------------------------------------------
# cooc


@cli.group("cooc")
def cooc_group():
    """Sliding-window co-occurrence counts and coherence scores."""


@cooc_group.command("count")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--window", required=True,
              help="Window size in tokens; 'doc' counts whole documents.")
@click.option("--output", "output_path", required=True, type=click.Path())
@click.option("--debug-tsv", "debug_path", type=click.Path())
def cooc_count(input_path, vocab_path, window, output_path, debug_path):
    """Count word/pair window occurrences over an encoded corpus."""
    window_size = 0 if window == "doc" else int(window)
    vocab = corpus.Vocabulary.load_tsv(vocab_path)
    encoded = _load_encoded(input_path)
    counts = cooc.count_windows(encoded, window_size, terms=vocab.terms)
    counts.save(output_path)
    if debug_path:
        counts.save_debug_tsv(debug_path)
    _emit("cooc count",
          {"input": input_path, "window": window},
          {"total_windows": counts.total_windows, "output": output_path})


@cooc_group.command("score")
@click.option("--counts", "counts_path", required=True, type=click.Path(exists=True))
@click.option("--topics", "topics_path", required=True, type=click.Path(exists=True))
@click.option("--metric", required=True,
              type=click.Choice([m.value for m in cooc.Metric]))
@click.option("--top-n", default=10, show_default=True)
@click.option("--no-enforce-window", is_flag=True,
              help="Allow cv scoring on a non-110-token window.")
def cooc_score(counts_path, topics_path, metric, top_n, no_enforce_window):
    """Score topics from a topics JSONL against saved counts."""
    counts = cooc.CoocCounts.load(counts_path)
    kw = {"top_n": top_n}
    if metric == "cv":
        kw["enforce_window"] = not no_enforce_window
    scores = [
        {"source_tag": t.source_tag,
         **{k: v for k, v in asdict(
             cooc.score_topic(t, counts, cooc.Metric(metric), **kw)
         ).items() if k != "metric"}}
        for t in cooc.read_topics_jsonl(topics_path)
    ]
    _emit("cooc score",
          {"counts": counts_path, "topics": topics_path,
           "metric": metric, "top_n": top_n},
          {"scores": scores})


# --------------------------------------------------------------------------
# lda


@cli.group("lda")
def lda_group():
    """Collapsed-Gibbs LDA baseline."""


@lda_group.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="YAML overriding any option below.")
@click.option("--input", "input_path", type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", type=click.Path(exists=True))
@click.option("--n-topics", default=50, show_default=True)
@click.option("--alpha", default=0.1, show_default=True)
@click.option("--beta", default=0.01, show_default=True)
@click.option("--n-iter", default=1000, show_default=True)
@click.option("--optimize-interval", default=0, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--checkpoint", "checkpoint_path", type=click.Path())
@click.option("--topics-out", "topics_path", type=click.Path())
@click.option("--top-n", default=10, show_default=True)
def lda_train(config_path, input_path, vocab_path, n_topics, alpha, beta,
              n_iter, optimize_interval, seed, checkpoint_path, topics_path, top_n):
    """Train one LDA model; optionally save a checkpoint and topic JSONL."""
    params = {
        "input": input_path, "vocab": vocab_path, "n_topics": n_topics,
        "alpha": alpha, "beta": beta, "n_iter": n_iter,
        "optimize_interval": optimize_interval, "seed": seed, "top_n": top_n,
    }
    if config_path:
        with open(config_path, encoding="utf-8") as f:
            overrides = yaml.safe_load(f) or {}
        unknown = set(overrides) - set(params)
        if unknown:
            raise lda.LdaError(f"unknown config keys: {sorted(unknown)}")
        params.update(overrides)
    if not params["input"]:
        raise lda.LdaError("an encoded corpus is required (--input or config)")
    encoded = _load_encoded(params["input"])
    model = lda.GibbsLda(
        n_topics=params["n_topics"], alpha=params["alpha"], beta=params["beta"],
        n_iter=params["n_iter"], optimize_interval=params["optimize_interval"],
        seed=params["seed"],
    ).fit(encoded)
    terms = None
    if params["vocab"]:
        terms = corpus.Vocabulary.load_tsv(params["vocab"]).terms
    if checkpoint_path:
        model.save(checkpoint_path)
    if topics_path:
        cooc.write_topics_jsonl(model.topics(params["top_n"], terms), topics_path)
    _emit("lda train", params,
          {"tokens": len(model.assignments_),
           "count_conservation": model.check_count_conservation(),
           "alpha": [float(a) for a in model.alpha_],
           "checkpoint": checkpoint_path, "topics": topics_path})


# --------------------------------------------------------------------------
# select


@cli.group("select")
def select_group():
    """Hyperparameter search and model selection."""


@select_group.command("run")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@click.option("--vocab", "vocab_path", required=True, type=click.Path(exists=True))
@click.option("--ref-counts", "counts_path", required=True, type=click.Path(exists=True))
@click.option("--budget", default=selection.DEFAULT_BUDGET, show_default=True)
@click.option("--n-topics", default=50, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--tu-threshold", default=selection.DEFAULT_TU_THRESHOLD, show_default=True)
@click.option("--tu-direction", default="reject_below", show_default=True,
              type=click.Choice(["reject_below", "reject_above"]))
@click.option("--best-out", "best_path", type=click.Path())
@click.option("--reports-out", "reports_path", type=click.Path())
def select_run(input_path, vocab_path, counts_path, budget, n_topics, seed,
               tu_threshold, tu_direction, best_path, reports_path):
    """Random-search LDA configs, filter degenerate models, pick the NPMI argmax."""
    encoded = _load_encoded(input_path)
    terms = corpus.Vocabulary.load_tsv(vocab_path).terms
    counts = cooc.CoocCounts.load(counts_path)
    configs = selection.random_search(selection.GLDA_SPACE, budget, seed)
    candidates = []
    for i, params in enumerate(configs):
        model = lda.GibbsLda(n_topics=n_topics, seed=seed + i, **params).fit(encoded)
        topics = model.topics(10, terms)
        for t in topics:
            t.source_tag = f"candidate_{i}/{t.source_tag}"
        candidates.append(
            selection.CandidateModel(f"candidate_{i}", topics, config=params)
        )
    best, reports = selection.select_best(
        candidates, counts, tu_threshold=tu_threshold, tu_direction=tu_direction
    )
    if best_path:
        cooc.write_topics_jsonl(best.topics, best_path)
    if reports_path:
        with open(reports_path, "w", encoding="utf-8") as f:
            for r in reports:
                f.write(r.to_json() + "\n")
    _emit("select run",
          {"input": input_path, "budget": budget, "n_topics": n_topics,
           "seed": seed, "tu_threshold": tu_threshold, "tu_direction": tu_direction},
          {"best": best.source_tag, "mean_npmi": best.mean_npmi,
           "best_config": best.config,
           "passed": [r.source_tag for r in reports if r.passed]})


# --------------------------------------------------------------------------
# survey


@cli.group("survey")
def survey_group():
    """Generate survey items, score responses, measure agreement."""


@survey_group.command("gen")
@click.option("--topics", "topics_path", required=True, type=click.Path(exists=True))
@click.option("--pool", "pool_path", type=click.Path(exists=True),
              help="Topic JSONL pool for distractor calibration topics.")
@click.option("--n-distractors", default=survey.N_DISTRACTORS, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--output", "output_path", required=True, type=click.Path())
def survey_gen(topics_path, pool_path, n_distractors, seed, output_path):
    """Intrusion + rating items per topic, plus calibration distractors."""
    topics = cooc.read_topics_jsonl(topics_path)
    items: list[survey.Item] = []
    for k, t in enumerate(topics):
        items.append(survey.make_intrusion_item(t, topics, seed=seed + k,
                                                item_id=f"int-{k}"))
        items.append(survey.make_rating_item(t, item_id=f"rat-{k}"))
    n_calibration = 0
    if pool_path:
        pool = cooc.read_topics_jsonl(pool_path)
        distractors = survey.make_distractor_topics(topics, pool, n_distractors,
                                                    seed=seed)
        for i, d in enumerate(distractors):
            items.append(survey.make_rating_item(d, item_id=f"cal-{i}",
                                                 is_calibration=True))
        n_calibration = len(distractors)
    survey.write_items_jsonl(items, output_path)
    _emit("survey gen",
          {"topics": topics_path, "pool": pool_path,
           "n_distractors": n_distractors, "seed": seed},
          {"items": len(items), "calibration": n_calibration,
           "output": output_path})


def _read_records(path) -> list[survey.AnnotationRecord]:
    with open(path, encoding="utf-8") as f:
        return survey.records_from_csv(f.read())


@survey_group.command("score")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--responses", "responses_path", required=True, type=click.Path(exists=True))
@click.option("--familiar-only", is_flag=True,
              help="Drop annotations whose respondent reported unfamiliarity.")
def survey_score(items_path, responses_path, familiar_only):
    """Per-topic intrusion accuracy, mean rating, and familiarity rate."""
    items = survey.read_items_jsonl(items_path)
    records = _read_records(responses_path)
    if familiar_only:
        records = survey.familiarity_filter(records)
    report = survey.score_responses(records, items)
    _emit("survey score",
          {"items": items_path, "responses": responses_path,
           "familiar_only": familiar_only},
          {"topics": [
              {**asdict(s), "topic_ref": list(s.topic_ref)}
              for s in report.topic_scores
           ],
           "orphans": len(report.orphan_records)})


@survey_group.command("agreement")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--responses", "responses_path", required=True, type=click.Path(exists=True))
def survey_agreement(items_path, responses_path):
    """Mean one-versus-rest Spearman agreement across annotators."""
    items = survey.read_items_jsonl(items_path)
    records = _read_records(responses_path)
    rho = survey.annotator_agreement(records, items)
    _emit("survey agreement",
          {"items": items_path, "responses": responses_path},
          {"mean_one_vs_rest_spearman": rho})


# --------------------------------------------------------------------------
# stats


@cli.group("stats")
def stats_group():
    """Power analysis, equivalence bounds, FDR/FOR, correlations, regressions."""


def _power_config(task, k, r, m, alpha, p0, p1, n_sims) -> power.PowerConfig:
    return power.PowerConfig(task=task, K=k, r=r, M=m, alpha=alpha,
                             p0=p0, p1=p1, n_sims=n_sims)


_POWER_OPTIONS = [
    click.option("--task", required=True, type=click.Choice(["intrusion", "rating"])),
    click.option("--k", default=50, show_default=True, help="Topics per model."),
    click.option("--r", default=4, show_default=True,
                 help="Coherent-topic deficit of the weaker model."),
    click.option("--alpha", default=tests.DEFAULT_ALPHA, show_default=True),
    click.option("--p0", default=1 / 6, show_default=True),
    click.option("--p1", default=0.85, show_default=True),
    click.option("--n-sims", default=10_000, show_default=True),
    click.option("--seed", default=0, show_default=True),
]


def _with_power_options(fn):
    for opt in reversed(_POWER_OPTIONS):
        fn = opt(fn)
    return fn


@stats_group.command("power")
@_with_power_options
@click.option("--m", default=25, show_default=True, help="Annotators per item.")
def stats_power(task, k, r, alpha, p0, p1, n_sims, seed, m):
    """Monte Carlo power of detecting the stronger model."""
    cfg = _power_config(task, k, r, m, alpha, p0, p1, n_sims)
    est = power.power_simulation(cfg, seed=seed)
    _emit("stats power", {**asdict(cfg), "seed": seed},
          {"power": est.power, "mc_se": est.mc_se})


@stats_group.command("min-annotators")
@_with_power_options
@click.option("--target-power", default=0.9, show_default=True)
@click.option("--m-step", default=5, show_default=True)
@click.option("--m-max", default=200, show_default=True)
def stats_min_annotators(task, k, r, alpha, p0, p1, n_sims, seed,
                         target_power, m_step, m_max):
    """Smallest annotator count reaching the target power."""
    cfg = _power_config(task, k, r, m_step, alpha, p0, p1, n_sims)
    m, curve = power.min_annotators(cfg, target_power=target_power, seed=seed,
                                    m_step=m_step, m_max=m_max)
    _emit("stats min-annotators",
          {**asdict(cfg), "seed": seed, "target_power": target_power,
           "m_step": m_step, "m_max": m_max},
          {"min_annotators": m,
           "curve": [{"M": e.config["M"], "power": e.power} for e in curve]})


@stats_group.command("epsilon")
@_with_power_options
@click.option("--m", default=None, type=int,
              help="Annotators per item; defaults to the task's standard count.")
@click.option("--beta-target", default=0.9, show_default=True)
@click.option("--grid-step", default=power.EPSILON_GRID_STEP, show_default=True)
def stats_epsilon(task, k, r, alpha, p0, p1, n_sims, seed, m,
                  beta_target, grid_step):
    """Smallest non-inferiority bound reaching the target power under no difference."""
    if m is None:
        m = power.DEFAULT_M[task]
    cfg = _power_config(task, k, r, m, alpha, p0, p1, n_sims)
    eps, info = power.equivalence_bound_search(cfg, beta_target=beta_target,
                                               seed=seed, grid_step=grid_step)
    _emit("stats epsilon",
          {**asdict(cfg), "seed": seed, "beta_target": beta_target,
           "grid_step": grid_step},
          {"epsilon": eps, **info})


@stats_group.command("fdr")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help='JSON: {"pool": [{"auto_score", "human": [...]}, ...]}')
@click.option("--task", required=True, type=click.Choice(["intrusion", "rating"]))
@click.option("--k", default=50, show_default=True)
@click.option("--n-iter", default=1000, show_default=True)
@click.option("--eps-human", default=0.05, show_default=True)
@click.option("--eps-auto", default=0.05, show_default=True)
@click.option("--alpha", default=tests.DEFAULT_ALPHA, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--subtract-alpha", is_flag=True)
def stats_fdr(input_path, task, k, n_iter, eps_human, eps_auto, alpha, seed,
              subtract_alpha):
    """Bootstrapped false discovery / omission rates of automated comparisons."""
    with open(input_path, encoding="utf-8") as f:
        data = json.load(f)
    pool = [bootstrap.TopicPoolEntry(e["auto_score"], e["human"])
            for e in data["pool"]]
    cfg = bootstrap.FdrConfig(task=task, pool_size=len(pool), K=k, n_iter=n_iter,
                              eps_human=eps_human, eps_auto=eps_auto, alpha=alpha,
                              seed=seed, subtract_alpha=subtract_alpha)
    res = bootstrap.fdr_for_bootstrap(pool, cfg)
    _emit("stats fdr", asdict(cfg),
          {"fdr": res.fdr, "for": res.for_,
           "n_discoveries": res.n_discoveries,
           "n_false_discoveries": res.n_false_discoveries,
           "n_omissions": res.n_omissions,
           "n_false_omissions": res.n_false_omissions})


@stats_group.command("correlate")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help='JSON: {"per_topic_annotations": [[...]], "metric_scores": [...]}')
@click.option("--n-boot", default=1000, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--ci", default=0.95, show_default=True)
def stats_correlate(input_path, n_boot, seed, ci):
    """Spearman correlation of human vs automated scores with a bootstrap CI."""
    with open(input_path, encoding="utf-8") as f:
        data = json.load(f)
    point, lo, hi = bootstrap.bootstrap_spearman_ci(
        data["per_topic_annotations"], data["metric_scores"],
        n_boot=n_boot, seed=seed, ci=ci,
    )
    _emit("stats correlate",
          {"input": input_path, "n_boot": n_boot, "seed": seed, "ci": ci},
          {"spearman": point, "ci_low": lo, "ci_high": hi})


@stats_group.command("regress")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True),
              help='JSON: {"y": [...], "x": [...]}')
@click.option("--model", required=True,
              type=click.Choice(["logistic", "ordered-probit"]))
def stats_regress(input_path, model):
    """Regress human responses on an automated metric."""
    with open(input_path, encoding="utf-8") as f:
        data = json.load(f)
    if model == "logistic":
        fit = regress.logistic_regression(data["y"], data["x"])
        result = {"coef": fit.coef, "intercept": fit.intercept,
                  "coef_se": fit.coef_se, "coef_ci": list(fit.coef_ci),
                  "n_iter": fit.n_iter}
    else:
        fit = regress.ordered_probit(data["y"], data["x"])
        result = {"coef": fit.coef, "cutpoints": list(fit.cutpoints),
                  "coef_se": fit.coef_se, "coef_ci": list(fit.coef_ci),
                  "n_iter": fit.n_iter}
    _emit("stats regress", {"input": input_path, "model": model}, result)


# --------------------------------------------------------------------------
# pipeline + serve


@cli.group("pipeline")
def pipeline_group():
    """End-to-end cached pipeline runs."""


@pipeline_group.command("run")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def pipeline_run(config_path, out_dir):
    """Run preprocess -> count -> train -> select -> score -> survey-gen."""
    cfg = pipeline.PipelineConfig.from_yaml(config_path)
    manifest = pipeline.run_pipeline(cfg, out_dir)
    _emit("pipeline run", {"config": config_path, "out": out_dir},
          {"stages": {name: {"cached": s["cached"], "artifacts": s["artifacts"]}
                      for name, s in manifest["stages"].items()},
           "artifacts": manifest["artifacts"]})


@cli.command("serve")
@click.option("--items", "items_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--fraction", default=survey.DEFAULT_ITEM_FRACTION, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
def serve(items_path, log_path, fraction, seed, host, port):
    """Serve survey items over HTTP and collect responses."""
    import uvicorn

    from .service import SurveyStore, create_app

    store = SurveyStore(survey.read_items_jsonl(items_path), log_path,
                        fraction=fraction, seed=seed)
    uvicorn.run(create_app(store), host=host, port=port)


def main(argv=None) -> int:
    """Entry point with the stable exit-code contract."""
    try:
        cli.main(args=argv, standalone_mode=False)
    except click.exceptions.Exit as exc:  # --help and friends
        return int(exc.exit_code)
    except click.UsageError as exc:
        exc.show()
        return 1
    except click.ClickException as exc:
        exc.show()
        return 2
    except click.exceptions.Abort:
        return 2
    except ValueError as exc:  # domain validation errors
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # noqa: BLE001 - boundary
        click.echo(f"runtime failure: {type(exc).__name__}: {exc}", err=True)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
