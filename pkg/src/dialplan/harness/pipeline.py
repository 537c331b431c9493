"""Experiment pipeline stages behind the CLI commands."""

from __future__ import annotations

import json
from pathlib import Path

from dialplan.corpus.enrich import TripleGraph, enrich_knowledge
from dialplan.corpus.io import (
    CorpusVocabs,
    build_vocabs,
    load_corpus,
    load_graph,
    load_vocabs,
    save_vocabs,
    write_samples,
)
from dialplan.corpus.splits import load_splits, make_splits, save_splits
from dialplan.corpus.synthetic import generate_synthetic
from dialplan.corpus.types import (
    ActionTopicPair,
    DialogueSample,
    PlanPath,
    SplitSpec,
)
from dialplan.decoding.plan import PlanResult, plan
from dialplan.errors import DialplanError
from dialplan.harness.config import ExperimentConfig
from dialplan.metrics import (
    MetricReport,
    action_topic_f1,
    bigram_f1,
    bleu_n,
    dist_n,
    goal_success,
    knowledge_f1,
    perplexity,
)
from dialplan.metrics.generation import corpus_word_f1
from dialplan.corpus.labels import knowledge_pseudo_labels
from dialplan.planner.training import load_planner, save_planner, train_planner
from dialplan.responder.context import GenerationContext, build_context, strip_plan_section
from dialplan.responder.control import generate_controlled, generate_prompted
from dialplan.responder.training import load_responder, save_responder, train_responder
from dialplan.text import tokens_of


def run_synth(cfg: ExperimentConfig) -> Path:
    result = generate_synthetic(cfg.corpus, cfg.data_dir)
    return result.samples_path


def run_prepare(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Enrich knowledge from the graph, split, and write prepared data."""
    samples = load_corpus(cfg.data_dir / "samples.jsonl")
    graph = TripleGraph(load_graph(cfg.data_dir / "graph.jsonl"))
    enriched = [
        enrich_knowledge(
            s, graph, hops=cfg.enrich_hops, budget=cfg.enrich_budget,
            seed=cfg.seed * 131 + i,
        )
        for i, s in enumerate(samples)
    ]
    spec = make_splits(enriched, cfg.split_ratios, seed=cfg.seed)
    cfg.prepared_dir.mkdir(parents=True, exist_ok=True)
    samples_path = cfg.prepared_dir / "samples.jsonl"
    write_samples(enriched, samples_path)
    splits_path = cfg.prepared_dir / "splits.json"
    save_splits(spec, splits_path)
    save_vocabs(build_vocabs(enriched), cfg.prepared_dir)
    return samples_path, splits_path


def load_prepared(cfg: ExperimentConfig) -> tuple[list[DialogueSample], SplitSpec, CorpusVocabs]:
    samples = load_corpus(cfg.prepared_dir / "samples.jsonl")
    spec = load_splits(cfg.prepared_dir / "splits.json")
    vocabs = load_vocabs(cfg.prepared_dir)
    return samples, spec, vocabs


def split_samples(
    samples: list[DialogueSample], spec: SplitSpec, split: str
) -> list[DialogueSample]:
    ids = set(getattr(spec, split))
    return [s for s in samples if s.id in ids]


def run_train_planner(cfg: ExperimentConfig) -> Path:
    samples, spec, vocabs = load_prepared(cfg)
    train = split_samples(samples, spec, "train")
    model_cfg = cfg.effective_planner_config()
    out_dir = cfg.planner_ckpt_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    model, history = train_planner(
        train, vocabs, model_cfg, cfg.planner_train, log_path=out_dir / "train_log.jsonl"
    )
    save_planner(model, vocabs, out_dir, step=cfg.planner_train.train_steps)
    return out_dir


def run_train_responder(cfg: ExperimentConfig, with_plans: bool = True) -> Path:
    import dataclasses

    samples, spec, vocabs = load_prepared(cfg)
    train = split_samples(samples, spec, "train")
    r_cfg = dataclasses.replace(cfg.responder, use_plan_section=with_plans)
    out_dir = cfg.responder_ckpt_dir(with_plans)
    out_dir.mkdir(parents=True, exist_ok=True)
    lm, plan_model, _ = train_responder(
        train, vocabs, r_cfg, cfg.responder_train, log_path=out_dir / "train_log.jsonl"
    )
    save_responder(lm, plan_model, vocabs, out_dir, step=cfg.responder_train.train_steps)
    return out_dir


def run_plan(cfg: ExperimentConfig, split: str) -> Path:
    """Plan every sample of a split; writes line-delimited plan records."""
    samples, spec, vocabs = load_prepared(cfg)
    subset = split_samples(samples, spec, split)
    model, _ = load_planner(cfg.planner_ckpt_dir(), vocabs)
    decode_cfg = cfg.effective_decode_config()
    cfg.outputs_dir.mkdir(parents=True, exist_ok=True)
    tag = cfg.ablation.training_tag()
    suffix = "" if not tag else f"-{tag}"
    if cfg.ablation.no_constraints:
        suffix += "-no_constraints"
    if cfg.ablation.no_agreement and not tag:
        suffix += "-no_agreement"
    out_path = cfg.outputs_dir / f"plans-{split}{suffix}.jsonl"
    with out_path.open("w", encoding="utf-8") as fh:
        for sample in subset:
            result = plan(sample, model, decode_cfg)
            fh.write(json.dumps(result.as_record(), sort_keys=True) + "\n")
    return out_path


def load_plans(path: str | Path) -> dict[str, list[ActionTopicPair]]:
    plans: dict[str, list[ActionTopicPair]] = {}
    with Path(path).open(encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            plans[rec["sample_id"]] = [ActionTopicPair(a, t) for a, t in rec["plan"]]
    return plans


def run_generate(
    cfg: ExperimentConfig,
    split: str,
    variant: str,
    plans_path: str | Path | None = None,
) -> Path:
    """Generate utterances for a split using planned paths.

    variant: prompt | controlled | noplan. Planned paths come from the plans
    file when given, otherwise from re-planning with the loaded planner.
    """
    if variant not in ("prompt", "controlled", "noplan"):
        raise DialplanError(f"unknown variant {variant!r}")
    samples, spec, vocabs = load_prepared(cfg)
    subset = split_samples(samples, spec, split)
    lm, plan_model = load_responder(cfg.responder_ckpt_dir(variant != "noplan"), vocabs)

    plans: dict[str, list[ActionTopicPair]] = {}
    if variant != "noplan":
        if plans_path is None:
            plans_path = cfg.outputs_dir / f"plans-{split}.jsonl"
        if Path(plans_path).exists():
            plans = load_plans(plans_path)
        else:
            raise DialplanError(
                f"plans file {plans_path} not found; run the plan command first"
            )

    cfg.outputs_dir.mkdir(parents=True, exist_ok=True)
    out_path = cfg.outputs_dir / f"generations-{split}-{variant}.jsonl"
    with out_path.open("w", encoding="utf-8") as fh:
        for sample in subset:
            if variant == "noplan":
                plan_path = sample.gold_path  # placeholder; section stripped below
            else:
                pairs = plans.get(sample.id)
                plan_path = (
                    PlanPath(tuple(pairs), "forward")
                    if pairs
                    else PlanPath((sample.target.as_pair(),), "forward")
                )
            context = build_context(
                sample.knowledge,
                sample.history,
                plan_path,
                sample.profile,
                cfg.responder.max_context_len,
            )
            flags = {}
            if variant == "noplan":
                stripped = strip_plan_section(context)
                context = GenerationContext(stripped, context.truncated, ())
                result = generate_prompted(context, lm)
            elif variant == "prompt":
                result = generate_prompted(context, lm)
            else:
                result = generate_controlled(
                    context, list(context.plan_tokens), lm, plan_model, cfg.responder
                )
                flags = result.flags
            record = {
                "sample_id": sample.id,
                "plan_used": [[p.action, p.topic] for p in plan_path.pairs]
                if variant != "noplan"
                else [],
                "utterance": " ".join(result.tokens),
                "variant": variant,
                "flags": flags,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    return out_path


def neighbor_gold_labels(
    samples: list[DialogueSample],
) -> dict[str, list[ActionTopicPair]]:
    """sample id -> gold pairs of {previous, current, next} system turns."""
    by_dialogue: dict[str, list[DialogueSample]] = {}
    for s in samples:
        by_dialogue.setdefault(s.dialogue_id, []).append(s)
    labels: dict[str, list[ActionTopicPair]] = {}
    for group in by_dialogue.values():
        group.sort(key=lambda s: s.id)
        for i, s in enumerate(group):
            window = group[max(0, i - 1): i + 2]
            labels[s.id] = [g.gold_path.pairs[0] for g in window]
    return labels


def run_evaluate(
    cfg: ExperimentConfig,
    split: str,
    plans_path: str | Path | None = None,
    generations_path: str | Path | None = None,
) -> MetricReport:
    samples, spec, vocabs = load_prepared(cfg)
    subset = split_samples(samples, spec, split)
    by_id = {s.id: s for s in subset}
    report = MetricReport(split=split, seed=cfg.seed)

    if plans_path is None:
        candidate = cfg.outputs_dir / f"plans-{split}.jsonl"
        plans_path = candidate if candidate.exists() else None
    if plans_path is not None:
        plans = load_plans(plans_path)
        ordered = [s for s in subset if s.id in plans]
        pred = [plans[s.id][0] if plans[s.id] else None for s in ordered]
        gold = [s.gold_path.pairs[0] for s in ordered]
        action_f1, topic_f1 = action_topic_f1(pred, gold)
        neighbors = neighbor_gold_labels(samples)
        expanded = [neighbors[s.id] for s in ordered]
        action_bi, topic_bi = bigram_f1(pred, expanded)
        n = len(ordered)
        report.set("action_f1", action_f1, n)
        report.set("topic_f1", topic_f1, n)
        report.set("action_bi_f1", action_bi, n)
        report.set("topic_bi_f1", topic_bi, n)

    if generations_path is not None and Path(generations_path).exists():
        hyps, refs, labels, knowledge_sets = [], [], [], []
        goal_hyps, goal_topics = [], []
        with Path(generations_path).open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                sample = by_id.get(rec["sample_id"])
                if sample is None:
                    continue
                hyp = tokens_of(rec["utterance"])
                hyps.append(hyp)
                refs.append(sample.gold_utterance)
                labels.append(
                    knowledge_pseudo_labels(sample.gold_utterance, sample.knowledge)
                )
                knowledge_sets.append(sample.knowledge)
                if len(sample.gold_path) == 1:  # target turn
                    goal_hyps.append(hyp)
                    goal_topics.append(sample.target.topic)
        n = len(hyps)
        if n:
            report.set("word_f1", corpus_word_f1(hyps, refs), n)
            report.set("bleu1", bleu_n(hyps, refs, 1), n)
            report.set("bleu2", bleu_n(hyps, refs, 2), n)
            report.set("dist1", dist_n(hyps, 1), n)
            report.set("dist2", dist_n(hyps, 2), n)
            report.set("know_f1", knowledge_f1(hyps, labels, knowledge_sets), n)
        if goal_hyps:
            report.set("goal_succ", goal_success(goal_hyps, goal_topics), len(goal_hyps))

    ckpt = cfg.responder_ckpt_dir(True)
    if (ckpt / "lm.pt").exists() and subset:
        lm, _ = load_responder(ckpt, vocabs)
        report.set(
            "ppl", perplexity(lm, subset, vocabs.words, cfg.responder), len(subset)
        )

    report.validate()
    return report
