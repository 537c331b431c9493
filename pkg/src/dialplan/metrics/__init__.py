"""Automatic evaluation metrics plus annotator-agreement kappa."""

from dialplan.metrics.planning import action_topic_f1, bigram_f1
from dialplan.metrics.generation import (
    bleu_n,
    dist_n,
    goal_success,
    knowledge_f1,
    perplexity,
    perplexity_from_nll,
    word_f1,
)
from dialplan.metrics.agreement import fleiss_kappa
from dialplan.metrics.report import MetricReport, format_report_table

__all__ = [
    "MetricReport",
    "action_topic_f1",
    "bigram_f1",
    "bleu_n",
    "dist_n",
    "fleiss_kappa",
    "format_report_table",
    "goal_success",
    "knowledge_f1",
    "perplexity",
    "perplexity_from_nll",
    "word_f1",
]
