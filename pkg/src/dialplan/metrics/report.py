"""Structured metric reports and the aligned console table."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

METRIC_ORDER = (
    "action_f1",
    "action_bi_f1",
    "topic_f1",
    "topic_bi_f1",
    "word_f1",
    "bleu1",
    "bleu2",
    "dist1",
    "dist2",
    "know_f1",
    "goal_succ",
    "ppl",
)


@dataclass
class MetricReport:
    split: str
    seed: int
    scores: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    def set(self, name: str, value: float, count: int) -> None:
        self.scores[name] = float(value)
        self.counts[name] = int(count)

    def validate(self) -> None:
        for name, value in self.scores.items():
            if name == "ppl":
                if value < 1.0:
                    raise ValueError(f"perplexity {value} < 1")
            elif not (0.0 <= value <= 1.0):
                raise ValueError(f"metric {name}={value} outside [0,1]")

    def as_record(self) -> dict:
        return {
            "split": self.split,
            "seed": self.seed,
            "scores": self.scores,
            "counts": self.counts,
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(
            json.dumps(self.as_record(), indent=1, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "MetricReport":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        report = cls(split=data["split"], seed=data["seed"])
        report.scores = dict(data["scores"])
        report.counts = dict(data["counts"])
        return report


def format_report_table(report: MetricReport) -> str:
    lines = [f"split: {report.split}   seed: {report.seed}"]
    lines.append(f"{'metric':<14}{'value':>10}{'count':>8}")
    names = [m for m in METRIC_ORDER if m in report.scores]
    names += [m for m in sorted(report.scores) if m not in METRIC_ORDER]
    for name in names:
        value = report.scores[name]
        count = report.counts.get(name, 0)
        lines.append(f"{name:<14}{value:>10.4f}{count:>8}")
    return "\n".join(lines)
