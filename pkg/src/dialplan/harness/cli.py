"""Command-line entry point.

Commands: synth, prepare-data, train-planner, train-responder, plan,
generate, evaluate, serve. Exit codes: 0 success, 1 invariant violation or
pipeline error (diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from dialplan.errors import DialplanError
from dialplan.harness.config import AblationFlags, load_experiment_config
from dialplan.metrics.report import format_report_table


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="experiment config file (INI)", default=None)
    parser.add_argument(
        "--ablate",
        action="append",
        default=[],
        metavar="FLAG",
        help="ablation flag (repeatable): no_forward_decoder, no_backward_decoder, "
        "no_gap_loss, no_contrastive, no_constraints, no_agreement",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dialplan",
        description="Target-constrained bidirectional dialogue planning pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("synth", "generate the synthetic corpus and graph"),
        ("prepare-data", "enrich knowledge, build splits and vocabularies"),
        ("train-planner", "train the path planner"),
        ("train-responder", "train the responder LM and plan model"),
        ("plan", "decode plans for a split"),
        ("generate", "generate utterances for a split"),
        ("evaluate", "compute metrics for a split"),
        ("serve", "start the interactive evaluation service"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)
        if name in ("plan", "generate", "evaluate"):
            p.add_argument("--split", default="test_id",
                           choices=["train", "dev", "test_id", "test_ood"])
        if name == "generate":
            p.add_argument("--variant", default="prompt",
                           choices=["prompt", "controlled", "noplan"])
            p.add_argument("--plans", default=None, help="plans file to condition on")
        if name == "evaluate":
            p.add_argument("--plans", default=None, help="plans file to score")
            p.add_argument("--generations", default=None,
                           help="generations file to score")
            p.add_argument("--out", default=None, help="report output path")
        if name == "train-responder":
            p.add_argument("--no-plans", action="store_true",
                           help="train the no-plan baseline LM")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        cfg = load_experiment_config(args.config)
        if args.ablate:
            cfg.ablation = AblationFlags.from_names(args.ablate)
            cfg.ablation.validate()

        from dialplan.harness import pipeline

        if args.command == "synth":
            path = pipeline.run_synth(cfg)
            print(f"wrote {path}")
        elif args.command == "prepare-data":
            samples_path, splits_path = pipeline.run_prepare(cfg)
            print(f"wrote {samples_path}\nwrote {splits_path}")
        elif args.command == "train-planner":
            out = pipeline.run_train_planner(cfg)
            print(f"checkpoint at {out}")
        elif args.command == "train-responder":
            out = pipeline.run_train_responder(cfg, with_plans=not args.no_plans)
            print(f"checkpoint at {out}")
        elif args.command == "plan":
            out = pipeline.run_plan(cfg, args.split)
            print(f"wrote {out}")
        elif args.command == "generate":
            out = pipeline.run_generate(cfg, args.split, args.variant, args.plans)
            print(f"wrote {out}")
        elif args.command == "evaluate":
            report = pipeline.run_evaluate(cfg, args.split, args.plans, args.generations)
            out = args.out or (cfg.outputs_dir / f"report-{args.split}.json")
            report.save(out)
            print(format_report_table(report))
            print(f"wrote {out}")
        elif args.command == "serve":
            from dialplan.harness.service import serve

            serve(cfg)
    except DialplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
