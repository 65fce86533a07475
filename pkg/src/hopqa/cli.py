"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from hopqa.classify import ClassifierModel, TrainingConfig, load_training_data, train
from hopqa.config import Config
from hopqa.errors import HopQAError
from hopqa.evaluate import ConceptTable, evaluate_run, format_report
from hopqa.model import Question, serialize_result
from hopqa.pipeline import answer_question, make_backends, run_batch

log = logging.getLogger("hopqa")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON config file")
    p.add_argument("--mode", choices=["live", "record", "replay"], help="backend mode (overrides config)")
    p.add_argument("--record", dest="mode", action="store_const", const="record", help="shorthand for --mode record")
    p.add_argument("--replay", dest="mode", action="store_const", const="replay", help="shorthand for --mode replay")
    p.add_argument("--transcript", type=Path, help="transcript JSONL for record/replay")
    p.add_argument("--classifier", type=Path, help="trained classifier JSON (overrides config)")
    p.add_argument("--workers", type=int, help="worker threads for batch runs")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="hopqa", description="Multi-hop retrieval-augmented question answering")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("answer", parents=[common], help="answer one question")
    p.add_argument("--question", required=True)
    p.add_argument("--id", default="q0")

    p = sub.add_parser("batch", parents=[common], help="answer a JSONL file of questions")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", dest="output", required=True, type=Path)

    p = sub.add_parser("train-classifier", parents=[common], help="train the direct/sequential classifier")
    p.add_argument("--data", required=True, type=Path, help='JSONL of {"text", "label"}')
    p.add_argument("--model", required=True, type=Path, help="output model JSON")
    p.add_argument("--trees", type=int, default=100)
    p.add_argument("--depth", type=int, default=6)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--include-raw-features", action="store_true")

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against gold answers")
    p.add_argument("--pred", required=True, type=Path)
    p.add_argument("--gold", required=True, type=Path)
    p.add_argument("--concepts", type=Path, help="concept synonym table JSONL")
    p.add_argument("--report", type=Path, help="also write the report as JSON")
    p.add_argument("--run", default="1", help="run label for the table")
    return parser


def _config(args) -> Config:
    config = Config.load(args.config) if args.config else Config()
    changes = {}
    if args.mode:
        changes["mode"] = args.mode
    if args.transcript:
        changes["transcript_path"] = str(args.transcript)
    if args.classifier:
        changes["classifier_path"] = str(args.classifier)
    if args.workers:
        changes["workers"] = args.workers
    return config.replace(**changes) if changes else config


def _classifier(config: Config) -> ClassifierModel:
    if not config.classifier_path:
        raise UsageError("a trained classifier is required (--classifier or classifier_path in config)")
    return ClassifierModel.load(config.classifier_path)


def _run(args) -> int:
    if args.command == "train-classifier":
        cfg = TrainingConfig(
            n_estimators=args.trees,
            max_depth=args.depth,
            learning_rate=args.learning_rate,
            n_folds=args.folds,
            seed=args.seed,
            include_raw_features=args.include_raw_features,
        )
        if args.config:
            cfg = TrainingConfig(**{**vars(cfg), "embedding_dim": Config.load(args.config).embedding_dim})
        model = train(load_training_data(args.data), cfg)
        model.save(args.model)
        print(f"saved classifier to {args.model} (meta weights {model.meta_weights}, bias {model.meta_bias:.4f})")
        return 0

    if args.command == "evaluate":
        table = ConceptTable.load(args.concepts) if args.concepts else None
        report = evaluate_run(args.pred, args.gold, table)
        print(format_report(report, run=args.run))
        if args.report:
            args.report.write_text(json.dumps(report.to_dict(), indent=2), encoding="utf-8")
        return 0

    config = _config(args)
    classifier = _classifier(config)
    backends = make_backends(config)

    if args.command == "answer":
        result = answer_question(config, backends, classifier, Question(args.id, args.question))
        print(serialize_result(result))
        return 0 if result.answered else 2

    summary = run_batch(config, args.input, args.output, backends, classifier)
    print(json.dumps(summary.to_dict()))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        logging.basicConfig(
            level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
        )
        return _run(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (HopQAError, OSError, ValueError) as exc:
        print(f"hopqa: {exc}", file=sys.stderr)
        return 2
