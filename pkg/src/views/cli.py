"""Command-line surface: `pyedde <command> ...`.

Exit codes: 0 success, 1 at least one failed compare sub-run, 2 config or input error,
3 numerical divergence.
"""

import argparse
import logging
from pathlib import Path
from typing import Optional, Sequence

from src import __version__
from src.configs.loader import load_run_config
from src.configs.logging_config import configure_logging
from src.controllers.run_controller import RunController
from src.models.errors import TrainingDivergenceError, ValidationError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_INPUT = 2
EXIT_DIVERGED = 3


def _controller(config_path, overrides, output_dir=None) -> RunController:
    config = load_run_config(config_path, overrides)
    controller = RunController(config, output_dir)
    configure_logging(config['run']['log_level'], controller.output_dir / 'run.log')
    return controller


def cmd_train(config_path, overrides: Sequence[str] = ()) -> int:
    controller = _controller(config_path, overrides)
    ens, evaluation = controller.train()
    report = evaluation.report
    print(f"Trained {ens.method}: {len(ens.members)} members, skipped rounds {ens.skipped_rounds}")
    print(f"Ensemble accuracy: {report.ensemble_accuracy:.4f}")
    print(f"Average accuracy: {report.average_accuracy:.4f}")
    print(f"Increased accuracy: {report.increased_accuracy:.4f}")
    return EXIT_OK


def cmd_beta_search(config_path, overrides: Sequence[str] = ()) -> int:
    result = _controller(config_path, overrides).beta_search()
    print(f"{result.beta:g}")
    return EXIT_OK


def cmd_evaluate(ensemble_dir, data_path, label_column: str = "label", output_dir=None,
                 overrides: Sequence[str] = ()) -> int:
    controller = _controller(None, overrides, output_dir or ensemble_dir)
    _, evaluation = controller.evaluate(ensemble_dir, data_path, label_column)
    report = evaluation.report
    print(f"Ensemble accuracy: {report.ensemble_accuracy:.4f}")
    print(f"Average accuracy: {report.average_accuracy:.4f}")
    print(f"Increased accuracy: {report.increased_accuracy:.4f}")
    return EXIT_OK


def cmd_diversity(ensemble_dir, data_path, label_column: str = "label", output_dir=None,
                  overrides: Sequence[str] = ()) -> int:
    controller = _controller(None, overrides, output_dir or ensemble_dir)
    report = controller.diversity(ensemble_dir, data_path, label_column)
    print(f"div_h: {'n/a' if report.div_h is None else format(report.div_h, '.6f')}")
    return EXIT_OK


def cmd_compare(config_path, overrides: Sequence[str] = ()) -> int:
    """Exit 1 as soon as one compared method fails, 0 only when all of them succeed."""
    rows, failures = _controller(config_path, overrides).compare()
    for row in rows:
        if row['status'] == 'ok':
            print(f"{row['method']}: ensemble accuracy {row['ensemble_accuracy']:.4f} "
                  f"after {row['total_epochs']} epochs")
        else:
            print(f"{row['method']}: failed ({row['error']})")
    return EXIT_PARTIAL if failures else EXIT_OK


def cmd_sweep_gamma(config_path, overrides: Sequence[str] = ()) -> int:
    rows = _controller(config_path, overrides).sweep_gamma()
    for row in rows:
        print(f"gamma={row['gamma']:g}: ensemble accuracy {row['ensemble_accuracy']:.4f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pyedde", description="Diversity-driven neural network ensembles")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def with_config(name, help_text):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("--config", type=Path, default=None, help="INI config file")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                         help="Override one config value (repeatable)")
        return sub

    with_config("train", "Train an ensemble and write its reports")
    with_config("beta-search", "Search the transfer proportion beta")
    with_config("compare", "Compare methods under one epoch budget")
    with_config("sweep-gamma", "Train for every gamma of [sweep] gammas")
    for name, help_text in (("evaluate", "Evaluate a saved ensemble"),
                            ("diversity", "Similarity matrix and diversity of a saved ensemble")):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument("ensemble_dir", type=Path, help="Saved ensemble directory")
        sub.add_argument("data", type=Path, help="CSV file with the evaluation data")
        sub.add_argument("--label-column", default="label", help="Name of the label column")
        sub.add_argument("--output-dir", type=Path, default=None,
                         help="Where to write reports (default: the ensemble directory)")
        sub.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                         help="Override one config value, e.g. run.log_level=DEBUG")
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "train":
        return cmd_train(args.config, args.overrides)
    if args.command == "beta-search":
        return cmd_beta_search(args.config, args.overrides)
    if args.command == "compare":
        return cmd_compare(args.config, args.overrides)
    if args.command == "sweep-gamma":
        return cmd_sweep_gamma(args.config, args.overrides)
    if args.command == "evaluate":
        return cmd_evaluate(args.ensemble_dir, args.data, args.label_column, args.output_dir, args.overrides)
    return cmd_diversity(args.ensemble_dir, args.data, args.label_column, args.output_dir, args.overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except ValidationError as e:
        logger.error(str(e))
        print(f"error: {e}")
        return EXIT_INPUT
    except TrainingDivergenceError as e:
        logger.error(str(e))
        print(f"diverged: {e}")
        return EXIT_DIVERGED
