"""
Command-line front end.

    python -m src.cli stats   --config configs/sweep_default.cfg --out artifacts/stats
    python -m src.cli split   --config configs/sweep_default.cfg --out artifacts/split
    python -m src.cli train   --config configs/sweep_default.cfg --family svm --ngram 1-1 --out artifacts/run
    python -m src.cli evaluate --config configs/sweep_default.cfg --model artifacts/run/models/svm-ng11-raw.json
    python -m src.cli explain --model artifacts/run/models/svm-ng11-raw.json --text "..." --label anger
    python -m src.cli sweep   --config configs/sweep_default.cfg --out artifacts/sweep

Exit codes: 0 ok, 1 usage error, 2 data error (missing file, bad input), 3 internal error.
Results go to stdout, diagnostics to stderr and the run log.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable

from .classifiers import load_multilabel, save_multilabel, train_multilabel
from .corpus import (
    EMOTIONS,
    DatasetSplit,
    RawRecord,
    compute_split_profile,
    compute_stats,
    load_dataset,
    read_split_manifest,
    stratified_split,
    write_split_manifest,
)
from .evaluation import evaluate, export_confusion
from .explain import LimeConfig, explain_instance, render_explanation, save_explanation
from .sweep import Cell, SweepConfig, family_options, option_grid, run_sweep
from .utils.config import ExperimentConfig, config_hash, load_config, parse_range
from .utils.documents import write_document
from .utils.logging_utils import get_logger, setup_logging

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

logger = get_logger("cli")


class UsageError(Exception):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="Experiment config file (KEY=VALUE with [sections]).")
    common.add_argument("--seed", type=int, default=None, help="Overrides run.seed (split, models, LIME).")
    common.add_argument("--out", type=Path, default=Path("artifacts") / "run", help="Output directory.")
    common.add_argument("--strict", action="store_true", help="Abort on malformed label values instead of skipping rows.")
    common.add_argument("--data", type=Path, default=None, help="Dataset file; overrides [dataset] path.")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default LOG_LEVEL or INFO).")
    return common


def _build_arg_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = _Parser(description="Multi-label emotion classification toolkit for Bangla text.")
    verbs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    stats = verbs.add_parser("stats", parents=[common], help="Dataset statistics report.")
    stats.add_argument("--top-n", type=int, default=50, help="Most frequent terms to report.")

    verbs.add_parser("split", parents=[common], help="Stratified train/validation/test split manifest.")

    train = verbs.add_parser("train", parents=[common], help="Train one multi-label model on the train subset.")
    train.add_argument("--family", default="svm", help="svm, knn, tree, forest or adaboost.")
    train.add_argument("--ngram", default="1-1", help="N-gram range, e.g. 1-1 or 1-3.")
    train.add_argument("--pca", action="store_true", help="Reduce TF-IDF features with PCA.")
    train.add_argument("--split", type=Path, default=None, help="Existing split manifest (default: recompute).")

    ev = verbs.add_parser("evaluate", parents=[common], help="Evaluate a model on validation and test.")
    ev.add_argument("--model", type=Path, required=True)
    ev.add_argument("--split", type=Path, default=None, help="Existing split manifest (default: recompute).")
    ev.add_argument("--subset-accuracy", action="store_true", help="Also report exact-match accuracy.")

    ex = verbs.add_parser("explain", parents=[common], help="LIME explanation of one text for one emotion.")
    ex.add_argument("--model", type=Path, required=True)
    ex.add_argument("--text", required=True)
    ex.add_argument("--label", required=True, choices=EMOTIONS)
    ex.add_argument("--num-samples", type=int, default=None)
    ex.add_argument("--num-features", type=int, default=None)
    ex.add_argument("--kernel-width", type=float, default=None)

    verbs.add_parser("sweep", parents=[common], help="Full experiment grid with result tables.")
    return parser


def _config(args: argparse.Namespace) -> ExperimentConfig:
    return load_config(args.config) if args.config else ExperimentConfig()


def _settings(args: argparse.Namespace, config: ExperimentConfig) -> SweepConfig:
    return SweepConfig.from_config(config, dataset_path=args.data, seed=args.seed, strict=args.strict or None)


def _records(settings: SweepConfig) -> list[RawRecord]:
    records, rejected = load_dataset(settings.dataset_path, settings.schema, strict=settings.strict)
    if rejected:
        logger.warning("%d row(s) rejected, first: row %d (%s)", len(rejected), rejected[0].row, rejected[0].reason)
    return records


def _split(args: argparse.Namespace, settings: SweepConfig, records: list[RawRecord]) -> DatasetSplit:
    if getattr(args, "split", None):
        return read_split_manifest(args.split)
    return stratified_split(records, settings.ratios, settings.split_seed)


def cmd_stats(args: argparse.Namespace) -> int:
    config = _config(args)
    settings = _settings(args, config)
    records, rejected = load_dataset(settings.dataset_path, settings.schema, strict=settings.strict)
    stats = compute_stats(records, top_n=args.top_n)
    path = write_document(
        args.out / "stats.json",
        "stats",
        {
            **stats.to_payload(),
            "dataset": settings.dataset_path.as_posix(),
            "config_hash": settings.config_hash,
            "rejected_rows": [{"row": r.row, "reason": r.reason} for r in rejected],
        },
    )
    print(f"records: {stats.record_count} (rejected {len(rejected)})")
    for label, count in zip(EMOTIONS, stats.per_label_counts):
        print(f"  {label:<9} {count}")
    print(f"multi-label fraction: {stats.multi_label_fraction:.4f}")
    print(f"report: {path}")
    return EXIT_OK


def cmd_split(args: argparse.Namespace) -> int:
    config = _config(args)
    settings = _settings(args, config)
    records = _records(settings)
    split = stratified_split(records, settings.ratios, settings.split_seed)
    path = write_split_manifest(
        split,
        args.out / "split.json",
        {"config_hash": settings.config_hash, "profile": compute_split_profile(records, split)},
    )
    for name, ids in split.subsets().items():
        print(f"{name:<10} {len(ids)}")
    print(f"manifest: {path}")
    return EXIT_OK


def cmd_train(args: argparse.Namespace) -> int:
    config = _config(args)
    settings = _settings(args, config)
    ngram = parse_range(args.ngram, "--ngram")
    records = _records(settings)
    split = _split(args, settings, records)

    candidates = option_grid(family_options(config, args.family, settings.seed))
    if len(candidates) > 1:
        logger.warning("[%s] lists %d candidate settings; train uses the first, sweep selects on validation", args.family, len(candidates))
    model = train_multilabel(
        split.select(records, "train"),
        replace(settings.tfidf, ngram_range=ngram),
        args.family,
        candidates[0],
        pca_config=settings.pca if args.pca else None,
        n_jobs=settings.n_jobs,
    )
    path = save_multilabel(
        model,
        args.out / "models" / f"{Cell(args.family, ngram, args.pca).cell_id}.json",
        meta={"config_hash": settings.config_hash, "seed": settings.seed, "split_seed": split.seed},
    )
    print(f"model: {path}")
    if model.fallback_labels:
        print(f"constant fallback: {', '.join(model.fallback_labels)}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config(args)
    settings = _settings(args, config)
    model = load_multilabel(args.model)
    records = _records(settings)
    split = _split(args, settings, records)
    reports = {}
    for subset in ("validation", "test"):
        chosen = split.select(records, subset)
        predictions = model.predict_many([r.text for r in chosen])
        reports[subset] = evaluate(predictions, [r.labels for r in chosen], subset_accuracy=args.subset_accuracy)

    stem = args.model.stem
    path = write_document(
        args.out / f"metrics-{stem}.json",
        "evaluation",
        {
            "model": args.model.as_posix(),
            "config_hash": settings.config_hash,
            "split_seed": split.seed,
            **{subset: report.to_payload() for subset, report in reports.items()},
        },
    )
    export_confusion(
        reports["test"],
        args.out / f"confusion-{stem}.csv",
        {"config_hash": settings.config_hash, "model": stem, "partition": "test", "split_seed": split.seed},
    )
    for subset, report in reports.items():
        line = "  ".join(f"{mode} f1={report.metric(mode):.4f}" for mode in ("micro", "macro", "weighted"))
        print(f"{subset:<10} n={report.n_instances}  {line}")
    print(f"report: {path}")
    return EXIT_OK


def cmd_explain(args: argparse.Namespace) -> int:
    config = _config(args)
    seed = args.seed if args.seed is not None else config.get_int("run", "seed", 0)
    defaults = LimeConfig()
    lime = LimeConfig(
        num_samples=args.num_samples or config.get_int("lime", "num_samples", defaults.num_samples),
        num_features=args.num_features or config.get_int("lime", "num_features", defaults.num_features),
        kernel_width=args.kernel_width if args.kernel_width is not None else config.get_float("lime", "kernel_width", None),
        ridge_alpha=config.get_float("lime", "ridge_alpha", defaults.ridge_alpha),
        seed=config.get_int("lime", "seed", seed),
    )
    model = load_multilabel(args.model)
    explanation = explain_instance(model, args.text, args.label, lime)
    digest = config_hash({"config": config.as_dict(), "lime": lime.as_dict()})
    path = save_explanation(
        explanation,
        args.out / f"explanation-{args.label}.json",
        meta={"config_hash": digest, "model": args.model.as_posix()},
    )
    print(render_explanation(explanation))
    print(f"explanation: {path}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _config(args)
    settings = _settings(args, config)
    result = run_sweep(settings, args.out)
    table = result.files.get("table_ngram") or result.files["table_summary"]
    print(table.read_text(encoding="utf-8"), end="")
    failed = sum(1 for cell in result.cells if cell["status"] != "ok")
    print(f"cells: {len(result.cells)} ({failed} failed)  results: {result.files['results']}")
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace], int]] = {
    "stats": cmd_stats,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "sweep": cmd_sweep,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    setup_logging(level=args.log_level, install_excepthook=True)
    try:
        return COMMANDS[args.command](args)
    except (FileNotFoundError, ValueError) as exc:
        logger.debug("%s failed", args.command, exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        logger.exception("%s failed with an internal error", args.command)
        print("internal error; see the run log for the traceback", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
