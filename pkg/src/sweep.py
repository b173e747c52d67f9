"""
Experiment sweep: model family × n-gram range × PCA on/off, plus the
decision tree with/without AdaBoost pair.

TF-IDF is fitted once per n-gram range and PCA once per range, both on the
train subset; cells then run on a bounded thread pool and are assembled in
grid order, so every output file is byte-identical across runs with the same
config and seed.
"""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass, field, fields, is_dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from .classifiers import FeaturePipeline, MultiLabelModel, get_family, label_matrix, save_multilabel, save_pipeline
from .classifiers.multilabel import train_classifiers
from .corpus import DEFAULT_RATIOS, DatasetSchema, DatasetSplit, RawRecord, load_dataset, preprocess, stratified_split, write_split_manifest
from .decomp import PcaConfig, fit_pca, project_many
from .evaluation import MODES, MetricsReport, evaluate, export_confusion, results_table, summary_table
from .features import TfidfConfig, fit_tfidf, transform_many
from .utils.config import ConfigError, ExperimentConfig, config_hash, parse_range
from .utils.documents import write_document, write_table
from .utils.logging_utils import get_logger, log_scope
from .utils.timer import Timer, format_summary

logger = get_logger("sweep")

NGRAM_NAMES = {1: "Uni", 2: "Bi", 3: "Tri"}
FAMILY_NAMES = {
    "svm": "Linear SVM",
    "knn": "KNN",
    "forest": "Random Forest",
    "tree": "Decision Tree",
    "adaboost": "Decision Tree",
    "constant": "Constant",
}
PCA_MODES = {"off": (False,), "on": (True,), "both": (True, False)}


def ngram_label(ngram: tuple[int, int]) -> str:
    low, high = ngram
    if low == high:
        return f"{NGRAM_NAMES[low]}-gram"
    return f"{low}-{high}-gram"


@dataclass(frozen=True)
class Cell:
    family: str
    ngram: tuple[int, int]
    pca: bool

    @property
    def cell_id(self) -> str:
        return f"{self.family}-ng{self.ngram[0]}{self.ngram[1]}-{'pca' if self.pca else 'raw'}"

    @property
    def column(self) -> str:
        return ngram_label(self.ngram) + (" (PCA)" if self.pca else "")


@dataclass(frozen=True)
class SweepConfig:
    dataset_path: Path
    schema: DatasetSchema = field(default_factory=DatasetSchema)
    seed: int = 0
    split_seed: int = 0
    ratios: tuple[float, float, float] = DEFAULT_RATIOS
    ngram_ranges: tuple[tuple[int, int], ...] = ((1, 1), (2, 2), (3, 3))
    tfidf: TfidfConfig = field(default_factory=TfidfConfig)
    pca_modes: tuple[bool, ...] = (True, False)
    pca: PcaConfig = field(default_factory=PcaConfig)
    families: tuple[str, ...] = ("svm", "knn", "forest")
    family_options: Mapping[str, Mapping[str, tuple[str, ...]]] = field(default_factory=dict)
    boosting: bool = True
    boosting_ngram: tuple[int, int] = (1, 1)
    metric: str = "macro"
    strict: bool = False
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if not self.ngram_ranges or not self.pca_modes or not (self.families or self.boosting):
            raise ConfigError("Sweep grid is empty: need n-gram ranges, a PCA mode and at least one model")
        for family in self.families:
            get_family(family)
        if self.metric not in MODES:
            raise ConfigError(f"models.metric must be one of {MODES}, got {self.metric!r}")

    @classmethod
    def from_config(
        cls,
        config: ExperimentConfig,
        *,
        dataset_path: str | Path | None = None,
        seed: int | None = None,
        strict: bool | None = None,
    ) -> "SweepConfig":
        """`seed` (the --seed flag) replaces run.seed; a [split] or [<family>] seed still wins in its section."""
        run_seed = seed if seed is not None else config.get_int("run", "seed", 0)
        path = dataset_path or config.get_str("dataset", "path")
        if path is None:
            raise ConfigError("dataset.path is not set (config [dataset] path or --data)")
        path = Path(path)
        if not path.is_absolute() and config.source is not None and dataset_path is None:
            path = config.source.parent / path

        listed = config.get_list("split", "ratios", [str(r) for r in DEFAULT_RATIOS])
        try:
            ratios = tuple(float(r) for r in listed)
        except ValueError as exc:
            raise ConfigError(f"split.ratios: expected three numbers, got {listed}") from exc

        defaults = TfidfConfig()
        tfidf = TfidfConfig(
            min_df=config.get_int("features", "min_df", defaults.min_df),
            max_features=_optional_int(config, "features", "max_features"),
            normalize=config.get_bool("features", "normalize", defaults.normalize),
            lowercase=config.get_bool("features", "lowercase", defaults.lowercase),
        )
        ranges = tuple(
            _parse_ngram(item) for item in config.get_list("features", "ngram_ranges", ("1-1", "2-2", "3-3"))
        )

        pca_mode = (config.get_str("pca", "mode", "both") or "both").lower()
        if pca_mode not in PCA_MODES:
            raise ConfigError(f"pca.mode must be one of {sorted(PCA_MODES)}, got {pca_mode!r}")
        pca_defaults = PcaConfig()
        pca = PcaConfig(
            n_components=_optional_int(config, "pca", "n_components"),
            variance_threshold=config.get_float("pca", "variance_threshold", pca_defaults.variance_threshold),
            max_components=config.get_int("pca", "max_components", pca_defaults.max_components),
            dense_max_dim=config.get_int("pca", "dense_max_dim", pca_defaults.dense_max_dim),
            tol=config.get_float("pca", "tol", pca_defaults.tol),
            max_iter=config.get_int("pca", "max_iter", pca_defaults.max_iter),
            seed=config.get_int("pca", "seed", run_seed),
        )

        families = tuple(config.get_list("models", "families", ("svm", "knn", "forest")))
        boosting = config.get_bool("models", "boosting", True)
        involved = set(families) | ({"tree", "adaboost"} if boosting else set())
        options = {family: family_options(config, family, run_seed) for family in sorted(involved)}

        return cls(
            dataset_path=path,
            schema=DatasetSchema.from_config(config),
            seed=run_seed,
            split_seed=config.get_int("split", "seed", run_seed),
            ratios=ratios,  # type: ignore[arg-type]
            ngram_ranges=ranges,
            tfidf=tfidf,
            pca_modes=PCA_MODES[pca_mode],
            pca=pca,
            families=families,
            family_options=options,
            boosting=boosting,
            boosting_ngram=_parse_ngram(config.get_str("models", "boosting_ngram", "1-1")),
            metric=(config.get_str("models", "metric", "macro") or "macro").lower(),
            strict=strict if strict is not None else config.get_bool("run", "strict", False),
            n_jobs=config.get_int("run", "n_jobs", 1),
        )

    def cells(self) -> list[Cell]:
        cells = [
            Cell(family, ngram, pca)
            for family in self.families
            for ngram in self.ngram_ranges
            for pca in self.pca_modes
        ]
        if self.boosting:
            cells += [Cell("adaboost", self.boosting_ngram, False), Cell("tree", self.boosting_ngram, False)]
        unique: dict[str, Cell] = {}
        for cell in cells:
            unique.setdefault(cell.cell_id, cell)
        return list(unique.values())

    def effective(self) -> dict:
        """Defaults-merged settings that determine the outputs (n_jobs excluded)."""
        return {
            "dataset": {"path": self.dataset_path.as_posix(), **self.schema.as_dict()},
            "seed": self.seed,
            "split": {"seed": self.split_seed, "ratios": list(self.ratios)},
            "features": {**self.tfidf.as_dict(), "ngram_ranges": [list(r) for r in self.ngram_ranges]},
            "pca": {**self.pca.as_dict(), "modes": list(self.pca_modes)},
            "models": {
                "families": list(self.families),
                "boosting": self.boosting,
                "boosting_ngram": list(self.boosting_ngram),
                "metric": self.metric,
                "options": {f: {k: list(v) for k, v in sorted(opts.items())} for f, opts in sorted(self.family_options.items())},
            },
            "strict": self.strict,
        }

    @property
    def config_hash(self) -> str:
        return config_hash(self.effective())


def _optional_int(config: ExperimentConfig, section: str, key: str) -> int | None:
    value = config.get_str(section, key)
    if value is None or value.lower() == "none":
        return None
    return config.get_int(section, key)


def _parse_ngram(value: str | None) -> tuple[int, int]:
    low, high = parse_range(value or "1-1", "ngram range")
    if not 1 <= low <= high <= 3:
        raise ConfigError(f"n-gram range must satisfy 1 <= low <= high <= 3, got {value!r}")
    return low, high


def family_options(config: ExperimentConfig, family: str, run_seed: int) -> dict[str, tuple[str, ...]]:
    """[<family>] section as option → candidate values; comma lists become a grid."""
    section = config.sections.get(family, {})
    options = {
        key: tuple(item.strip() for item in value.split(",") if item.strip())
        for key, value in section.items()
        if value.strip()
    }
    if "seed" in {f.name for f in fields(get_family(family).config_cls)} and "seed" not in options:
        options["seed"] = (str(run_seed),)
    return options


def option_grid(options: Mapping[str, Sequence[str]]) -> list[dict[str, str]]:
    """Cartesian product in sorted-key order; the first candidate is the all-first-values one."""
    keys = sorted(options)
    return [dict(zip(keys, values)) for values in itertools.product(*(options[k] for k in keys))]


@dataclass
class FeatureSet:
    pipeline: FeaturePipeline | None
    matrices: dict[str, Any]  # subset → feature matrix
    error: str | None = None


def _failed(exc: Exception) -> FeatureSet:
    return FeatureSet(pipeline=None, matrices={}, error=f"{type(exc).__name__}: {exc}")


@dataclass
class SweepResult:
    config: SweepConfig
    split: DatasetSplit
    cells: list[dict]
    out_dir: Path
    files: dict[str, Path]


def _plain(config) -> dict:
    return asdict(config) if is_dataclass(config) else dict(config)


def build_features(
    config: SweepConfig,
    documents: Mapping[str, list[str]],
    needed: Sequence[tuple[tuple[int, int], bool]],
) -> dict[tuple[tuple[int, int], bool], FeatureSet]:
    """
    Fits TF-IDF (and PCA) on train for every requested (ngram, pca) space.

    A space whose fit fails is returned with `error` set instead of raising;
    every cell on that space is then reported as failed.
    """
    out: dict[tuple[tuple[int, int], bool], FeatureSet] = {}
    for ngram in dict.fromkeys(n for n, _ in needed):
        tfidf_config = TfidfConfig(
            ngram_range=ngram,
            min_df=config.tfidf.min_df,
            max_features=config.tfidf.max_features,
            normalize=config.tfidf.normalize,
            lowercase=config.tfidf.lowercase,
        )
        try:
            with log_scope(logger, f"features {ngram_label(ngram)}"):
                tfidf = fit_tfidf(documents["train"], tfidf_config)
                raw = {subset: transform_many(tfidf, docs) for subset, docs in documents.items()}
        except Exception as exc:
            for pca in (False, True):
                if (ngram, pca) in needed:
                    out[(ngram, pca)] = _failed(exc)
            continue
        if (ngram, False) in needed:
            out[(ngram, False)] = FeatureSet(FeaturePipeline(tfidf=tfidf), raw)
        if (ngram, True) in needed:
            try:
                with log_scope(logger, f"pca {ngram_label(ngram)}"):
                    pca_model = fit_pca(raw["train"], config=config.pca)
                    projected = {subset: project_many(pca_model, X) for subset, X in raw.items()}
            except Exception as exc:
                out[(ngram, True)] = _failed(exc)
            else:
                out[(ngram, True)] = FeatureSet(FeaturePipeline(tfidf=tfidf, pca=pca_model), projected)
    return out


def _run_cell(
    cell: Cell,
    features: FeatureSet,
    labels: Mapping[str, np.ndarray],
    config: SweepConfig,
    out_dir: Path,
) -> dict:
    timer = Timer().start()
    entry: dict[str, Any] = {
        "cell": cell.cell_id,
        "family": cell.family,
        "ngram": list(cell.ngram),
        "pca": cell.pca,
        "adaboost": cell.family == "adaboost",
        "seed": config.seed,
        "pipeline": features.pipeline.describe() if features.pipeline is not None else None,
    }
    if features.error is not None:
        entry.update(status="error", error=features.error, value=None)
        logger.warning("cell %s skipped: feature space failed (%s)", cell.cell_id, features.error)
        return entry
    try:
        with log_scope(logger, f"cell {cell.cell_id}"):
            spec = get_family(cell.family)
            candidates = option_grid(config.family_options.get(cell.family, {}))
            tried = []
            best: tuple[float, MultiLabelModel, MetricsReport] | None = None
            for options in candidates:
                family_config = spec.make_config(options)
                with timer.step(f"train {options}" if len(candidates) > 1 else "train"):
                    classifiers, fallbacks = train_classifiers(features.matrices["train"], labels["train"], cell.family, family_config)
                model = MultiLabelModel(
                    pipeline=features.pipeline,
                    classifiers=classifiers,
                    family=cell.family,
                    family_config=_plain(family_config),
                    fallback_labels=fallbacks,
                )
                with timer.step("validate"):
                    report = evaluate(model.predict_features(features.matrices["validation"]), labels["validation"])
                score = report.metric(config.metric, "f1")
                tried.append({"options": _plain(family_config), "validation_f1": score})
                if best is None or score > best[0]:
                    best = (score, model, report)

            _, model, validation = best  # type: ignore[misc]
            with timer.step("test"):
                test = evaluate(model.predict_features(features.matrices["test"]), labels["test"])
            model_path = out_dir / "models" / f"{cell.cell_id}.json"
            save_multilabel(
                model,
                model_path,
                out_dir / "pipelines",
                write_pipeline=False,
                meta={"cell": cell.cell_id, "config_hash": config.config_hash, "seed": config.seed},
            )
            export_confusion(
                test,
                out_dir / "confusion" / f"{cell.cell_id}.csv",
                {"cell": cell.cell_id, "config_hash": config.config_hash, "partition": "test", "seed": config.seed},
            )
        entry.update(
            status="ok",
            error=None,
            options=model.family_config,
            candidates=tried,
            fallback_labels=list(model.fallback_labels),
            model={"path": model_path.relative_to(out_dir).as_posix()},
            validation=validation.to_payload(),
            test=test.to_payload(),
            value=test.metric(config.metric, "f1"),
        )
    except Exception as exc:  # a failed cell is reported, the sweep goes on
        entry.update(status="error", error=f"{type(exc).__name__}: {exc}", value=None)
    logger.info("cell %s: %s\n%s", cell.cell_id, entry["status"], format_summary(timer.summary()))
    return entry


def run_sweep(config: SweepConfig, out_dir: str | Path) -> SweepResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.config_hash
    meta = {"config_hash": digest, "seed": config.seed, "split_seed": config.split_seed}
    timer = Timer().start()

    with timer.step("load"):
        records, rejected = load_dataset(config.dataset_path, config.schema, strict=config.strict)
    if rejected:
        logger.warning("%d row(s) rejected while loading %s", len(rejected), config.dataset_path)

    with timer.step("split"):
        split = stratified_split(records, config.ratios, config.split_seed)
        write_split_manifest(split, out / "split.json", {"config_hash": digest})
        subsets: dict[str, list[RawRecord]] = {name: split.select(records, name) for name in ("train", "validation", "test")}
        documents = {name: [preprocess(r.text) for r in rs] for name, rs in subsets.items()}
        labels = {name: label_matrix(rs) for name, rs in subsets.items()}

    cells = config.cells()
    with timer.step("features"):
        features = build_features(config, documents, [(c.ngram, c.pca) for c in cells])
        for feature_set in features.values():
            if feature_set.pipeline is not None:
                save_pipeline(feature_set.pipeline, out / "pipelines")

    with timer.step("cells"):
        entries = Parallel(n_jobs=config.n_jobs, prefer="threads")(
            delayed(_run_cell)(cell, features[(cell.ngram, cell.pca)], labels, config, out) for cell in cells
        )

    files = {"split": out / "split.json"}
    files.update(write_tables(config, cells, entries, out, meta))
    files["results"] = write_document(
        out / "results.json",
        "sweep-results",
        {
            "config_hash": digest,
            "config": config.effective(),
            "seed": config.seed,
            "split": {
                "path": "split.json",
                "seed": split.seed,
                "sizes": {name: len(ids) for name, ids in split.subsets().items()},
            },
            "rejected_rows": len(rejected),
            "metric": f"{config.metric} f1",
            "cells": entries,
        },
    )
    failed = [e["cell"] for e in entries if e["status"] != "ok"]
    if failed:
        logger.warning("%d cell(s) failed: %s", len(failed), ", ".join(failed))
    logger.info("Sweep finished (%d cells) in %s\n%s", len(entries), out, format_summary(timer.summary()))
    return SweepResult(config=config, split=split, cells=entries, out_dir=out, files=files)


def write_tables(config: SweepConfig, cells: Sequence[Cell], entries: Sequence[dict], out: Path, meta: Mapping[str, Any]) -> dict[str, Path]:
    metric_label = f"{config.metric} f1"
    by_id = {e["cell"]: e for e in entries}
    files: dict[str, Path] = {}
    table_meta = {**meta, "metric": metric_label, "partition": "test"}

    if config.families:
        rows = [FAMILY_NAMES.get(f, f) for f in config.families]
        columns = [Cell("", ngram, pca).column for ngram in config.ngram_ranges for pca in config.pca_modes]
        grid_cells = [
            {"row": FAMILY_NAMES.get(c.family, c.family), "column": c.column, "value": by_id[c.cell_id]["value"]}
            for c in cells
            if c.family in config.families and c.ngram in config.ngram_ranges
        ]
        files["table_ngram"] = write_table(out / "table_ngram.csv", results_table(grid_cells, rows, columns), table_meta)

    if config.boosting:
        boost_cells = [
            {"row": "With AdaBoost" if c.family == "adaboost" else "Without AdaBoost", "column": metric_label, "value": by_id[c.cell_id]["value"]}
            for c in cells
            if c.family in ("tree", "adaboost") and c.ngram == config.boosting_ngram and not c.pca
        ]
        files["table_adaboost"] = write_table(
            out / "table_adaboost.csv",
            results_table(boost_cells, ["With AdaBoost", "Without AdaBoost"], [metric_label], row_header="adaboost"),
            {**table_meta, "ngram": ngram_label(config.boosting_ngram)},
        )

    summary = [
        {
            "model": FAMILY_NAMES.get(c.family, c.family),
            "ngram": ngram_label(c.ngram),
            "pca": c.pca,
            "adaboost": c.family == "adaboost",
            "value": by_id[c.cell_id]["value"],
        }
        for c in cells
    ]
    files["table_summary"] = write_table(out / "table_summary.csv", summary_table(summary, metric_label), table_meta)
    return files


__all__ = [
    "Cell",
    "SweepConfig",
    "SweepResult",
    "build_features",
    "family_options",
    "ngram_label",
    "option_grid",
    "run_sweep",
    "write_tables",
]
