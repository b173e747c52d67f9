"""
Binary relevance: six independent one-vs-rest classifiers over one shared
feature pipeline (preprocess → TF-IDF → optional PCA).
"""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, is_dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from joblib import Parallel, delayed

from ..corpus import EMOTIONS, LabelVector, RawRecord, preprocess
from ..decomp import PcaConfig, PcaModel, fit_pca, load_pca, project_many, save_pca
from ..features import DimensionMismatchError, TfidfConfig, TfidfModel, fit_tfidf, load_tfidf, save_tfidf, transform_many
from ..utils.documents import SchemaMismatchError, read_document, write_document
from ..utils.logging_utils import get_logger
from .base import BinaryClassifier, ConstantConfig, ConstantModel, as_matrix
from .registry import classifier_from_payload, get_family

logger = get_logger("classifiers.multilabel")


@dataclass(frozen=True)
class FeaturePipeline:
    tfidf: TfidfModel
    pca: PcaModel | None = None

    @property
    def dim(self) -> int:
        return self.pca.k if self.pca is not None else self.tfidf.dim

    def features(self, texts: Sequence[str], *, preprocessed: bool = False):
        """Sparse CSR without PCA, dense n×k with it."""
        documents = list(texts) if preprocessed else [preprocess(t) for t in texts]
        X = transform_many(self.tfidf, documents)
        if self.pca is not None:
            return project_many(self.pca, X)
        return X

    def describe(self) -> dict:
        return {
            "tfidf_id": self.tfidf.model_id,
            "tfidf_config": self.tfidf.config.as_dict(),
            "pca_id": self.pca.model_id if self.pca is not None else None,
            "pca_k": self.pca.k if self.pca is not None else None,
        }


def fit_pipeline(
    texts: Sequence[str],
    tfidf_config: TfidfConfig | None = None,
    pca_config: PcaConfig | None = None,
    *,
    preprocessed: bool = False,
):
    """Returns (pipeline, training feature matrix)."""
    documents = list(texts) if preprocessed else [preprocess(t) for t in texts]
    tfidf = fit_tfidf(documents, tfidf_config)
    X = transform_many(tfidf, documents)
    if pca_config is None:
        return FeaturePipeline(tfidf=tfidf), X
    pca = fit_pca(X, config=pca_config)
    return FeaturePipeline(tfidf=tfidf, pca=pca), project_many(pca, X)


@dataclass(frozen=True)
class MultiLabelModel:
    pipeline: FeaturePipeline
    classifiers: Mapping[str, BinaryClassifier]
    family: str
    family_config: dict = field(default_factory=dict)
    fallback_labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if tuple(self.classifiers) != EMOTIONS:
            raise ValueError(f"Classifiers must be keyed by {EMOTIONS} in that order")
        for label, clf in self.classifiers.items():
            if clf.dim != self.pipeline.dim:
                raise DimensionMismatchError(
                    f"{label}: classifier expects {clf.dim} features, pipeline produces {self.pipeline.dim}"
                )

    def _classifier(self, label: str) -> BinaryClassifier:
        if label not in self.classifiers:
            raise ValueError(f"Unknown emotion label {label!r}; expected one of {EMOTIONS}")
        return self.classifiers[label]

    def decision_scores(self, texts: Sequence[str], label: str) -> np.ndarray:
        clf = self._classifier(label)
        return clf.decision_scores(self.pipeline.features(texts))

    def score_matrix(self, X) -> np.ndarray:
        """n×6 decision scores for an already featurized matrix."""
        X = as_matrix(X, self.pipeline.dim)
        return np.column_stack([self.classifiers[label].decision_scores(X) for label in EMOTIONS])

    def predict_features(self, X) -> np.ndarray:
        return self.score_matrix(X) > 0

    def predict_many(self, texts: Sequence[str]) -> list[LabelVector]:
        flags = self.predict_features(self.pipeline.features(texts))
        return [LabelVector.from_sequence(row) for row in flags]

    def predict(self, text: str) -> LabelVector:
        return self.predict_many([text])[0]


def _train_one(label: str, X, y: np.ndarray, family: str, config) -> tuple[BinaryClassifier, bool]:
    if y.all() or not y.any():
        logger.warning(
            "Label %r has only %s examples in training data; using a constant-%s classifier",
            label, "positive" if y.all() else "negative", "positive" if y.all() else "negative",
        )
        return ConstantModel(input_dim=X.shape[1], config=ConstantConfig(positive=bool(y.all()))), True
    return get_family(family).trainer(X, y, config), False


def train_classifiers(X, Y, family: str, config=None, n_jobs: int = 1) -> tuple[dict[str, BinaryClassifier], tuple[str, ...]]:
    """One classifier per emotion column of Y (n×6 bool). Returns (classifiers, fallback labels)."""
    spec = get_family(family)
    if config is None or isinstance(config, Mapping):
        config = spec.make_config(config)
    Y = np.asarray(Y, dtype=bool)
    if Y.ndim != 2 or Y.shape[1] != len(EMOTIONS):
        raise ValueError(f"Label matrix must be n×{len(EMOTIONS)}, got shape {Y.shape}")
    X = as_matrix(X)
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_train_one)(label, X, Y[:, j], family, config) for j, label in enumerate(EMOTIONS)
    )
    classifiers = {label: clf for label, (clf, _) in zip(EMOTIONS, results)}
    fallbacks = tuple(label for label, (_, fallback) in zip(EMOTIONS, results) if fallback)
    return classifiers, fallbacks


def label_matrix(records: Sequence[RawRecord]) -> np.ndarray:
    return np.array([r.labels.as_tuple() for r in records], dtype=bool).reshape(len(records), len(EMOTIONS))


def train_multilabel(
    records: Sequence[RawRecord],
    tfidf_config: TfidfConfig | None = None,
    family: str = "svm",
    family_config=None,
    pca_config: PcaConfig | None = None,
    n_jobs: int = 1,
) -> MultiLabelModel:
    if not records:
        raise ValueError("Cannot train on an empty record list")
    spec = get_family(family)
    if family_config is None or isinstance(family_config, Mapping):
        family_config = spec.make_config(family_config)
    pipeline, X = fit_pipeline([r.text for r in records], tfidf_config, pca_config)
    classifiers, fallbacks = train_classifiers(X, label_matrix(records), family, family_config, n_jobs)
    logger.info(
        "Trained %s on %d record(s), %d feature(s)%s",
        family, len(records), pipeline.dim, f"; constant fallback for {', '.join(fallbacks)}" if fallbacks else "",
    )
    return MultiLabelModel(
        pipeline=pipeline,
        classifiers=classifiers,
        family=family,
        family_config=_config_dict(family_config),
        fallback_labels=fallbacks,
    )


def _config_dict(config) -> dict:
    return asdict(config) if is_dataclass(config) else dict(config)


def predict_multilabel(model: MultiLabelModel, text: str) -> LabelVector:
    return model.predict(text)


def _relative(target: Path, start: Path) -> str:
    return Path(os.path.relpath(target.resolve(), start.resolve())).as_posix()


def pipeline_paths(pipeline: FeaturePipeline, pipeline_dir: str | Path) -> dict[str, Path]:
    """Content-addressed document paths: tfidf-<id>.json and pca-<id>.json."""
    base = Path(pipeline_dir)
    paths = {"tfidf": base / f"tfidf-{pipeline.tfidf.model_id}.json"}
    if pipeline.pca is not None:
        paths["pca"] = base / f"pca-{pipeline.pca.model_id}.json"
    return paths


def save_pipeline(pipeline: FeaturePipeline, pipeline_dir: str | Path) -> dict[str, Path]:
    paths = pipeline_paths(pipeline, pipeline_dir)
    save_tfidf(pipeline.tfidf, paths["tfidf"])
    if pipeline.pca is not None:
        save_pca(pipeline.pca, paths["pca"])
    return paths


def save_multilabel(
    model: MultiLabelModel,
    path: str | Path,
    pipeline_dir: str | Path | None = None,
    *,
    write_pipeline: bool = True,
    meta: Mapping[str, Any] | None = None,
) -> Path:
    """
    Writes the model document and its pipeline documents
    (`pipelines/tfidf-<id>.json`, `pipelines/pca-<id>.json` next to the model
    unless `pipeline_dir` is given). The model references them by relative path and id.
    `write_pipeline=False` only references documents already written with save_pipeline.
    `meta` (config hash, seeds) is stored next to the model fields.
    """
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    pipes = Path(pipeline_dir) if pipeline_dir is not None else target.parent / "pipelines"

    paths = save_pipeline(model.pipeline, pipes) if write_pipeline else pipeline_paths(model.pipeline, pipes)
    pipeline_ref: dict[str, Any] = {"pca": None}
    for kind, doc_path in paths.items():
        pipeline_ref[kind] = {"id": doc_path.stem.split("-", 1)[1], "path": _relative(doc_path, target.parent)}

    payload = {
        **(meta or {}),
        "family": model.family,
        "family_config": model.family_config,
        "labels": list(EMOTIONS),
        "fallback_labels": list(model.fallback_labels),
        "classifiers": {label: model.classifiers[label].to_payload() for label in EMOTIONS},
        "pipeline": pipeline_ref,
    }
    return write_document(target, "model", payload)


def _load_checked(ref: Mapping[str, Any], base: Path, loader, kind: str):
    source = base / ref["path"]
    loaded = loader(source)
    if loaded.model_id != ref["id"]:
        raise SchemaMismatchError(f"{source}: {kind} id {loaded.model_id} does not match the referenced id {ref['id']}")
    return loaded


def load_multilabel(path: str | Path) -> MultiLabelModel:
    source = Path(path)
    doc = read_document(source, "model")
    if tuple(doc["labels"]) != EMOTIONS:
        raise SchemaMismatchError(f"{source}: label order {doc['labels']} differs from {list(EMOTIONS)}")
    ref = doc["pipeline"]
    tfidf = _load_checked(ref["tfidf"], source.parent, load_tfidf, "tfidf")
    pca = _load_checked(ref["pca"], source.parent, load_pca, "pca") if ref.get("pca") else None
    classifiers = {label: classifier_from_payload(doc["classifiers"][label]) for label in EMOTIONS}
    return MultiLabelModel(
        pipeline=FeaturePipeline(tfidf=tfidf, pca=pca),
        classifiers=classifiers,
        family=str(doc["family"]),
        family_config=dict(doc["family_config"]),
        fallback_labels=tuple(doc["fallback_labels"]),
    )
