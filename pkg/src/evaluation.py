"""
Multi-label evaluation: per-label confusion counts, precision/recall/F1,
micro/macro/weighted aggregates, per-label accuracy and table exports.

Every 0/0 ratio is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from .corpus import EMOTIONS, LabelVector
from .utils.documents import read_document, write_document, write_table
from .utils.logging_utils import get_logger

logger = get_logger("evaluation")

MODES: tuple[str, ...] = ("micro", "macro", "weighted")
ERROR_MARKER = "ERROR"


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def support(self) -> int:
        """Gold positives."""
        return self.tp + self.fn

    @property
    def accuracy(self) -> float:
        return _ratio(self.tp + self.tn, self.total)

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


@dataclass(frozen=True)
class Prf:
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


def _ratio(num: float, den: float) -> float:
    return float(num) / float(den) if den else 0.0


def _label_matrix(values) -> np.ndarray:
    if isinstance(values, np.ndarray):
        matrix = values.astype(bool)
    else:
        matrix = np.array(
            [v.as_tuple() if isinstance(v, LabelVector) else tuple(v) for v in values], dtype=bool
        ).reshape(-1, len(EMOTIONS))
    if matrix.ndim != 2 or matrix.shape[1] != len(EMOTIONS):
        raise ValueError(f"Expected n×{len(EMOTIONS)} labels, got shape {matrix.shape}")
    return matrix


def _counts(pred: np.ndarray, gold: np.ndarray) -> ConfusionCounts:
    return ConfusionCounts(
        tp=int(np.sum(pred & gold)),
        fp=int(np.sum(pred & ~gold)),
        fn=int(np.sum(~pred & gold)),
        tn=int(np.sum(~pred & ~gold)),
    )


def confusion(predictions, gold, label: str) -> ConfusionCounts:
    """Binary counts for one emotion's component."""
    if len(predictions) != len(gold):
        raise ValueError(f"{len(predictions)} predictions for {len(gold)} gold label vectors")
    if label not in EMOTIONS:
        raise ValueError(f"Unknown emotion label {label!r}")
    j = EMOTIONS.index(label)
    return _counts(_label_matrix(predictions)[:, j], _label_matrix(gold)[:, j])


def prf(counts: ConfusionCounts) -> Prf:
    precision = _ratio(counts.tp, counts.tp + counts.fp)
    recall = _ratio(counts.tp, counts.tp + counts.fn)
    return Prf(precision, recall, _ratio(2 * precision * recall, precision + recall))


def aggregate(per_label: Mapping[str, ConfusionCounts], mode: str) -> Prf:
    """
    micro: prf of the summed counts; macro: plain mean of per-label metrics;
    weighted: mean weighted by gold positive support (zero total support → 0).
    """
    if not per_label:
        raise ValueError("aggregate needs at least one label")
    counts = list(per_label.values())
    if mode == "micro":
        total = ConfusionCounts()
        for c in counts:
            total = total + c
        return prf(total)
    scores = [prf(c) for c in counts]
    if mode == "macro":
        weights = np.ones(len(counts))
    elif mode == "weighted":
        weights = np.array([c.support for c in counts], dtype=float)
    else:
        raise ValueError(f"Unknown aggregation mode {mode!r}; expected one of {MODES}")
    mass = weights.sum()
    if mass == 0:
        return Prf(0.0, 0.0, 0.0)
    return Prf(
        precision=float(np.dot(weights, [s.precision for s in scores]) / mass),
        recall=float(np.dot(weights, [s.recall for s in scores]) / mass),
        f1=float(np.dot(weights, [s.f1 for s in scores]) / mass),
    )


@dataclass(frozen=True)
class LabelMetrics:
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    accuracy: float

    @property
    def support(self) -> int:
        return self.counts.support

    def as_dict(self) -> dict:
        return {
            **self.counts.as_dict(),
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "support": self.support,
        }


@dataclass(frozen=True)
class MetricsReport:
    per_label: dict[str, LabelMetrics]
    aggregates: dict[str, Prf]
    n_instances: int
    subset_accuracy: float | None = None
    extra: dict = field(default_factory=dict)

    def metric(self, mode: str = "macro", name: str = "f1") -> float:
        return float(getattr(self.aggregates[mode], name))

    @property
    def macro_f1(self) -> float:
        return self.metric("macro", "f1")

    def to_payload(self) -> dict:
        payload: dict[str, Any] = {
            "n_instances": self.n_instances,
            "per_label": {label: m.as_dict() for label, m in self.per_label.items()},
            "aggregates": {mode: p.as_dict() for mode, p in self.aggregates.items()},
        }
        if self.subset_accuracy is not None:
            payload["subset_accuracy"] = self.subset_accuracy
        return payload

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "MetricsReport":
        per_label = {}
        for label, m in payload["per_label"].items():
            counts = ConfusionCounts(m["tp"], m["fp"], m["fn"], m["tn"])
            per_label[label] = LabelMetrics(counts, m["precision"], m["recall"], m["f1"], m["accuracy"])
        return cls(
            per_label=per_label,
            aggregates={mode: Prf(**p) for mode, p in payload["aggregates"].items()},
            n_instances=int(payload["n_instances"]),
            subset_accuracy=payload.get("subset_accuracy"),
        )


def evaluate(predictions, gold, subset_accuracy: bool = False) -> MetricsReport:
    """predictions/gold: sequences of LabelVector or n×6 boolean arrays."""
    pred = _label_matrix(predictions)
    truth = _label_matrix(gold)
    if pred.shape != truth.shape:
        raise ValueError(f"{pred.shape[0]} predictions for {truth.shape[0]} gold label vectors")
    per_label: dict[str, LabelMetrics] = {}
    counts: dict[str, ConfusionCounts] = {}
    for j, label in enumerate(EMOTIONS):
        c = _counts(pred[:, j], truth[:, j])
        s = prf(c)
        counts[label] = c
        per_label[label] = LabelMetrics(c, s.precision, s.recall, s.f1, c.accuracy)
    report = MetricsReport(
        per_label=per_label,
        aggregates={mode: aggregate(counts, mode) for mode in MODES},
        n_instances=int(pred.shape[0]),
        subset_accuracy=_ratio(np.all(pred == truth, axis=1).sum(), pred.shape[0]) if subset_accuracy else None,
    )
    logger.debug("Evaluated %d instance(s): macro F1 %.4f", report.n_instances, report.macro_f1)
    return report


def confusion_table(counts: ConfusionCounts) -> pd.DataFrame:
    """2×2 matrix, rows = actual class, columns = predicted class."""
    return pd.DataFrame(
        {
            "actual": ["negative", "positive"],
            "predicted_negative": [counts.tn, counts.fn],
            "predicted_positive": [counts.fp, counts.tp],
        }
    )


def confusion_frame(report: MetricsReport) -> pd.DataFrame:
    """Every label's 2×2 matrix stacked, one row per (label, actual class)."""
    frames = []
    for label, metrics in report.per_label.items():
        frame = confusion_table(metrics.counts)
        frame.insert(0, "label", label)
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)


def export_confusion(report: MetricsReport, path: str | Path, meta: Mapping[str, Any] | None = None) -> Path:
    return write_table(path, confusion_frame(report), meta)


def save_report(report: MetricsReport, path: str | Path, extra: Mapping[str, Any] | None = None) -> Path:
    return write_document(path, "metrics", {**report.to_payload(), **dict(extra or {})})


def load_report(path: str | Path) -> MetricsReport:
    return MetricsReport.from_payload(read_document(path, "metrics"))


def results_table(
    cells: Iterable[Mapping[str, Any]],
    rows: Sequence[str],
    columns: Sequence[str],
    row_header: str = "model",
) -> pd.DataFrame:
    """
    Rows × columns grid of cell values (n-gram result table). A cell is
    {"row", "column", "value"}; value None marks a failed cell (ERROR), a
    combination absent from `cells` stays empty.
    """
    grid: dict[tuple[str, str], Any] = {}
    for cell in cells:
        value = cell.get("value")
        grid[(cell["row"], cell["column"])] = ERROR_MARKER if value is None else value
    data = {row_header: list(rows)}
    for column in columns:
        data[column] = [grid.get((row, column), "") for row in rows]
    return pd.DataFrame(data)


def summary_table(entries: Iterable[Mapping[str, Any]], metric_name: str = "f1") -> pd.DataFrame:
    """
    Best configuration per model (summary table). Each entry carries
    "model", "ngram", "pca", "adaboost" and "value"; the first entry with the
    highest value wins, failed entries (value None) are skipped.
    """
    best: dict[str, Mapping[str, Any]] = {}
    order: list[str] = []
    for entry in entries:
        model = entry["model"]
        if model not in order:
            order.append(model)
        if entry.get("value") is None:
            continue
        if model not in best or entry["value"] > best[model]["value"]:
            best[model] = entry
    rows = []
    for model in order:
        entry = best.get(model)
        if entry is None:
            rows.append({"model": model, "n_gram": "", "pca": "", "adaboost": "", metric_name: ERROR_MARKER})
            continue
        rows.append(
            {
                "model": model,
                "n_gram": entry["ngram"],
                "pca": "Yes" if entry["pca"] else "No",
                "adaboost": "Yes" if entry["adaboost"] else "No",
                metric_name: entry["value"],
            }
        )
    return pd.DataFrame(rows, columns=["model", "n_gram", "pca", "adaboost", metric_name])


__all__ = [
    "ConfusionCounts",
    "ERROR_MARKER",
    "LabelMetrics",
    "MODES",
    "MetricsReport",
    "Prf",
    "aggregate",
    "confusion",
    "confusion_frame",
    "confusion_table",
    "evaluate",
    "export_confusion",
    "load_report",
    "prf",
    "results_table",
    "save_report",
    "summary_table",
]
