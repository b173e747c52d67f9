"""
Corpus ingestion, text normalization, statistics and the train/validation/test split.
"""

from __future__ import annotations

import itertools
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import emoji
import numpy as np
import pandas as pd

from .utils.config import ExperimentConfig
from .utils.documents import read_document, write_document
from .utils.logging_utils import get_logger

EMOTIONS: tuple[str, ...] = ("love", "joy", "surprise", "anger", "sadness", "fear")
SUBSETS: tuple[str, ...] = ("train", "validation", "test")
DEFAULT_RATIOS: tuple[float, float, float] = (0.80, 0.15, 0.05)

_SENTENCE_BREAK = re.compile(r"[।॥.!?]")
_WHITESPACE = re.compile(r"\s+")
_DANDAS = {"।", "॥"}

logger = get_logger("corpus")


class DatasetError(ValueError):
    """Bad input data: missing columns, invalid labels, impossible split request."""


@dataclass(frozen=True, slots=True)
class LabelVector:
    love: bool = False
    joy: bool = False
    surprise: bool = False
    anger: bool = False
    sadness: bool = False
    fear: bool = False

    @classmethod
    def from_sequence(cls, values: Iterable[bool | int]) -> "LabelVector":
        flags = [bool(v) for v in values]
        if len(flags) != len(EMOTIONS):
            raise ValueError(f"Expected {len(EMOTIONS)} label values, got {len(flags)}")
        return cls(*flags)

    @classmethod
    def from_labels(cls, labels: Iterable[str]) -> "LabelVector":
        wanted = set(labels)
        unknown = wanted - set(EMOTIONS)
        if unknown:
            raise ValueError(f"Unknown emotion label(s): {sorted(unknown)}")
        return cls(*(name in wanted for name in EMOTIONS))

    def as_tuple(self) -> tuple[bool, ...]:
        return tuple(getattr(self, name) for name in EMOTIONS)

    def as_array(self) -> np.ndarray:
        return np.array(self.as_tuple(), dtype=bool)

    def count(self) -> int:
        return sum(self.as_tuple())

    def __getitem__(self, label: str) -> bool:
        if label not in EMOTIONS:
            raise KeyError(label)
        return getattr(self, label)


@dataclass(frozen=True, slots=True)
class RawRecord:
    id: str
    text: str
    labels: LabelVector
    platform: str | None = None
    topic: str | None = None


@dataclass(frozen=True, slots=True)
class RejectedRow:
    row: int  # 1-based data row (header excluded)
    reason: str


def _optional_column(config: ExperimentConfig, key: str, fallback: str | None) -> str | None:
    # "none" or "-" switches an optional column off
    value = config.get_str("dataset", key, fallback)
    return None if value in ("none", "-") else value


@dataclass(frozen=True)
class DatasetSchema:
    """Column mapping for the delimiter-separated source file."""

    text_column: str = "Data"
    label_columns: tuple[str, ...] = ("Love", "Joy", "Surprise", "Anger", "Sadness", "Fear")
    platform_column: str | None = "Domain"
    topic_column: str | None = "Topic"
    id_column: str | None = None
    delimiter: str = ","
    drop_empty_text: bool = True

    def __post_init__(self) -> None:
        if len(self.label_columns) != len(EMOTIONS):
            raise DatasetError(
                f"Schema must map {len(EMOTIONS)} label columns ({', '.join(EMOTIONS)}), "
                f"got {len(self.label_columns)}"
            )

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "DatasetSchema":
        default = cls()
        delimiter = config.get_str("dataset", "delimiter", default.delimiter)
        if delimiter in ("tab", "\\t"):
            delimiter = "\t"
        return cls(
            text_column=config.get_str("dataset", "text_column", default.text_column),
            label_columns=tuple(config.get_list("dataset", "label_columns", default.label_columns)),
            platform_column=_optional_column(config, "platform_column", default.platform_column),
            topic_column=_optional_column(config, "topic_column", default.topic_column),
            id_column=_optional_column(config, "id_column", default.id_column),
            delimiter=delimiter,
            drop_empty_text=config.get_bool("dataset", "drop_empty_text", default.drop_empty_text),
        )

    def as_dict(self) -> dict:
        return {
            "text_column": self.text_column,
            "label_columns": list(self.label_columns),
            "platform_column": self.platform_column,
            "topic_column": self.topic_column,
            "id_column": self.id_column,
            "delimiter": self.delimiter,
            "drop_empty_text": self.drop_empty_text,
        }


def load_dataset(
    path: str | Path,
    schema: DatasetSchema | None = None,
    *,
    strict: bool = False,
) -> tuple[list[RawRecord], list[RejectedRow]]:
    """
    Reads the labeled comment file. Returns accepted records (row order) and the
    rejected-row report. In strict mode a label outside {0, 1} aborts the load.
    """
    schema = schema or DatasetSchema()
    source = Path(path)
    if not source.exists():
        raise FileNotFoundError(f"Dataset file not found: {source}")

    try:
        frame = pd.read_csv(
            source,
            sep=schema.delimiter,
            dtype=str,
            keep_default_na=False,
            na_filter=False,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise DatasetError(f"{source}: file is empty (header row required)") from exc
    except pd.errors.ParserError as exc:
        raise DatasetError(f"{source}: cannot parse file: {exc}") from exc

    wanted = [schema.text_column, *schema.label_columns]
    if schema.id_column:
        wanted.append(schema.id_column)
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise DatasetError(f"{source}: missing mapped column(s): {', '.join(missing)}")

    # platform/topic are optional: a mapped column absent from the file is skipped
    optional_missing = [
        c for c in (schema.platform_column, schema.topic_column) if c and c not in frame.columns
    ]
    if optional_missing:
        logger.info("Optional column(s) not in %s: %s", source, ", ".join(optional_missing))
        schema = replace(
            schema,
            platform_column=schema.platform_column if schema.platform_column in frame.columns else None,
            topic_column=schema.topic_column if schema.topic_column in frame.columns else None,
        )

    records: list[RawRecord] = []
    rejected: list[RejectedRow] = []
    seen_ids: set[str] = set()

    for index, row in enumerate(frame.to_dict("records")):
        row_number = index + 1
        text = row[schema.text_column]

        bad = [
            (column, row[column])
            for column in schema.label_columns
            if row[column].strip() not in ("0", "1")
        ]
        if bad:
            column, value = bad[0]
            reason = f"label {column}={value!r} outside {{0,1}}"
            if strict:
                raise DatasetError(f"{source}: row {row_number}: {reason}")
            rejected.append(RejectedRow(row=row_number, reason=reason))
            continue

        if schema.drop_empty_text and not text.strip():
            rejected.append(RejectedRow(row=row_number, reason="empty text"))
            continue

        record_id = row[schema.id_column] if schema.id_column else str(index)
        if record_id in seen_ids:
            raise DatasetError(f"{source}: row {row_number}: duplicate id {record_id!r}")
        seen_ids.add(record_id)

        labels = LabelVector.from_sequence(row[c].strip() == "1" for c in schema.label_columns)
        platform = (row[schema.platform_column] or None) if schema.platform_column else None
        topic = (row[schema.topic_column] or None) if schema.topic_column else None
        records.append(RawRecord(id=record_id, text=text, labels=labels, platform=platform, topic=topic))

    logger.info("Loaded %d record(s) from %s, rejected %d", len(records), source, len(rejected))
    for reject in rejected[:20]:
        logger.warning("Rejected row %d: %s", reject.row, reject.reason)
    if len(rejected) > 20:
        logger.warning("... and %d more rejected row(s)", len(rejected) - 20)
    return records, rejected


def write_records(records: Sequence[RawRecord], path: str | Path, schema: DatasetSchema | None = None) -> Path:
    """Writes records back in the source column layout."""
    schema = schema or DatasetSchema()
    columns: dict[str, list[str]] = {}
    if schema.id_column:
        columns[schema.id_column] = [r.id for r in records]
    columns[schema.text_column] = [r.text for r in records]
    for name, column in zip(EMOTIONS, schema.label_columns):
        columns[column] = ["1" if r.labels[name] else "0" for r in records]
    if schema.platform_column:
        columns[schema.platform_column] = [r.platform or "" for r in records]
    if schema.topic_column:
        columns[schema.topic_column] = [r.topic or "" for r in records]

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(columns).to_csv(target, sep=schema.delimiter, index=False, encoding="utf-8", lineterminator="\n")
    return target


@lru_cache(maxsize=4096)
def _is_punctuation(ch: str) -> bool:
    return ch in _DANDAS or unicodedata.category(ch).startswith("P")


def _strip_symbols(text: str) -> str:
    # emoji first: keycap sequences contain '#' and '*'
    without_emoji = emoji.replace_emoji(text, replace="")
    return "".join(ch for ch in without_emoji if not _is_punctuation(ch))


def preprocess(text: str) -> str:
    """
    Removes Unicode punctuation (danda included) and emoji, collapses whitespace
    runs to one space and trims. Idempotent.
    """
    if not text:
        return ""
    current = text
    while True:
        # removing one symbol can glue the neighbours into a new emoji sequence
        stripped = _strip_symbols(current)
        if stripped == current:
            break
        current = stripped
    return _WHITESPACE.sub(" ", current).strip()


@dataclass(frozen=True)
class DatasetSplit:
    train_ids: tuple[str, ...]
    validation_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    seed: int
    ratios: tuple[float, float, float] = DEFAULT_RATIOS

    def subsets(self) -> dict[str, tuple[str, ...]]:
        return {"train": self.train_ids, "validation": self.validation_ids, "test": self.test_ids}

    def select(self, records: Sequence[RawRecord], subset: str) -> list[RawRecord]:
        if subset not in SUBSETS:
            raise KeyError(subset)
        wanted = set(self.subsets()[subset])
        return [r for r in records if r.id in wanted]

    def to_payload(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios),
            "train_ids": list(self.train_ids),
            "validation_ids": list(self.validation_ids),
            "test_ids": list(self.test_ids),
        }

    @classmethod
    def from_payload(cls, payload: Mapping) -> "DatasetSplit":
        return cls(
            train_ids=tuple(payload["train_ids"]),
            validation_ids=tuple(payload["validation_ids"]),
            test_ids=tuple(payload["test_ids"]),
            seed=int(payload["seed"]),
            ratios=tuple(float(r) for r in payload["ratios"]),  # type: ignore[arg-type]
        )


def _target_sizes(n: int, ratios: Sequence[float]) -> np.ndarray:
    """Largest-remainder rounding of ratios·n; ties go to the earlier subset."""
    raw = np.asarray(ratios, dtype=float) * n
    sizes = np.floor(raw).astype(int)
    remainder = n - int(sizes.sum())
    order = sorted(range(len(raw)), key=lambda j: (-(raw[j] - sizes[j]), j))
    for j in order[:remainder]:
        sizes[j] += 1
    return sizes


def _rebalance(assignment: np.ndarray, labels: np.ndarray, sizes: np.ndarray, order: np.ndarray) -> int:
    """
    Swaps records between subsets while that lowers Σ (subset rate − global rate)².

    Records with the same label vector are interchangeable here, so moves are
    scored per (subset, label pattern) pair; the record that moves is the first
    one of its pattern in the seeded order. Subset sizes never change.
    Returns the number of swaps made.
    """
    unique, inverse = np.unique(labels, axis=0, return_inverse=True)
    patterns = unique.astype(float)
    inverse = inverse.ravel()
    n_subsets, n_patterns = len(sizes), len(patterns)
    counts = np.zeros((n_subsets, n_patterns), dtype=int)
    np.add.at(counts, (assignment, inverse), 1)
    rates = labels.mean(axis=0)
    weights = np.divide(1.0, sizes, out=np.zeros(n_subsets), where=sizes > 0)
    step = patterns[None, :, :] - patterns[:, None, :]  # [a, b] = pattern b − pattern a
    step_sq = np.einsum("abl,abl->ab", step, step)
    rank = np.empty(len(order), dtype=int)
    rank[order] = np.arange(len(order))

    swaps = 0
    for _ in range(len(assignment)):
        deviation = (counts @ patterns) * weights[:, None] - rates
        best: tuple[float, int, int, int, int] | None = None
        for i, j in itertools.combinations(range(n_subsets), 2):
            if not (sizes[i] and sizes[j]):
                continue
            # subset i gives pattern a and takes pattern b; subset j the reverse
            change = (
                2 * weights[i] * np.einsum("abl,l->ab", step, deviation[i])
                - 2 * weights[j] * np.einsum("abl,l->ab", step, deviation[j])
                + (weights[i] ** 2 + weights[j] ** 2) * step_sq
            )
            allowed = (counts[i] > 0)[:, None] & (counts[j] > 0)[None, :]
            change = np.where(allowed, change, np.inf)
            a, b = np.unravel_index(int(np.argmin(change)), change.shape)
            if change[a, b] < -1e-15 and (best is None or change[a, b] < best[0]):
                best = (float(change[a, b]), i, j, int(a), int(b))
        if best is None:
            break
        _, i, j, a, b = best
        give = min(np.flatnonzero((assignment == i) & (inverse == a)), key=lambda idx: rank[idx])
        take = min(np.flatnonzero((assignment == j) & (inverse == b)), key=lambda idx: rank[idx])
        assignment[give], assignment[take] = j, i
        counts[i, a] -= 1
        counts[j, a] += 1
        counts[j, b] -= 1
        counts[i, b] += 1
        swaps += 1
    return swaps


def stratified_split(
    records: Sequence[RawRecord],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> DatasetSplit:
    """
    Iterative multi-label stratification with hard subset sizes.

    Labels are visited rarest first (by remaining unassigned positives). Each
    record carrying the current label goes to the subset with the largest
    remaining desired count for that label, among subsets with free capacity;
    ties go to the larger free capacity, then the earlier subset. Records
    without labels fill the remaining capacity. A swap pass then evens out
    the per-label rates that the greedy placement left uneven.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != len(SUBSETS):
        raise DatasetError(f"Expected {len(SUBSETS)} split ratios, got {len(ratios)}")
    if any(r <= 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"Split ratios must be positive and sum to 1, got {ratios}")
    if not records:
        raise DatasetError("Cannot split an empty record list")
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        raise DatasetError("Record ids must be unique to split")

    n = len(records)
    labels = np.array([r.labels.as_tuple() for r in records], dtype=bool).reshape(n, len(EMOTIONS))
    ratio_arr = np.asarray(ratios)
    positives = labels.sum(axis=0)
    for name, count in zip(EMOTIONS, positives):
        if 0 < count < len(SUBSETS):
            logger.warning(
                "Label %s has %d positive(s), fewer than %d subsets; placement is best-effort",
                name, count, len(SUBSETS),
            )

    desired = ratio_arr[:, None] * positives[None, :].astype(float)
    capacity = _target_sizes(n, ratios)
    assignment = np.full(n, -1, dtype=int)
    order = np.random.default_rng(seed).permutation(n)

    def _place(idx: int, key) -> None:
        open_subsets = [j for j in range(len(SUBSETS)) if capacity[j] > 0]
        chosen = max(open_subsets, key=key)
        assignment[idx] = chosen
        capacity[chosen] -= 1
        desired[chosen, labels[idx]] -= 1.0

    while True:
        unassigned = assignment < 0
        remaining = labels[unassigned].sum(axis=0)
        if not remaining.any():
            break
        label = int(np.where(remaining > 0, remaining, np.iinfo(np.int64).max).argmin())
        for idx in order:
            if assignment[idx] < 0 and labels[idx, label]:
                _place(int(idx), lambda j: (desired[j, label], capacity[j], -j))

    for idx in order:
        if assignment[idx] < 0:
            _place(int(idx), lambda j: (capacity[j], -j))

    swaps = _rebalance(assignment, labels, _target_sizes(n, ratios), order)
    if swaps:
        logger.debug("Rebalanced split with %d swap(s)", swaps)

    parts = [tuple(ids[i] for i in range(n) if assignment[i] == j) for j in range(len(SUBSETS))]
    split = DatasetSplit(train_ids=parts[0], validation_ids=parts[1], test_ids=parts[2], seed=seed, ratios=ratios)
    logger.info(
        "Split %d record(s) with seed=%d: train=%d validation=%d test=%d",
        n, seed, len(parts[0]), len(parts[1]), len(parts[2]),
    )
    return split


def write_split_manifest(split: DatasetSplit, path: str | Path, extra: Mapping | None = None) -> Path:
    return write_document(path, "split", {**split.to_payload(), **(extra or {})})


def read_split_manifest(path: str | Path) -> DatasetSplit:
    return DatasetSplit.from_payload(read_document(path, "split"))


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    if not len(values):
        return 0.0, 0.0
    arr = np.asarray(values, dtype=float)
    return float(arr.mean()), float(arr.std())


def sentence_word_counts(text: str) -> list[int]:
    """Word count of every sentence; a sentence is a raw segment with content left after preprocessing."""
    counts = []
    for segment in _SENTENCE_BREAK.split(text):
        words = len(preprocess(segment).split())
        if words:
            counts.append(words)
    return counts


@dataclass(frozen=True)
class CorpusStats:
    record_count: int
    per_label_counts: tuple[int, ...]
    avg_sentences_per_entry: tuple[float, float]
    avg_words_per_sentence: tuple[float, float]
    multi_label_fraction: float
    platform_shares: dict[str, float] | None = None
    topic_shares: dict[str, float] | None = None
    top_terms: list[tuple[str, int]] = field(default_factory=list)

    def to_payload(self) -> dict:
        return {
            "record_count": self.record_count,
            "per_label_counts": dict(zip(EMOTIONS, self.per_label_counts)),
            "per_label_fraction": {
                name: count / self.record_count for name, count in zip(EMOTIONS, self.per_label_counts)
            },
            "avg_sentences_per_entry": {"mean": self.avg_sentences_per_entry[0], "std": self.avg_sentences_per_entry[1]},
            "avg_words_per_sentence": {"mean": self.avg_words_per_sentence[0], "std": self.avg_words_per_sentence[1]},
            "multi_label_fraction": self.multi_label_fraction,
            "platform_shares": self.platform_shares,
            "topic_shares": self.topic_shares,
            "top_terms": [[term, count] for term, count in self.top_terms],
        }


def _shares(values: Iterable[str | None]) -> dict[str, float] | None:
    known = [v for v in values if v]
    if not known:
        return None
    counts = Counter(known)
    return {key: counts[key] / len(known) for key in sorted(counts)}


def compute_stats(records: Sequence[RawRecord], top_n: int = 50) -> CorpusStats:
    if not records:
        raise DatasetError("Cannot compute statistics of an empty record list")

    sentences_per_entry: list[int] = []
    words_per_sentence: list[int] = []
    terms: Counter[str] = Counter()
    for record in records:
        counts = sentence_word_counts(record.text)
        sentences_per_entry.append(len(counts))
        words_per_sentence.extend(counts)
        terms.update(preprocess(record.text).split())

    label_matrix = np.array([r.labels.as_tuple() for r in records], dtype=bool).reshape(len(records), len(EMOTIONS))
    multi = int((label_matrix.sum(axis=1) >= 2).sum())
    top_terms = sorted(terms.items(), key=lambda item: (-item[1], item[0]))[:top_n]

    return CorpusStats(
        record_count=len(records),
        per_label_counts=tuple(int(c) for c in label_matrix.sum(axis=0)),
        avg_sentences_per_entry=_mean_std(sentences_per_entry),
        avg_words_per_sentence=_mean_std(words_per_sentence),
        multi_label_fraction=multi / len(records),
        platform_shares=_shares(r.platform for r in records),
        topic_shares=_shares(r.topic for r in records),
        top_terms=top_terms,
    )


def compute_split_profile(records: Sequence[RawRecord], split: DatasetSplit) -> dict[str, dict]:
    """Per-subset size, words per entry (mean ± std) and label positive rates."""
    by_id = {r.id: r for r in records}
    profile: dict[str, dict] = {}
    for name, ids in split.subsets().items():
        subset = [by_id[i] for i in ids if i in by_id]
        words = [len(preprocess(r.text).split()) for r in subset]
        mean, std = _mean_std(words)
        rates = {
            label: (sum(r.labels[label] for r in subset) / len(subset)) if subset else 0.0
            for label in EMOTIONS
        }
        profile[name] = {"count": len(subset), "words_per_entry": {"mean": mean, "std": std}, "label_rates": rates}
    return profile


__all__ = [
    "DEFAULT_RATIOS",
    "EMOTIONS",
    "SUBSETS",
    "CorpusStats",
    "DatasetError",
    "DatasetSchema",
    "DatasetSplit",
    "LabelVector",
    "RawRecord",
    "RejectedRow",
    "compute_split_profile",
    "compute_stats",
    "load_dataset",
    "preprocess",
    "read_split_manifest",
    "sentence_word_counts",
    "stratified_split",
    "write_records",
    "write_split_manifest",
]
