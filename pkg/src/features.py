"""
Whitespace tokens, word n-grams and a smoothed TF-IDF vectorizer over them.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from .utils.documents import content_id, read_document, write_document
from .utils.logging_utils import get_logger

MAX_NGRAM = 3

logger = get_logger("features")


class EmptyVocabularyError(ValueError):
    """No n-gram survived fitting."""


class DimensionMismatchError(ValueError):
    """Vector or matrix width does not match the fitted feature space."""


@lru_cache(maxsize=4096)
def _is_latin(ch: str) -> bool:
    return unicodedata.name(ch, "").startswith("LATIN")


def tokenize(text: str, lowercase: bool = False) -> list[str]:
    """Whitespace split of preprocessed text. `lowercase` folds Latin letters only."""
    if lowercase:
        text = "".join(ch.lower() if _is_latin(ch) else ch for ch in text)
    return text.split()


def extract_ngrams(tokens: Sequence[str], ngram_range: tuple[int, int] = (1, 1)) -> list[str]:
    low, high = ngram_range
    if not 1 <= low <= high <= MAX_NGRAM:
        raise ValueError(f"ngram_range must satisfy 1 <= low <= high <= {MAX_NGRAM}, got {ngram_range}")
    grams: list[str] = []
    for n in range(low, high + 1):
        grams.extend(" ".join(tokens[i : i + n]) for i in range(len(tokens) - n + 1))
    return grams


@dataclass(frozen=True)
class TfidfConfig:
    ngram_range: tuple[int, int] = (1, 1)
    min_df: int = 1
    max_features: int | None = None
    normalize: bool = True
    lowercase: bool = False

    def __post_init__(self) -> None:
        low, high = self.ngram_range
        if not 1 <= low <= high <= MAX_NGRAM:
            raise ValueError(f"ngram_range must satisfy 1 <= low <= high <= {MAX_NGRAM}, got {self.ngram_range}")
        if self.min_df < 1:
            raise ValueError(f"min_df must be >= 1, got {self.min_df}")
        if self.max_features is not None and self.max_features < 1:
            raise ValueError(f"max_features must be >= 1, got {self.max_features}")

    def as_dict(self) -> dict:
        return {
            "ngram_range": list(self.ngram_range),
            "min_df": self.min_df,
            "max_features": self.max_features,
            "normalize": self.normalize,
            "lowercase": self.lowercase,
        }

    @classmethod
    def from_dict(cls, payload: Mapping) -> "TfidfConfig":
        return cls(
            ngram_range=tuple(payload["ngram_range"]),  # type: ignore[arg-type]
            min_df=int(payload["min_df"]),
            max_features=payload["max_features"],
            normalize=bool(payload["normalize"]),
            lowercase=bool(payload["lowercase"]),
        )


@dataclass(frozen=True)
class Vocabulary:
    """Index order is lexicographic over the kept terms."""

    terms: tuple[str, ...]
    document_frequency: tuple[int, ...]
    ngram_range: tuple[int, int]
    term_to_index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "term_to_index", {term: i for i, term in enumerate(self.terms)})
        if len(self.term_to_index) != len(self.terms):
            raise ValueError("Vocabulary terms must be unique")

    def __len__(self) -> int:
        return len(self.terms)

    def index(self, term: str) -> int | None:
        return self.term_to_index.get(term)


@dataclass(frozen=True)
class SparseVector:
    dim: int
    indices: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if len(self.indices) != len(self.values):
            raise ValueError("indices and values differ in length")
        previous = -1
        for index, value in zip(self.indices, self.values):
            if index <= previous or index >= self.dim:
                raise ValueError(f"Sparse index {index} out of order or outside dim {self.dim}")
            if value == 0 or not math.isfinite(value):
                raise ValueError(f"Sparse value at {index} must be finite and nonzero, got {value}")
            previous = index

    @property
    def is_empty(self) -> bool:
        return not self.indices

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        dense[list(self.indices)] = self.values
        return dense

    def as_row(self) -> sparse.csr_matrix:
        return sparse.csr_matrix(
            (np.asarray(self.values, dtype=float), np.asarray(self.indices, dtype=np.int64), [0, len(self.indices)]),
            shape=(1, self.dim),
        )

    @classmethod
    def from_row(cls, matrix: sparse.csr_matrix, row: int) -> "SparseVector":
        start, end = matrix.indptr[row], matrix.indptr[row + 1]
        indices = matrix.indices[start:end]
        values = matrix.data[start:end]
        order = np.argsort(indices, kind="stable")
        keep = [i for i in order if values[i] != 0]
        return cls(
            dim=matrix.shape[1],
            indices=tuple(int(indices[i]) for i in keep),
            values=tuple(float(values[i]) for i in keep),
        )


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: Vocabulary
    idf: np.ndarray
    config: TfidfConfig
    n_documents: int

    def __post_init__(self) -> None:
        self.idf.setflags(write=False)

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def to_payload(self) -> dict:
        return {
            "config": self.config.as_dict(),
            "n_documents": self.n_documents,
            "vocabulary": [
                [term, df, float(idf)]
                for term, df, idf in zip(self.vocabulary.terms, self.vocabulary.document_frequency, self.idf)
            ],
        }

    @classmethod
    def from_payload(cls, payload: Mapping) -> "TfidfModel":
        config = TfidfConfig.from_dict(payload["config"])
        entries = payload["vocabulary"]
        vocabulary = Vocabulary(
            terms=tuple(e[0] for e in entries),
            document_frequency=tuple(int(e[1]) for e in entries),
            ngram_range=config.ngram_range,
        )
        return cls(
            vocabulary=vocabulary,
            idf=np.array([float(e[2]) for e in entries]),
            config=config,
            n_documents=int(payload["n_documents"]),
        )

    @property
    def model_id(self) -> str:
        return content_id(self.to_payload())


def _document_grams(document: str, config: TfidfConfig) -> list[str]:
    return extract_ngrams(tokenize(document, config.lowercase), config.ngram_range)


def fit_tfidf(documents: Sequence[str], config: TfidfConfig | None = None) -> TfidfModel:
    """
    Keeps n-grams with df >= min_df, truncated to the max_features highest-df
    terms (ties lexicographic). idf(t) = ln((1 + N) / (1 + df(t))) + 1.
    """
    config = config or TfidfConfig()
    if not documents:
        raise EmptyVocabularyError("empty vocabulary: no documents to fit")

    frequency: Counter[str] = Counter()
    for document in documents:
        frequency.update(set(_document_grams(document, config)))
    if not frequency:
        raise EmptyVocabularyError("empty vocabulary: every document is empty")

    kept = [(term, df) for term, df in frequency.items() if df >= config.min_df]
    if not kept:
        raise EmptyVocabularyError(f"empty vocabulary: no term reaches min_df={config.min_df}")
    if config.max_features is not None and len(kept) > config.max_features:
        kept.sort(key=lambda item: (-item[1], item[0]))
        kept = kept[: config.max_features]
    kept.sort(key=lambda item: item[0])

    n = len(documents)
    dfs = np.array([df for _, df in kept], dtype=float)
    idf = np.log((1.0 + n) / (1.0 + dfs)) + 1.0
    vocabulary = Vocabulary(
        terms=tuple(term for term, _ in kept),
        document_frequency=tuple(int(df) for _, df in kept),
        ngram_range=config.ngram_range,
    )
    logger.info(
        "Fitted TF-IDF ngram=%s on %d document(s): %d term(s) (%d before pruning)",
        config.ngram_range, n, len(vocabulary), len(frequency),
    )
    return TfidfModel(vocabulary=vocabulary, idf=idf, config=config, n_documents=n)


def _weights(model: TfidfModel, document: str) -> tuple[np.ndarray, np.ndarray]:
    counts: Counter[int] = Counter()
    for gram in _document_grams(document, model.config):
        index = model.vocabulary.index(gram)
        if index is not None:
            counts[index] += 1
    if not counts:
        return np.empty(0, dtype=np.int64), np.empty(0)
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=float) * model.idf[indices]
    if model.config.normalize:
        values = values / np.sqrt(np.dot(values, values))
    return indices, values


def transform(model: TfidfModel, document: str) -> SparseVector:
    """Raw count × idf, L2-normalized when configured. Out-of-vocabulary n-grams are ignored."""
    indices, values = _weights(model, document)
    return SparseVector(dim=model.dim, indices=tuple(int(i) for i in indices), values=tuple(float(v) for v in values))


def transform_many(model: TfidfModel, documents: Iterable[str]) -> sparse.csr_matrix:
    """Row i equals transform(model, documents[i])."""
    indptr = [0]
    all_indices: list[np.ndarray] = []
    all_values: list[np.ndarray] = []
    for document in documents:
        indices, values = _weights(model, document)
        all_indices.append(indices)
        all_values.append(values)
        indptr.append(indptr[-1] + len(indices))
    data = np.concatenate(all_values) if all_values else np.empty(0)
    cols = np.concatenate(all_indices) if all_indices else np.empty(0, dtype=np.int64)
    return sparse.csr_matrix((data, cols, np.asarray(indptr)), shape=(len(indptr) - 1, model.dim))


def fit_transform(documents: Sequence[str], config: TfidfConfig | None = None) -> tuple[TfidfModel, sparse.csr_matrix]:
    model = fit_tfidf(documents, config)
    return model, transform_many(model, documents)


def save_tfidf(model: TfidfModel, path: str | Path) -> Path:
    return write_document(path, "tfidf", model.to_payload())


def load_tfidf(path: str | Path) -> TfidfModel:
    return TfidfModel.from_payload(read_document(path, "tfidf"))


__all__ = [
    "DimensionMismatchError",
    "EmptyVocabularyError",
    "SparseVector",
    "TfidfConfig",
    "TfidfModel",
    "Vocabulary",
    "extract_ngrams",
    "fit_tfidf",
    "fit_transform",
    "load_tfidf",
    "save_tfidf",
    "tokenize",
    "transform",
    "transform_many",
]
