from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar, Mapping

import numpy as np
from scipy import sparse

from ..utils.logging_utils import get_logger
from .base import BinaryClassifier, TrainingError, as_matrix, check_targets, config_as_dict

logger = get_logger("classifiers.knn")

METRICS = ("cosine", "euclidean")


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    metric: str = "cosine"
    chunk_size: int = 256

    def __post_init__(self) -> None:
        if self.k < 1 or self.k % 2 == 0:
            raise TrainingError(f"k must be a positive odd integer, got {self.k}")
        if self.metric not in METRICS:
            raise TrainingError(f"Unknown metric {self.metric!r}; expected one of {METRICS}")
        if self.chunk_size < 1:
            raise TrainingError(f"chunk_size must be >= 1, got {self.chunk_size}")


def _row_norms(X) -> np.ndarray:
    if sparse.issparse(X):
        return np.sqrt(np.asarray(X.multiply(X).sum(axis=1)).ravel())
    return np.sqrt(np.einsum("ij,ij->i", X, X))


def _dense(product) -> np.ndarray:
    return product.toarray() if sparse.issparse(product) else np.asarray(product)


@dataclass(frozen=True)
class KnnModel(BinaryClassifier):
    """
    Score = (positive − negative neighbours) / k, so predict(x) is the majority vote.
    Neighbours are ordered by distance with a stable sort: at equal distance the
    lower training index wins.
    """

    family: ClassVar[str] = "knn"

    X: Any  # CSR or dense n×d, never modified
    labels: np.ndarray
    config: KnnConfig

    def __post_init__(self) -> None:
        self.labels.setflags(write=False)
        object.__setattr__(self, "_norms", _row_norms(self.X))

    @property
    def dim(self) -> int:
        return int(self.X.shape[1])

    def distances(self, Q) -> np.ndarray:
        """Query-by-train distance block (1 − cosine similarity, or Euclidean)."""
        q_norms = _row_norms(Q)
        dots = _dense(Q @ self.X.T)
        if self.config.metric == "cosine":
            denom = np.outer(q_norms, self._norms)
            similarity = np.divide(dots, denom, out=np.zeros_like(dots), where=denom > 0)
            return 1.0 - similarity
        squared = q_norms[:, None] ** 2 + self._norms[None, :] ** 2 - 2.0 * dots
        return np.sqrt(np.clip(squared, 0.0, None))

    def neighbours(self, Q) -> np.ndarray:
        """Indices of the k nearest training rows, nearest first."""
        Q = as_matrix(Q, self.dim)
        out = []
        for start in range(0, Q.shape[0], self.config.chunk_size):
            block = self.distances(Q[start : start + self.config.chunk_size])
            out.append(np.argsort(block, axis=1, kind="stable")[:, : self.config.k])
        return np.vstack(out) if out else np.empty((0, self.config.k), dtype=np.int64)

    def _scores(self, X) -> np.ndarray:
        votes = self.labels[self.neighbours(X)]
        positive = votes.sum(axis=1)
        return (2.0 * positive - self.config.k) / self.config.k

    def to_payload(self) -> dict:
        payload = {"family": self.family, "config": config_as_dict(self.config), "labels": self.labels.astype(int)}
        if sparse.issparse(self.X):
            csr = sparse.csr_matrix(self.X)
            payload["train"] = {
                "format": "csr",
                "shape": list(csr.shape),
                "indptr": csr.indptr,
                "indices": csr.indices,
                "data": csr.data,
            }
        else:
            payload["train"] = {"format": "dense", "shape": list(self.X.shape), "data": self.X}
        return payload

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "KnnModel":
        train = payload["train"]
        shape = tuple(train["shape"])
        if train["format"] == "csr":
            X = sparse.csr_matrix(
                (
                    np.array(train["data"], dtype=float),
                    np.array(train["indices"], dtype=np.int64),
                    np.array(train["indptr"], dtype=np.int64),
                ),
                shape=shape,
            )
        else:
            X = np.array(train["data"], dtype=float).reshape(shape)
        return cls(X=X, labels=np.array(payload["labels"], dtype=bool), config=KnnConfig(**payload["config"]))


def train_knn(X, y, config: KnnConfig | None = None) -> KnnModel:
    config = config or KnnConfig()
    X = as_matrix(X)
    if X.shape[0] == 0:
        raise TrainingError("empty training set")
    labels = check_targets(y, X.shape[0])
    if config.k > X.shape[0]:
        raise TrainingError(f"k={config.k} exceeds the training size {X.shape[0]}")
    stored = sparse.csr_matrix(X, copy=True) if sparse.issparse(X) else np.array(X, dtype=float)
    logger.debug("KNN stored %d training rows (k=%d, metric=%s)", stored.shape[0], config.k, config.metric)
    return KnnModel(X=stored, labels=labels.copy(), config=config)


def knn_predict(model: KnnModel, x) -> bool:
    return bool(model.predict(x)[0])
