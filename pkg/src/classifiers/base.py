from __future__ import annotations

import math
import types
import typing
from abc import ABC, abstractmethod
from dataclasses import asdict, dataclass, fields
from typing import Any, ClassVar, Mapping

import numpy as np
from scipy import sparse

from ..features import DimensionMismatchError, SparseVector


class TrainingError(ValueError):
    """Training data cannot produce a model (empty, single class, bad hyperparameters)."""


class BinaryClassifier(ABC):
    """
    Общий контракт бинарного классификатора: predict(x) == decision_score(x) > 0.

    X везде: scipy.sparse (строки TF-IDF) или плотная n×d матрица (после PCA).
    """

    family: ClassVar[str]

    @property
    @abstractmethod
    def dim(self) -> int: ...

    @abstractmethod
    def _scores(self, X) -> np.ndarray: ...

    @abstractmethod
    def to_payload(self) -> dict: ...

    @classmethod
    @abstractmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "BinaryClassifier": ...

    def decision_scores(self, X) -> np.ndarray:
        return self._scores(as_matrix(X, self.dim))

    def decision_score(self, x) -> float:
        return float(self.decision_scores(x)[0])

    def predict(self, X) -> np.ndarray:
        return self.decision_scores(X) > 0


def as_matrix(X, dim: int | None = None):
    """SparseVector / 1-D array → one-row matrix; sparse input → CSR; checks the width."""
    if isinstance(X, SparseVector):
        X = X.as_row()
    elif sparse.issparse(X):
        X = sparse.csr_matrix(X, dtype=float)
    else:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2:
            raise DimensionMismatchError(f"Expected a 2-D feature matrix, got shape {X.shape}")
    if dim is not None and X.shape[1] != dim:
        raise DimensionMismatchError(f"Feature width {X.shape[1]} != model input dim {dim}")
    return X


def as_csr(X) -> sparse.csr_matrix:
    X = as_matrix(X)
    if sparse.issparse(X):
        X.sort_indices()
        return X
    return sparse.csr_matrix(X)


def check_targets(y, n_rows: int, *, both_classes: bool = False) -> np.ndarray:
    labels = np.asarray(y).astype(bool).ravel()
    if labels.shape[0] != n_rows:
        raise TrainingError(f"{labels.shape[0]} targets for {n_rows} feature rows")
    if n_rows == 0:
        raise TrainingError("empty training set")
    if both_classes and (labels.all() or not labels.any()):
        raise TrainingError("single-class input: need at least one positive and one negative example")
    return labels


def _parse_scalar(hint: Any, raw: str, name: str) -> Any:
    text = raw.strip()
    origin = typing.get_origin(hint)
    if origin in (typing.Union, types.UnionType):
        args = [a for a in typing.get_args(hint) if a is not type(None)]
        if text.lower() in ("none", "null", ""):
            return None
        return _parse_scalar(args[0], text, name)
    try:
        if hint is bool:
            lowered = text.lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if hint is int:
            return int(text)
        if hint is float:
            value = float(text)
            if not math.isfinite(value):
                raise ValueError(text)
            return value
    except ValueError as exc:
        raise TrainingError(f"Option {name!r}: cannot parse {raw!r} as {hint.__name__}") from exc
    return text


def config_from_options(config_cls: type, options: Mapping[str, Any]):
    """Builds a config dataclass from string (or already typed) options; unknown keys are an error."""
    hints = typing.get_type_hints(config_cls)
    known = {f.name for f in fields(config_cls)}
    unknown = sorted(set(options) - known)
    if unknown:
        raise TrainingError(f"Unknown option(s) for {config_cls.__name__}: {', '.join(unknown)}")
    values = {
        key: _parse_scalar(hints[key], value, key) if isinstance(value, str) else value
        for key, value in options.items()
    }
    return config_cls(**values)


def config_as_dict(config) -> dict:
    return asdict(config)


@dataclass(frozen=True)
class ConstantConfig:
    positive: bool = False


@dataclass(frozen=True)
class ConstantModel(BinaryClassifier):
    """Fallback for a label that has a single class in the training data."""

    family: ClassVar[str] = "constant"

    input_dim: int
    config: ConstantConfig = ConstantConfig()

    @property
    def dim(self) -> int:
        return self.input_dim

    def _scores(self, X) -> np.ndarray:
        return np.full(X.shape[0], 1.0 if self.config.positive else -1.0)

    def to_payload(self) -> dict:
        return {"family": self.family, "config": config_as_dict(self.config), "input_dim": self.input_dim}

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "ConstantModel":
        return cls(input_dim=int(payload["input_dim"]), config=ConstantConfig(**payload["config"]))


def train_constant(X, y, config: ConstantConfig | None = None) -> ConstantModel:
    X = as_matrix(X)
    return ConstantModel(input_dim=X.shape[1], config=config or ConstantConfig())
