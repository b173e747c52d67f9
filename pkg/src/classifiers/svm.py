"""
Linear SVM trained with Pegasos: seeded epoch-wise stochastic subgradient
descent on the L2-regularized hinge loss, step 1/(λt), with the projection onto
the ball of radius 1/√λ. The bias is the weight of a constant feature and is
regularized with the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar, Mapping

import numpy as np

from ..utils.logging_utils import get_logger
from .base import BinaryClassifier, TrainingError, as_csr, check_targets, config_as_dict

logger = get_logger("classifiers.svm")


@dataclass(frozen=True)
class SvmConfig:
    regularization: float = 1e-4  # λ
    epochs: int = 20
    seed: int = 0

    def __post_init__(self) -> None:
        if self.regularization <= 0:
            raise TrainingError(f"regularization must be > 0, got {self.regularization}")
        if self.epochs < 1:
            raise TrainingError(f"epochs must be >= 1, got {self.epochs}")


@dataclass(frozen=True)
class LinearSvmModel(BinaryClassifier):
    family: ClassVar[str] = "svm"

    weights: np.ndarray
    bias: float
    config: SvmConfig
    objective: float  # regularized objective of the returned iterate on the training data

    def __post_init__(self) -> None:
        self.weights.setflags(write=False)

    @property
    def dim(self) -> int:
        return int(self.weights.shape[0])

    def _scores(self, X) -> np.ndarray:
        return np.asarray(X @ self.weights).ravel() + self.bias

    def to_payload(self) -> dict:
        return {
            "family": self.family,
            "config": config_as_dict(self.config),
            "weights": self.weights,
            "bias": float(self.bias),
            "objective": float(self.objective),
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "LinearSvmModel":
        return cls(
            weights=np.array(payload["weights"], dtype=float),
            bias=float(payload["bias"]),
            config=SvmConfig(**payload["config"]),
            objective=float(payload["objective"]),
        )


def svm_objective(X, signs: np.ndarray, weights: np.ndarray, bias: float, regularization: float) -> float:
    """λ/2·(‖w‖² + b²) + mean hinge loss."""
    margins = signs * (np.asarray(X @ weights).ravel() + bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return float(0.5 * regularization * (weights @ weights + bias * bias) + hinge)


def train_linear_svm(X, y, config: SvmConfig | None = None) -> LinearSvmModel:
    config = config or SvmConfig()
    X = as_csr(X)
    n, d = X.shape
    labels = check_targets(y, n, both_classes=True)
    signs = np.where(labels, 1.0, -1.0)
    lam = config.regularization
    radius = 1.0 / math.sqrt(lam)
    rng = np.random.default_rng(config.seed)

    # w = scale · v, (v, v_bias) stored unscaled so the decay step is O(1)
    v = np.zeros(d)
    v_bias = 0.0
    scale = 1.0
    norm2 = 0.0  # ‖(v, v_bias)‖²
    indptr, indices, data = X.indptr, X.indices, X.data
    row_norm2 = np.asarray(X.multiply(X).sum(axis=1)).ravel() + 1.0

    best_w, best_b = np.zeros(d), 0.0
    best_objective = svm_objective(X, signs, best_w, best_b, lam)
    t = 0
    for epoch in range(config.epochs):
        for i in rng.permutation(n):
            cols = indices[indptr[i] : indptr[i + 1]]
            vals = data[indptr[i] : indptr[i + 1]]
            dot = float(v[cols] @ vals) + v_bias
            margin = signs[i] * scale * dot
            t += 1
            eta = 1.0 / (lam * t)
            decay = 1.0 - 1.0 / t
            if decay == 0.0:
                v[:] = 0.0
                v_bias, scale, norm2, dot = 0.0, 1.0, 0.0, 0.0
            else:
                scale *= decay
            if margin < 1.0:
                step = eta * signs[i] / scale
                v[cols] += step * vals
                v_bias += step
                norm2 += 2.0 * step * dot + step * step * row_norm2[i]
            w_norm = scale * math.sqrt(max(norm2, 0.0))
            if w_norm > radius:
                scale *= radius / w_norm
            if scale < 1e-9:
                v *= scale
                v_bias *= scale
                norm2 *= scale * scale
                scale = 1.0
        weights, bias = scale * v, scale * v_bias
        objective = svm_objective(X, signs, weights, bias, lam)
        logger.debug("epoch %d: objective %.6g", epoch + 1, objective)
        if objective < best_objective:
            best_w, best_b, best_objective = weights.copy(), bias, objective

    logger.debug("SVM trained: n=%d d=%d steps=%d objective=%.6g", n, d, t, best_objective)
    return LinearSvmModel(weights=best_w, bias=float(best_b), config=config, objective=best_objective)
