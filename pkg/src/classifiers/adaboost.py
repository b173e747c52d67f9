"""
Discrete two-class AdaBoost over shallow CART trees.

Labels map to {−1, +1}; a weak tree votes +1 when its leaf's weighted positive
share is above one half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, ClassVar, Mapping

import numpy as np

from ..utils.logging_utils import get_logger
from .base import BinaryClassifier, TrainingError, as_csr, check_targets, config_as_dict
from .tree import TreeConfig, TreeModel, train_decision_tree

logger = get_logger("classifiers.adaboost")

PERFECT_STAGE_WEIGHT = math.log(1e10)


@dataclass(frozen=True)
class AdaBoostConfig:
    n_estimators: int = 50
    max_depth: int = 2
    min_samples_leaf: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_estimators < 1:
            raise TrainingError(f"n_estimators must be >= 1, got {self.n_estimators}")
        if self.max_depth < 1:
            raise TrainingError(f"weak-tree max_depth must be >= 1, got {self.max_depth}")


def stage_weight(error: float) -> float:
    """α = ½ ln((1 − ε) / ε); ε = 0 gets the capped weight ln(1e10)."""
    if error <= 0.0:
        return PERFECT_STAGE_WEIGHT
    return 0.5 * math.log((1.0 - error) / error)


@dataclass(frozen=True)
class AdaBoostModel(BinaryClassifier):
    family: ClassVar[str] = "adaboost"

    learners: tuple[TreeModel, ...]
    alphas: tuple[float, ...]
    stage_errors: tuple[float, ...]  # weighted error ε_m of every stored learner
    weight_sums: tuple[float, ...]  # total sample weight after every stored round's update
    input_dim: int
    config: AdaBoostConfig

    @property
    def dim(self) -> int:
        return self.input_dim

    def stage_votes(self, X) -> np.ndarray:
        """m×n matrix of weak-learner votes h_m(x) ∈ {−1, +1}."""
        if not self.learners:
            return np.empty((0, X.shape[0]))
        return np.vstack([np.where(learner.predict(X), 1.0, -1.0) for learner in self.learners])

    def _scores(self, X) -> np.ndarray:
        if not self.learners:
            return np.zeros(X.shape[0])
        return np.asarray(self.alphas) @ self.stage_votes(X)

    def to_payload(self) -> dict:
        return {
            "family": self.family,
            "config": config_as_dict(self.config),
            "input_dim": self.input_dim,
            "alphas": list(self.alphas),
            "stage_errors": list(self.stage_errors),
            "weight_sums": list(self.weight_sums),
            "learners": [learner.to_payload() for learner in self.learners],
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "AdaBoostModel":
        return cls(
            learners=tuple(TreeModel.from_payload(p) for p in payload["learners"]),
            alphas=tuple(float(a) for a in payload["alphas"]),
            stage_errors=tuple(float(e) for e in payload["stage_errors"]),
            weight_sums=tuple(float(s) for s in payload["weight_sums"]),
            input_dim=int(payload["input_dim"]),
            config=AdaBoostConfig(**payload["config"]),
        )


def train_adaboost(X, y, config: AdaBoostConfig | None = None) -> AdaBoostModel:
    """
    Weights start uniform. Each round fits a weak tree on the current weights,
    then w_i ← w_i·exp(−α y_i h(x_i)) and renormalizes. A round with ε ≥ 0.5 is
    discarded and ends boosting; a perfect round is kept with the capped α and
    ends boosting.
    """
    config = config or AdaBoostConfig()
    X = as_csr(X)
    n, d = X.shape
    labels = check_targets(y, n, both_classes=True)
    signs = np.where(labels, 1.0, -1.0)
    weights = np.full(n, 1.0 / n)
    weak_config = TreeConfig(max_depth=config.max_depth, min_samples_leaf=config.min_samples_leaf, seed=config.seed)

    learners: list[TreeModel] = []
    alphas: list[float] = []
    errors: list[float] = []
    sums: list[float] = []
    for round_no in range(1, config.n_estimators + 1):
        learner = train_decision_tree(X, labels, weak_config, sample_weight=weights)
        votes = np.where(learner.predict(X), 1.0, -1.0)
        error = float(weights[votes != signs].sum())
        if error >= 0.5:
            logger.debug("round %d: weighted error %.6f >= 0.5, stopping", round_no, error)
            break
        alpha = stage_weight(error)
        learners.append(learner)
        alphas.append(alpha)
        errors.append(error)
        if error <= 0.0:
            logger.debug("round %d: perfect weak learner, stopping", round_no)
            sums.append(float(weights.sum()))
            break
        weights = weights * np.exp(-alpha * signs * votes)
        weights = weights / weights.sum()
        sums.append(float(weights.sum()))

    if not learners:
        logger.warning("AdaBoost kept no weak learner: the first round already had weighted error >= 0.5")
    return AdaBoostModel(
        learners=tuple(learners),
        alphas=tuple(alphas),
        stage_errors=tuple(errors),
        weight_sums=tuple(sums),
        input_dim=d,
        config=config,
    )
