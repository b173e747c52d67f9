from __future__ import annotations

from dataclasses import dataclass
from typing import Any, ClassVar, Mapping

import numpy as np
from joblib import Parallel, delayed

from ..utils.logging_utils import get_logger
from .base import BinaryClassifier, TrainingError, as_csr, check_targets, config_as_dict
from .tree import TreeConfig, TreeModel, candidate_count, train_decision_tree

logger = get_logger("classifiers.forest")


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_features: str = "sqrt"  # "sqrt" → ⌈√d⌉ candidates per split, "all" → every feature
    bootstrap: bool = True
    max_depth: int | None = None
    min_samples_leaf: int = 2
    seed: int = 0
    n_jobs: int = 1

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise TrainingError(f"n_trees must be >= 1, got {self.n_trees}")
        candidate_count(1, self.max_features)


@dataclass(frozen=True)
class ForestModel(BinaryClassifier):
    """Score = (positive votes − negative votes) / n_trees; a tied vote predicts negative."""

    family: ClassVar[str] = "forest"

    trees: tuple[TreeModel, ...]
    config: ForestConfig

    @property
    def dim(self) -> int:
        return self.trees[0].dim

    def _scores(self, X) -> np.ndarray:
        votes = np.zeros(X.shape[0])
        for tree in self.trees:
            votes += np.where(tree.predict(X), 1.0, -1.0)
        return votes / len(self.trees)

    def to_payload(self) -> dict:
        return {
            "family": self.family,
            "config": config_as_dict(self.config),
            "trees": [tree.to_payload() for tree in self.trees],
        }

    @classmethod
    def from_payload(cls, payload: Mapping[str, Any]) -> "ForestModel":
        return cls(
            trees=tuple(TreeModel.from_payload(tree) for tree in payload["trees"]),
            config=ForestConfig(**payload["config"]),
        )


def _grow_one(X, labels: np.ndarray, seed_seq: np.random.SeedSequence, config: ForestConfig) -> TreeModel:
    rng = np.random.default_rng(seed_seq)
    n, d = X.shape
    rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
    tree_seed = int(rng.integers(0, 2**32))
    tree_config = TreeConfig(
        max_depth=config.max_depth,
        min_samples_leaf=config.min_samples_leaf,
        max_features=candidate_count(d, config.max_features),
        seed=tree_seed,
    )
    return train_decision_tree(X[rows], labels[rows], tree_config)


def train_random_forest(X, y, config: ForestConfig | None = None) -> ForestModel:
    """Each tree gets its own child of SeedSequence(seed); trees are merged in index order."""
    config = config or ForestConfig()
    X = as_csr(X)
    labels = check_targets(y, X.shape[0])
    children = np.random.SeedSequence(config.seed).spawn(config.n_trees)
    trees = Parallel(n_jobs=config.n_jobs, prefer="threads")(
        delayed(_grow_one)(X, labels, child, config) for child in children
    )
    logger.debug("Forest grown: %d tree(s), max_features=%s, bootstrap=%s", len(trees), config.max_features, config.bootstrap)
    return ForestModel(trees=tuple(trees), config=config)
