"""
FAMILIES maps a family tag to its config class, trainer and model class; the
sweep, the CLI and model loading all go through it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .adaboost import AdaBoostConfig, AdaBoostModel, train_adaboost
from .base import BinaryClassifier, ConstantConfig, ConstantModel, TrainingError, config_from_options, train_constant
from .forest import ForestConfig, ForestModel, train_random_forest
from .knn import KnnConfig, KnnModel, train_knn
from .svm import LinearSvmModel, SvmConfig, train_linear_svm
from .tree import TreeConfig, TreeModel, train_decision_tree


@dataclass(frozen=True)
class Family:
    tag: str
    config_cls: type
    trainer: Callable[..., BinaryClassifier]
    model_cls: type[BinaryClassifier]

    def make_config(self, options: Mapping[str, Any] | None = None):
        return config_from_options(self.config_cls, dict(options or {}))


FAMILIES: dict[str, Family] = {
    "svm": Family("svm", SvmConfig, train_linear_svm, LinearSvmModel),
    "knn": Family("knn", KnnConfig, train_knn, KnnModel),
    "tree": Family("tree", TreeConfig, train_decision_tree, TreeModel),
    "forest": Family("forest", ForestConfig, train_random_forest, ForestModel),
    "adaboost": Family("adaboost", AdaBoostConfig, train_adaboost, AdaBoostModel),
    "constant": Family("constant", ConstantConfig, train_constant, ConstantModel),
}


def get_family(tag: str) -> Family:
    try:
        return FAMILIES[tag]
    except KeyError:
        known = ", ".join(sorted(FAMILIES))
        raise TrainingError(f"Unknown model family {tag!r}; expected one of: {known}") from None


def classifier_from_payload(payload: Mapping[str, Any]) -> BinaryClassifier:
    return get_family(str(payload["family"])).model_cls.from_payload(payload)
