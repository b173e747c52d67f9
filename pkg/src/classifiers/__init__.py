"""Binary classifiers behind one contract and the one-vs-rest multi-label model."""

from .adaboost import AdaBoostConfig, AdaBoostModel, stage_weight, train_adaboost
from .base import BinaryClassifier, ConstantConfig, ConstantModel, TrainingError
from .forest import ForestConfig, ForestModel, train_random_forest
from .knn import KnnConfig, KnnModel, knn_predict, train_knn
from .multilabel import (
    FeaturePipeline,
    MultiLabelModel,
    fit_pipeline,
    label_matrix,
    load_multilabel,
    predict_multilabel,
    save_multilabel,
    save_pipeline,
    train_classifiers,
    train_multilabel,
)
from .registry import FAMILIES, Family, classifier_from_payload, get_family
from .svm import LinearSvmModel, SvmConfig, train_linear_svm
from .tree import TreeConfig, TreeModel, train_decision_tree

__all__ = [
    "FAMILIES",
    "AdaBoostConfig",
    "AdaBoostModel",
    "BinaryClassifier",
    "ConstantConfig",
    "ConstantModel",
    "Family",
    "FeaturePipeline",
    "ForestConfig",
    "ForestModel",
    "KnnConfig",
    "KnnModel",
    "LinearSvmModel",
    "MultiLabelModel",
    "SvmConfig",
    "TrainingError",
    "TreeConfig",
    "TreeModel",
    "classifier_from_payload",
    "fit_pipeline",
    "get_family",
    "knn_predict",
    "label_matrix",
    "load_multilabel",
    "predict_multilabel",
    "save_multilabel",
    "save_pipeline",
    "stage_weight",
    "train_adaboost",
    "train_classifiers",
    "train_decision_tree",
    "train_knn",
    "train_linear_svm",
    "train_multilabel",
    "train_random_forest",
]
