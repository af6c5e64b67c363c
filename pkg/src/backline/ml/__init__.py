"""Outcome classifiers, validation and attribution."""

from backline.ml.metrics import EvalReport, classification_report, evaluate, roc_auc
from backline.ml.models import (
    GradientBoostedTrees,
    ModelConfig,
    RandomForest,
    model_from_dict,
    train,
    train_gbdt,
    train_random_forest,
    upsample_minority,
)
from backline.ml.selection import CVResult, cross_validate, stratified_kfold, stratified_split, tune_scale_pos_weight
from backline.ml.shapley import Attribution, importance_comparison, shapley_values

__all__ = [
    "Attribution",
    "CVResult",
    "EvalReport",
    "GradientBoostedTrees",
    "ModelConfig",
    "RandomForest",
    "classification_report",
    "cross_validate",
    "evaluate",
    "importance_comparison",
    "model_from_dict",
    "roc_auc",
    "shapley_values",
    "stratified_kfold",
    "stratified_split",
    "train",
    "train_gbdt",
    "train_random_forest",
    "tune_scale_pos_weight",
    "upsample_minority",
]
