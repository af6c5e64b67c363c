"""Gradient-boosted trees (logistic loss, Newton steps) and a random forest.

Both expose ``decision_function`` (raw model output), ``predict_proba``
(probability of class 1 as a 1-D array), ``feature_importances_`` (normalized
gain share) and a JSON round trip via ``to_dict``/``model_from_dict``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from backline.errors import ValidationError
from backline.ml.trees import Tree, gini_tree, newton_tree

CLASS_WEIGHTINGS = ("balanced", "scale_pos_weight", "none", "upsample")


@dataclass(frozen=True)
class ModelConfig:
    algorithm: str = "gbdt"
    n_estimators: int = 300
    learning_rate: float = 0.05
    max_depth: int = 3
    min_samples_split: int = 5
    reg_lambda: float = 1.0
    min_child_weight: float = 1.0
    max_features: Optional[int] = None
    class_weighting: Optional[str] = None
    seed: int = 42

    def __post_init__(self):
        if self.algorithm not in ("gbdt", "random_forest"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.class_weighting is not None and self.class_weighting not in CLASS_WEIGHTINGS:
            raise ValueError(f"unknown class weighting {self.class_weighting!r}")
        if min(self.n_estimators, self.max_depth, self.min_samples_split) < 1 or self.learning_rate <= 0:
            raise ValueError("hyperparameters must be positive")

    @property
    def weighting(self) -> str:
        if self.class_weighting is not None:
            return self.class_weighting
        return "scale_pos_weight" if self.algorithm == "gbdt" else "balanced"

    def to_dict(self) -> dict:
        return asdict(self)


def _check_binary(y: np.ndarray) -> None:
    vals = set(np.unique(y).tolist())
    if not vals <= {0, 1}:
        raise ValidationError(f"labels must be 0/1, got {sorted(vals)}")
    if len(vals) < 2:
        raise ValidationError("training set contains a single class")


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("BACKLINE_THREADS", "1")))
    except ValueError:
        return 1


def upsample_minority(X: np.ndarray, y: np.ndarray, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Resample the minority class with replacement up to the majority count."""
    y = np.asarray(y)
    n1, n0 = int(np.sum(y == 1)), int(np.sum(y == 0))
    if n1 == n0:
        return np.asarray(X), y
    minority = 1 if n1 < n0 else 0
    min_idx = np.flatnonzero(y == minority)
    maj_idx = np.flatnonzero(y != minority)
    draws = np.random.default_rng(seed).choice(min_idx, size=len(maj_idx), replace=True)
    idx = np.concatenate([maj_idx, draws])
    return np.asarray(X)[idx], y[idx]


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


class GradientBoostedTrees:
    """Logistic-loss boosting with depth-limited Newton trees and L2 leaf penalty.

    ``margin(x) = base_score + learning_rate * sum_t leaf_t(x)``. Positive-class
    rows are weighted by ``scale_pos_weight``; ``"auto"`` means n_neg / n_pos.
    The base score is the logit of the weighted positive share.
    """

    algorithm = "gbdt"

    def __init__(
        self,
        n_estimators: int = 300,
        learning_rate: float = 0.05,
        max_depth: int = 3,
        reg_lambda: float = 1.0,
        min_child_weight: float = 1.0,
        scale_pos_weight=None,
    ):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.reg_lambda = reg_lambda
        self.min_child_weight = min_child_weight
        self.scale_pos_weight = scale_pos_weight
        self.trees: list[Tree] = []
        self.base_score = 0.0
        self.n_features = 0
        self.spw_ = 1.0

    def fit(self, X, y, sample_weight=None) -> "GradientBoostedTrees":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_binary(y)
        w = np.ones(len(y)) if sample_weight is None else np.asarray(sample_weight, dtype=float).copy()
        spw = self.scale_pos_weight
        if spw == "auto":
            spw = float(np.sum(y == 0)) / float(np.sum(y == 1))
        self.spw_ = 1.0 if spw is None else float(spw)
        w[y == 1] *= self.spw_
        p0 = float(np.sum(w * y) / np.sum(w))
        self.base_score = math.log(p0 / (1.0 - p0))
        self.n_features = X.shape[1]
        self.trees = []
        margin = np.full(len(y), self.base_score)
        for _ in range(self.n_estimators):
            p = _sigmoid(margin)
            tree = newton_tree(
                X, w * (p - y), w * p * (1.0 - p), self.max_depth, self.reg_lambda, self.min_child_weight
            )
            self.trees.append(tree)
            margin += self.learning_rate * tree.predict(X)
        return self

    def staged_decision_function(self, X):
        X = np.asarray(X, dtype=float)
        margin = np.full(len(X), self.base_score)
        for tree in self.trees:
            margin = margin + self.learning_rate * tree.predict(X)
            yield margin

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        margin = np.full(len(X), self.base_score)
        for tree in self.trees:
            margin += self.learning_rate * tree.predict(X)
        return margin

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    @property
    def feature_importances_(self) -> np.ndarray:
        """Total split gain per feature, normalized to sum to 1."""
        imp = np.zeros(self.n_features)
        for t in self.trees:
            internal = t.feature >= 0
            np.add.at(imp, t.feature[internal], t.gain[internal])
        s = imp.sum()
        return imp / s if s > 0 else imp

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "params": {
                "n_estimators": self.n_estimators,
                "learning_rate": self.learning_rate,
                "max_depth": self.max_depth,
                "reg_lambda": self.reg_lambda,
                "min_child_weight": self.min_child_weight,
                "scale_pos_weight": self.spw_,
            },
            "base_score": self.base_score,
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }


class RandomForest:
    """Bootstrap-aggregated Gini trees with per-node feature subsampling.

    Probabilities are the mean of leaf positive shares across trees. Each tree
    draws from its own child seed so results do not depend on thread count.
    """

    algorithm = "random_forest"

    def __init__(
        self,
        n_estimators: int = 300,
        min_samples_split: int = 5,
        max_features: Optional[int] = None,
        max_depth: Optional[int] = None,
        class_weight: Optional[str] = "balanced",
        seed: int = 42,
    ):
        self.n_estimators = n_estimators
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.max_depth = max_depth
        self.class_weight = class_weight
        self.seed = seed
        self.trees: list[Tree] = []
        self.tree_importances: list[np.ndarray] = []
        self.n_features = 0

    def fit(self, X, y, sample_weight=None) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        _check_binary(y)
        n, self.n_features = X.shape
        w = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=float).copy()
        if self.class_weight == "balanced":
            for c in (0, 1):
                w[y == c] *= n / (2.0 * np.sum(y == c))
        m = self.max_features or math.ceil(math.sqrt(self.n_features))
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_estimators)

        def one(ss):
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, n, n)
            return gini_tree(X[boot], y[boot], w[boot], rng, m, self.min_samples_split, self.max_depth)

        workers = _threads()
        if workers > 1:
            with ThreadPoolExecutor(workers) as ex:
                self.trees = list(ex.map(one, seeds))
        else:
            self.trees = [one(s) for s in seeds]
        self.tree_importances = []
        for t in self.trees:
            imp = np.zeros(self.n_features)
            internal = t.feature >= 0
            np.add.at(imp, t.feature[internal], t.gain[internal])
            s = imp.sum()
            self.tree_importances.append(imp / s if s > 0 else imp)
        return self

    def decision_function(self, X) -> np.ndarray:
        return self.predict_proba(X)

    def predict_proba(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict(X) for t in self.trees], axis=0)

    @property
    def feature_importances_(self) -> np.ndarray:
        """Mean decrease in impurity, normalized per tree then averaged."""
        imp = np.mean(self.tree_importances, axis=0)
        s = imp.sum()
        return imp / s if s > 0 else imp

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "params": {
                "n_estimators": self.n_estimators,
                "min_samples_split": self.min_samples_split,
                "max_features": self.max_features,
                "max_depth": self.max_depth,
                "class_weight": self.class_weight,
                "seed": self.seed,
            },
            "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
            "tree_importances": [i.tolist() for i in self.tree_importances],
        }


def model_from_dict(d: dict):
    if d["algorithm"] == "gbdt":
        p = d["params"]
        m = GradientBoostedTrees(
            p["n_estimators"], p["learning_rate"], p["max_depth"], p["reg_lambda"], p["min_child_weight"], p["scale_pos_weight"]
        )
        m.spw_ = p["scale_pos_weight"]
        m.base_score = d["base_score"]
    elif d["algorithm"] == "random_forest":
        m = RandomForest(**d["params"])
        m.tree_importances = [np.asarray(i) for i in d["tree_importances"]]
    else:
        raise ValueError(f"unknown algorithm {d['algorithm']!r}")
    m.n_features = d["n_features"]
    m.trees = [Tree.from_dict(t) for t in d["trees"]]
    return m


def train_gbdt(X, y, config: ModelConfig = ModelConfig()) -> GradientBoostedTrees:
    X, y = np.asarray(X, dtype=float), np.asarray(y)
    _check_binary(y)
    weighting = config.weighting
    if weighting == "upsample":
        X, y = upsample_minority(X, y, config.seed)
    spw = "auto" if weighting == "scale_pos_weight" else None
    return GradientBoostedTrees(
        config.n_estimators, config.learning_rate, config.max_depth, config.reg_lambda, config.min_child_weight, spw
    ).fit(X, y)


def train_random_forest(X, y, config: ModelConfig = ModelConfig(algorithm="random_forest")) -> RandomForest:
    X, y = np.asarray(X, dtype=float), np.asarray(y)
    _check_binary(y)
    weighting = config.weighting
    if weighting == "upsample":
        X, y = upsample_minority(X, y, config.seed)
    return RandomForest(
        config.n_estimators,
        config.min_samples_split,
        config.max_features,
        None,
        "balanced" if weighting == "balanced" else None,
        config.seed,
    ).fit(X, y)


def train(X, y, config: ModelConfig):
    if config.algorithm == "gbdt":
        return train_gbdt(X, y, config)
    return train_random_forest(X, y, config)
