"""Stratified splitting, stratified k-fold cross-validation and the scale_pos_weight grid."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from backline.ml.metrics import classification_report, roc_auc
from backline.ml.models import GradientBoostedTrees, ModelConfig, train


def _allocate(counts: dict, total: int) -> dict:
    """Largest-remainder split of ``total`` across classes; ties favour the larger class."""
    n = sum(counts.values())
    share = {c: total * k / n for c, k in counts.items()}
    alloc = {c: math.floor(s) for c, s in share.items()}
    left = total - sum(alloc.values())
    for c in sorted(counts, key=lambda c: (-(share[c] - alloc[c]), -counts[c], c))[:left]:
        alloc[c] += 1
    return alloc


def stratified_split(y, test_fraction: float = 0.2, seed: int = 42) -> tuple[np.ndarray, np.ndarray]:
    """Train/test index arrays preserving class proportions.

    The test size is round(test_fraction * n); per-class counts come from a
    largest-remainder allocation, so on ties the minority class stays in train.
    """
    y = np.asarray(y)
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    classes = sorted(np.unique(y).tolist())
    counts = {c: int(np.sum(y == c)) for c in classes}
    alloc = _allocate(counts, int(round(test_fraction * len(y))))
    test = []
    for c in classes:
        idx = rng.permutation(np.flatnonzero(y == c))
        test.append(idx[: alloc[c]])
    test_idx = np.sort(np.concatenate(test)) if test else np.zeros(0, dtype=int)
    train_idx = np.setdiff1d(np.arange(len(y)), test_idx)
    return train_idx, test_idx


def stratified_kfold(y, k: int = 5, seed: int = 42) -> list[tuple[np.ndarray, np.ndarray]]:
    """Folds dealt round-robin per shuffled class, continuing across classes."""
    y = np.asarray(y)
    if not 2 <= k <= len(y):
        raise ValueError(f"k must lie in [2, {len(y)}]")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(len(y), dtype=int)
    offset = 0
    for c in sorted(np.unique(y).tolist()):
        idx = rng.permutation(np.flatnonzero(y == c))
        fold_of[idx] = (offset + np.arange(len(idx))) % k
        offset += len(idx)
    all_idx = np.arange(len(y))
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


@dataclass
class CVResult:
    folds: list = field(default_factory=list)
    auc_mean: float = float("nan")
    auc_std: float = float("nan")
    pooled_auc: float = float("nan")

    def to_dict(self) -> dict:
        return {
            "folds": [f.to_dict() for f in self.folds],
            "auc_mean": self.auc_mean,
            "auc_std": self.auc_std,
            "pooled_auc": self.pooled_auc,
        }


def cross_validate(X, y, config: ModelConfig, k: int = 5, threshold: float = 0.5) -> CVResult:
    """Per-fold reports plus mean/std of fold AUCs (folds with one class are skipped)
    and the AUC of pooled out-of-fold predictions."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    oof = np.full(len(y), np.nan)
    res = CVResult()
    for tr, te in stratified_kfold(y, k, config.seed):
        model = train(X[tr], y[tr], config)
        p = model.predict_proba(X[te])
        oof[te] = p
        res.folds.append(classification_report(y[te], p, threshold))
    aucs = np.array([f.roc_auc for f in res.folds])
    aucs = aucs[~np.isnan(aucs)]
    if len(aucs):
        res.auc_mean = float(aucs.mean())
        res.auc_std = float(aucs.std(ddof=1)) if len(aucs) > 1 else 0.0
    res.pooled_auc = roc_auc(y, oof)
    return res


def tune_scale_pos_weight(X, y, config: ModelConfig, factors: Sequence[float] = (0.5, 1.0, 2.0), k: int = 5) -> float:
    """Pick the multiple of n_neg/n_pos with the best mean CV AUC (first on ties)."""
    y = np.asarray(y)
    base = float(np.sum(y == 0)) / float(np.sum(y == 1))
    X = np.asarray(X, dtype=float)
    best, best_auc = base, -np.inf
    for f in factors:
        aucs = []
        for tr, te in stratified_kfold(y, k, config.seed):
            m = GradientBoostedTrees(
                config.n_estimators, config.learning_rate, config.max_depth, config.reg_lambda,
                config.min_child_weight, base * f,
            ).fit(X[tr], y[tr])
            aucs.append(roc_auc(y[te], m.predict_proba(X[te])))
        score = float(np.nanmean(aucs))
        if score > best_auc:
            best, best_auc = base * f, score
    return best
