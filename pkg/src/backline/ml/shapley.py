"""Exact interventional Shapley values by coalition enumeration.

For an instance x and background rows B, the value of coalition S is
``v(S) = mean_b f(x_S, b_rest)``. With a handful of features every coalition
can be enumerated, so the efficiency, symmetry and null-player axioms hold up
to floating point.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import pandas as pd
from scipy.stats import spearmanr

from backline.errors import ValidationError


@dataclass
class Attribution:
    phi: np.ndarray  # (n_instances, n_features)
    baseline: float
    fx: np.ndarray
    feature_names: list

    @property
    def mean_abs(self) -> np.ndarray:
        return np.abs(self.phi).mean(axis=0)


def _coalitions(n: int) -> np.ndarray:
    return np.array(list(itertools.product([False, True], repeat=n)), dtype=bool)


def shapley_values(predict: Callable, X, background, feature_names: Sequence[str] | None = None) -> Attribution:
    """Shapley values of ``predict`` (raw model output) for every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    B = np.asarray(background, dtype=float)
    if B.ndim != 2 or len(B) == 0:
        raise ValidationError("background sample is empty")
    n = X.shape[1]
    masks = _coalitions(n)  # (2^n, n)
    size = masks.sum(axis=1)
    key = {tuple(m): i for i, m in enumerate(masks)}
    weight = np.array([math.factorial(s) * math.factorial(n - s - 1) / math.factorial(n) for s in range(n)])
    baseline = float(np.mean(predict(B)))
    phi = np.zeros_like(X)
    fx = np.zeros(len(X))
    for r, x in enumerate(X):
        # rows: coalition-major, background-minor
        mixed = np.where(masks[:, None, :], x[None, None, :], B[None, :, :]).reshape(-1, n)
        v = np.asarray(predict(mixed), dtype=float).reshape(len(masks), len(B)).mean(axis=1)
        fx[r] = v[-1]
        for i in range(n):
            without = np.flatnonzero(~masks[:, i])
            with_i = [key[tuple(np.where(np.arange(n) == i, True, masks[j]))] for j in without]
            phi[r, i] = np.sum(weight[size[without]] * (v[with_i] - v[without]))
    names = list(feature_names) if feature_names is not None else [f"f{i}" for i in range(n)]
    return Attribution(phi, baseline, fx, names)


def importance_comparison(model, attribution: Attribution) -> tuple[pd.DataFrame, float]:
    """Gain importance next to mean |phi| with ranks; returns (table, Spearman rho of the two)."""
    gain = np.asarray(model.feature_importances_, dtype=float)
    shap = attribution.mean_abs
    shap_share = shap / shap.sum() if shap.sum() > 0 else shap
    table = pd.DataFrame(
        {
            "feature": attribution.feature_names,
            "gain_importance": gain,
            "mean_abs_shap": shap,
            "shap_share": shap_share,
        }
    )
    table["gain_rank"] = table["gain_importance"].rank(ascending=False, method="min").astype(int)
    table["shap_rank"] = table["mean_abs_shap"].rank(ascending=False, method="min").astype(int)
    rho = spearmanr(gain, shap).statistic if np.ptp(gain) > 0 and np.ptp(shap) > 0 else float("nan")
    return table.sort_values(["shap_rank", "feature"]).reset_index(drop=True), float(rho)
