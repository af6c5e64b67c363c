"""Classification metrics: rank-based ROC AUC and thresholded confusion metrics."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy.stats import rankdata


def roc_auc(y_true, scores) -> float:
    """Mann-Whitney AUC with mid-ranks, so ties count one half."""
    y = np.asarray(y_true)
    s = np.asarray(scores, dtype=float)
    n1 = int(np.sum(y == 1))
    n0 = len(y) - n1
    if n1 == 0 or n0 == 0:
        return float("nan")
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n1 * (n1 + 1) / 2.0
    return float(u / (n1 * n0))


@dataclass
class EvalReport:
    n: int
    roc_auc: float
    accuracy: float
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    tn: int
    fn: int
    threshold: float = 0.5
    cv_mean: Optional[float] = None
    cv_std: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def classification_report(y_true, proba, threshold: float = 0.5) -> EvalReport:
    y = np.asarray(y_true).astype(int)
    p = np.asarray(proba, dtype=float)
    pred = (p >= threshold).astype(int)
    tp = int(np.sum((pred == 1) & (y == 1)))
    fp = int(np.sum((pred == 1) & (y == 0)))
    tn = int(np.sum((pred == 0) & (y == 0)))
    fn = int(np.sum((pred == 0) & (y == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return EvalReport(
        n=len(y),
        roc_auc=roc_auc(y, p),
        accuracy=(tp + tn) / len(y) if len(y) else float("nan"),
        precision=precision,
        recall=recall,
        f1=f1,
        tp=tp,
        fp=fp,
        tn=tn,
        fn=fn,
        threshold=threshold,
    )


def evaluate(model, X, y, threshold: float = 0.5) -> EvalReport:
    return classification_report(y, model.predict_proba(X), threshold)
