"""Sequence-level aggregation, standardization, descriptives and outlier screening."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from backline.errors import EmptySequenceError, NumericalError, ValidationError
from backline.indicators import INDICATORS, FrameIndicators


class ZeroVarianceError(NumericalError):
    pass


@dataclass
class FeatureVector:
    seq_id: str
    team: str
    outcome: int
    raw: dict
    z: Optional[dict] = None


def aggregate_means(
    frame_indicators: Sequence[FrameIndicators], seq_id: str = "", team: str = "", outcome: int = -1
) -> FeatureVector:
    """Arithmetic mean of each indicator over the sequence frames."""
    if len(frame_indicators) == 0:
        raise EmptySequenceError(f"sequence {seq_id!r} has no frames")
    raw = {name: float(np.mean([getattr(f, name) for f in frame_indicators])) for name in INDICATORS}
    return FeatureVector(seq_id, team, outcome, raw)


def feature_table(vectors: Sequence[FeatureVector]) -> pd.DataFrame:
    rows = []
    for v in vectors:
        row = {"seq_id": v.seq_id, "team": v.team, "outcome": v.outcome, **v.raw}
        if v.z is not None:
            row.update({f"z_{k}": val for k, val in v.z.items()})
        rows.append(row)
    return pd.DataFrame(rows, columns=None if rows else ["seq_id", "team", "outcome", *INDICATORS])


@dataclass
class Standardizer:
    mean: dict = field(default_factory=dict)
    std: dict = field(default_factory=dict)

    def transform(self, df: pd.DataFrame) -> pd.DataFrame:
        out = df.copy()
        for k in self.mean:
            out[f"z_{k}"] = (df[k] - self.mean[k]) / self.std[k]
        return out

    def to_dict(self) -> dict:
        return {"mean": dict(self.mean), "std": dict(self.std)}


def standardize(df: pd.DataFrame, features: Sequence[str] = INDICATORS) -> tuple[pd.DataFrame, Standardizer]:
    """Add ``z_<feature>`` columns using the sample mean and sample (n-1) std.

    Only sequence-level tables are accepted (one row per ``seq_id``), which keeps
    aggregation ahead of standardization.
    """
    if "seq_id" in df and df["seq_id"].duplicated().any():
        raise ValidationError("standardize expects one row per sequence; aggregate frame features first")
    if len(df) < 2:
        raise ValidationError("standardize needs at least two rows")
    fit = Standardizer()
    for k in features:
        x = df[k].to_numpy(dtype=float)
        sd = float(np.std(x, ddof=1))
        if not sd > 0:
            raise ZeroVarianceError(f"feature {k!r} has zero variance")
        fit.mean[k] = float(np.mean(x))
        fit.std[k] = sd
    return fit.transform(df), fit


@dataclass(frozen=True)
class Quartiles:
    q1: float
    median: float
    q3: float
    lower_fence: float
    upper_fence: float

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1


def quartiles_and_fences(values, k: float = 1.5, method: str = "linear") -> Quartiles:
    """Quartiles (linear interpolation between order statistics by default) and Tukey fences."""
    x = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(x, [25, 50, 75], method=method)
    iqr = q3 - q1
    return Quartiles(float(q1), float(med), float(q3), float(q1 - k * iqr), float(q3 + k * iqr))


def descriptives(df: pd.DataFrame, features: Sequence[str] = INDICATORS) -> pd.DataFrame:
    rows = {}
    for k in features:
        x = df[k].to_numpy(dtype=float)
        q = quartiles_and_fences(x)
        rows[k] = {
            "min": float(x.min()),
            "q1": q.q1,
            "median": q.median,
            "q3": q.q3,
            "max": float(x.max()),
            "mean": float(x.mean()),
            "sd": float(np.std(x, ddof=1)) if len(x) > 1 else float("nan"),
            "range": float(x.max() - x.min()),
        }
    return pd.DataFrame(rows).T


def outlier_report(
    df: pd.DataFrame, features: Sequence[str] = INDICATORS, z_threshold: float = 3.0, k: float = 1.5
) -> dict:
    """Per feature: |z| > threshold count, IQR-fence count and the fences. Nothing is removed."""
    out = {}
    for name in features:
        x = df[name].to_numpy(dtype=float)
        q = quartiles_and_fences(x, k)
        sd = np.std(x, ddof=1) if len(x) > 1 else 0.0
        z = (x - x.mean()) / sd if sd > 0 else np.zeros_like(x)
        out[name] = {
            "z_outliers": int(np.sum(np.abs(z) > z_threshold)),
            "iqr_outliers": int(np.sum((x < q.lower_fence) | (x > q.upper_fence))),
            "lower_fence": q.lower_fence,
            "upper_fence": q.upper_fence,
        }
    return out


def correlation_matrix(df: pd.DataFrame, features: Sequence[str] = INDICATORS) -> pd.DataFrame:
    """Pearson correlations between the features."""
    m = np.corrcoef(df[list(features)].to_numpy(dtype=float), rowvar=False)
    return pd.DataFrame(np.clip(m, -1.0, 1.0), index=list(features), columns=list(features))
