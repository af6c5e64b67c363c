"""Team x Outcome two-way ANOVA (Type II), within-team t-tests, Bonferroni."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from backline.errors import DegenerateDesignError, NumericalError, ValidationError
from backline.special import f_sf, t_two_sided

SOURCES = ("Team", "Outcome", "Team×Outcome")


@dataclass(frozen=True)
class AnovaRow:
    feature: str
    source: str
    ss: float
    df_effect: int
    df_residual: int
    F: float
    p_unc: float
    partial_eta_sq: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float


@dataclass(frozen=True)
class PosthocRow:
    team: str
    feature: str
    t: float
    df: float
    p_orig: float
    p_bonf: float
    m: int
    significant: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _effect_code(values: pd.Series, name: str) -> np.ndarray:
    levels = sorted(values.unique().tolist())
    if len(levels) != 2:
        raise DegenerateDesignError(f"factor {name!r} needs exactly two levels, got {levels}")
    return np.where(values.to_numpy() == levels[0], -1.0, 1.0)


def _rss(X: np.ndarray, y: np.ndarray) -> float:
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = y - X @ beta
    return float(r @ r)


def anova_two_way(
    df: pd.DataFrame, feature: str, team_col: str = "team", outcome_col: str = "outcome"
) -> list[AnovaRow]:
    """Type II two-way ANOVA of ``feature`` on team and outcome.

    Sums of squares come from nested OLS fits with effect (-1/+1) coding: each
    main effect is adjusted for the other, the interaction for both.
    """
    data = df[[team_col, outcome_col, feature]].dropna()
    y = data[feature].to_numpy(dtype=float)
    a = _effect_code(data[team_col], team_col)
    b = _effect_code(data[outcome_col], outcome_col)
    for sa in (-1.0, 1.0):
        for sb in (-1.0, 1.0):
            if np.sum((a == sa) & (b == sb)) < 2:
                raise DegenerateDesignError(f"{feature}: a team x outcome cell has fewer than 2 observations")
    one = np.ones_like(y)
    rss_a = _rss(np.column_stack([one, a]), y)
    rss_b = _rss(np.column_stack([one, b]), y)
    rss_ab = _rss(np.column_stack([one, a, b]), y)
    rss_full = _rss(np.column_stack([one, a, b, a * b]), y)
    df_res = len(y) - 4
    scale = max(float(np.sum((y - y.mean()) ** 2)), 1.0)
    if rss_full <= 1e-24 * scale or df_res < 1:
        raise NumericalError(f"{feature}: zero residual variance")
    ms_res = rss_full / df_res
    rows = []
    for source, ss in zip(SOURCES, (rss_b - rss_ab, rss_a - rss_ab, rss_ab - rss_full)):
        ss = max(ss, 0.0)
        F = ss / ms_res
        rows.append(AnovaRow(feature, source, ss, 1, df_res, F, f_sf(F, 1, df_res), ss / (ss + rss_full)))
    return rows


def anova_table(df: pd.DataFrame, features: Sequence[str], **kw) -> pd.DataFrame:
    return pd.DataFrame([r.to_dict() for f in features for r in anova_two_way(df, f, **kw)])


def ttest_independent(a, b, equal_var: bool = False) -> TTestResult:
    """Two-sided independent-samples t-test; Welch by default, pooled with ``equal_var``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValidationError("each group needs at least two observations")
    va, vb = np.var(a, ddof=1), np.var(b, ddof=1)
    diff = a.mean() - b.mean()
    if equal_var:
        dof = na + nb - 2
        sp = ((na - 1) * va + (nb - 1) * vb) / dof
        se2 = sp * (1 / na + 1 / nb)
    else:
        se2 = va / na + vb / nb
        dof = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1)) if se2 > 0 else float("nan")
    if not se2 > 0:
        raise NumericalError("both groups have zero variance; t is undefined")
    t = diff / np.sqrt(se2)
    return TTestResult(float(t), float(dof), t_two_sided(float(t), float(dof)))


def bonferroni(p_values, m: Optional[int] = None) -> np.ndarray:
    """p_adj = min(1, m * p); ``m`` defaults to the number of p-values."""
    p = np.asarray(p_values, dtype=float)
    m = p.size if m is None else m
    if m < 1:
        raise ValueError("m must be at least 1")
    return np.minimum(1.0, m * p)


def alpha_star(alpha: float, m: int) -> float:
    return alpha / m


def posthoc(
    df: pd.DataFrame,
    anova: pd.DataFrame,
    features: Sequence[str],
    alpha: float = 0.05,
    divisor: int = 4,
    team_col: str = "team",
    outcome_col: str = "outcome",
    equal_var: bool = False,
) -> list[PosthocRow]:
    """Within-team success-vs-failure t-tests for features with a significant interaction."""
    inter = anova[anova["source"] == SOURCES[2]].set_index("feature")["p_unc"]
    threshold = alpha_star(alpha, divisor)
    rows = []
    for team in sorted(df[team_col].unique()):
        sub = df[df[team_col] == team]
        for feat in features:
            if feat not in inter or not inter[feat] < alpha:
                continue
            r = ttest_independent(
                sub.loc[sub[outcome_col] == 1, feat], sub.loc[sub[outcome_col] == 0, feat], equal_var
            )
            p_adj = float(bonferroni([r.p], divisor)[0])
            rows.append(PosthocRow(team, feat, r.t, r.df, r.p, p_adj, divisor, r.p < threshold))
    return rows
