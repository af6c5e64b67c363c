import numpy as np
import pandas as pd
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from backline.errors import DegenerateDesignError, NumericalError
from backline.inference import (
    SOURCES,
    alpha_star,
    anova_table,
    anova_two_way,
    bonferroni,
    posthoc,
    ttest_independent,
)
from backline.special import f_sf, reg_inc_beta, t_cdf, t_two_sided
from oracles import balanced_two_way_ss, type2_ss_normal_equations


def _frame(cells: dict) -> pd.DataFrame:
    rows = [(("A", "B")[a], b, x) for (a, b), xs in cells.items() for x in xs]
    return pd.DataFrame(rows, columns=["team", "outcome", "v"])


def _rows(df, feature="v"):
    return {r.source: r for r in anova_two_way(df, feature)}


# --- ANOVA -------------------------------------------------------------------------------


def test_balanced_anova_against_textbook():
    rng = np.random.default_rng(0)
    cells = {(a, b): list(rng.normal(a + 0.5 * b + 0.7 * a * b, 1.0, size=12)) for a in (0, 1) for b in (0, 1)}
    want = balanced_two_way_ss(cells)
    got = _rows(_frame(cells))
    assert got["Team"].ss == pytest.approx(want["ss_a"], rel=1e-9)
    assert got["Outcome"].ss == pytest.approx(want["ss_b"], rel=1e-9)
    assert got["Team×Outcome"].ss == pytest.approx(want["ss_ab"], rel=1e-9)
    assert got["Team"].F == pytest.approx(want["F_a"], rel=1e-9)
    assert got["Team×Outcome"].F == pytest.approx(want["F_ab"], rel=1e-9)
    assert got["Team"].df_residual == want["df_e"] == 44
    # balanced: the components add up to the total
    total = sum(r.ss for r in got.values()) + want["ss_e"]
    assert total == pytest.approx(want["ss_t"], rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(2, 15), min_size=4, max_size=4), st.integers(0, 10_000))
def test_unbalanced_type2_against_normal_equations(sizes, seed):
    rng = np.random.default_rng(seed)
    cells = {}
    for (a, b), n in zip([(0, 0), (0, 1), (1, 0), (1, 1)], sizes):
        cells[(a, b)] = list(rng.normal(0.3 * a - 0.4 * b + 0.5 * a * b, 1.0, size=n))
    df = _frame(cells)
    got = _rows(df)
    want = type2_ss_normal_equations((df.team == "B").astype(float), df.outcome.astype(float), df.v)
    for s in SOURCES:
        assert got[s].ss == pytest.approx(want[s], rel=1e-7, abs=1e-9)
        assert got[s].F == pytest.approx(want[s] / (want["resid"] / (len(df) - 4)), rel=1e-7, abs=1e-9)
        assert 0.0 <= got[s].partial_eta_sq <= 1.0
        assert 0.0 <= got[s].p_unc <= 1.0


def test_one_df_effect_f_equals_t_squared():
    """With one group factor, the F of a 1-df effect equals the pooled t squared."""
    rng = np.random.default_rng(1)
    cells = {(a, b): list(rng.normal(b, 1.0, size=10)) for a in (0, 1) for b in (0, 1)}
    # identical team cells: the model reduces to outcome only, check against a pooled t on that model
    cells[(1, 0)], cells[(1, 1)] = list(cells[(0, 0)]), list(cells[(0, 1)])
    df = _frame(cells)
    F = _rows(df)["Outcome"].F
    y1, y0 = df.v[df.outcome == 1], df.v[df.outcome == 0]
    # residual df differ (n-4 vs n-2); rescale the pooled variance accordingly
    sp2 = (np.sum((y1 - y1.mean()) ** 2) + np.sum((y0 - y0.mean()) ** 2)) / (len(df) - 4)
    t = (y1.mean() - y0.mean()) / np.sqrt(sp2 * (1 / len(y1) + 1 / len(y0)))
    assert F == pytest.approx(t**2, rel=1e-9)


def test_constant_feature_is_numerical_error():
    df = _frame({(a, b): [1.0, 1.0, 1.0] for a in (0, 1) for b in (0, 1)})
    with pytest.raises(NumericalError):
        anova_two_way(df, "v")


def test_empty_cell_is_degenerate():
    df = _frame({(0, 0): [1, 2, 3], (0, 1): [2, 3, 4], (1, 0): [0, 1, 5]})
    with pytest.raises(DegenerateDesignError):
        anova_two_way(df, "v")


def test_single_level_is_degenerate():
    df = _frame({(0, 0): [1, 2, 3], (0, 1): [2, 3, 4]})
    with pytest.raises(DegenerateDesignError):
        anova_two_way(df, "v")


def test_anova_table_shape():
    rng = np.random.default_rng(2)
    df = _frame({(a, b): list(rng.normal(size=8)) for a in (0, 1) for b in (0, 1)})
    df["w"] = rng.normal(size=len(df))
    t = anova_table(df, ["v", "w"])
    assert len(t) == 6 and list(t.source[:3]) == list(SOURCES)


# --- t-tests and correction ------------------------------------------------------------------


def test_identical_groups():
    r = ttest_independent([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r.t == 0.0 and r.p == pytest.approx(1.0)


def test_zero_variance_groups():
    with pytest.raises(NumericalError):
        ttest_independent([2.0, 2.0], [2.0, 2.0, 2.0])


def test_clear_difference():
    rng = np.random.default_rng(3)
    r = ttest_independent(rng.normal(0, 1, 100), rng.normal(1, 1, 100))
    assert r.p < 0.001


@pytest.mark.parametrize("equal_var", [False, True])
def test_ttest_against_scipy(equal_var):
    rng = np.random.default_rng(4)
    a, b = rng.normal(0, 1, 23), rng.normal(0.4, 2, 31)
    r = ttest_independent(a, b, equal_var=equal_var)
    ref = scipy.stats.ttest_ind(a, b, equal_var=equal_var)
    assert r.t == pytest.approx(ref.statistic, rel=1e-10)
    assert r.p == pytest.approx(ref.pvalue, rel=1e-8)


def test_bonferroni():
    np.testing.assert_allclose(bonferroni([0.01], 4), [0.04])
    np.testing.assert_allclose(bonferroni([0.3], 4), [1.0])
    np.testing.assert_allclose(bonferroni([0.01, 0.02]), [0.02, 0.04])
    assert alpha_star(0.05, 4) == 0.0125


def test_posthoc_only_for_significant_interactions():
    rng = np.random.default_rng(5)
    n = 40
    cells = {(0, 0): rng.normal(0, 1, n), (0, 1): rng.normal(2, 1, n), (1, 0): rng.normal(2, 1, n), (1, 1): rng.normal(0, 1, n)}
    df = _frame({k: list(v) for k, v in cells.items()})
    df["w"] = rng.normal(size=len(df))
    table = anova_table(df, ["v", "w"])
    rows = posthoc(df, table, ["v", "w"])
    inter = table[table.source == "Team×Outcome"].set_index("feature").p_unc
    assert inter["v"] < 0.05
    assert {r.feature for r in rows} == {f for f in ("v", "w") if inter[f] < 0.05}
    for r in rows:
        assert r.m == 4 and r.p_bonf == pytest.approx(min(1.0, 4 * r.p_orig))
        assert r.significant == (r.p_orig < 0.0125)


# --- special functions --------------------------------------------------------------------


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1))
def test_beta_uniform(x):
    assert reg_inc_beta(x, 1.0, 1.0) == pytest.approx(x, abs=1e-12)


@pytest.mark.parametrize("a", [0.5, 1.0, 3.0, 40.0])
def test_beta_symmetric_midpoint(a):
    assert reg_inc_beta(0.5, a, a) == pytest.approx(0.5, abs=1e-12)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0.1, 200), st.floats(0.1, 200))
def test_beta_against_scipy(x, a, b):
    assert reg_inc_beta(x, a, b) == pytest.approx(float(scipy.special.betainc(a, b, x)), rel=1e-8, abs=1e-12)


def test_known_critical_values():
    assert f_sf(4.965, 1, 10) == pytest.approx(0.05, abs=1e-4)
    assert t_cdf(2.228, 10) == pytest.approx(0.975, abs=1e-4)
    assert t_two_sided(0.0, 7) == pytest.approx(1.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 60), st.integers(1, 5), st.integers(1, 500))
def test_f_sf_against_scipy(f, d1, d2):
    assert f_sf(f, d1, d2) == pytest.approx(float(scipy.stats.f.sf(f, d1, d2)), rel=1e-7, abs=1e-13)
