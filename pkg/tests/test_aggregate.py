import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backline.aggregate import (
    ZeroVarianceError,
    aggregate_means,
    correlation_matrix,
    descriptives,
    feature_table,
    outlier_report,
    quartiles_and_fences,
    standardize,
)
from backline.errors import EmptySequenceError, ValidationError
from backline.indicators import INDICATORS, FrameIndicators
from backline.pipeline import aggregate_frame_features
from oracles import quantile_type7


def _fi(fid, s, p, sp, la, lr):
    return FrameIndicators(fid, s, p, sp, la, lr)


def _table(rng, n=50):
    return pd.DataFrame({"seq_id": [f"s{i:03d}" for i in range(n)], "team": "A", "outcome": 1,
                         **{k: rng.normal(size=n) for k in INDICATORS}})


def test_means_by_hand():
    v = aggregate_means([_fi(0, 10.0, 0, 0.1, 20.0, 5.0), _fi(1, 20.0, 3, -0.3, 22.0, 9.0)], "x", "A", 1)
    assert v.raw == pytest.approx({"stretch_index": 15.0, "pressure_index": 1.5, "space_score": -0.1,
                                   "line_height_abs": 21.0, "line_height_rel": 7.0})
    assert (v.seq_id, v.team, v.outcome) == ("x", "A", 1)


def test_empty_sequence():
    with pytest.raises(EmptySequenceError):
        aggregate_means([], "x")


def test_standardize_two_points():
    df = pd.DataFrame({"seq_id": ["a", "b"], "v": [0.0, 10.0]})
    out, fit = standardize(df, ["v"])
    np.testing.assert_allclose(out["z_v"], [-1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-12)
    assert fit.mean == {"v": 5.0}


def test_standardize_moments():
    out, _ = standardize(_table(np.random.default_rng(1)))
    for k in INDICATORS:
        assert abs(out[f"z_{k}"].mean()) <= 1e-12
        assert out[f"z_{k}"].std(ddof=1) == pytest.approx(1.0, abs=1e-12)


def test_standardize_zero_variance():
    df = pd.DataFrame({"seq_id": list("abc"), "v": [2.0, 2.0, 2.0]})
    with pytest.raises(ZeroVarianceError):
        standardize(df, ["v"])


def test_standardize_refuses_frame_level_table():
    df = pd.DataFrame({"seq_id": ["a", "a", "b"], "v": [1.0, 2.0, 3.0]})
    with pytest.raises(ValidationError):
        standardize(df, ["v"])


def test_aggregation_precedes_standardization():
    """Per-sequence means of raw frames, then z-scores across sequences."""
    ff = pd.DataFrame({
        "seq_id": ["a", "a", "a", "b", "c"],
        "frame_id": [0, 1, 2, 0, 0],
        "team": ["A", "A", "A", "B", "B"],
        "outcome": [1, 1, 1, 0, 0],
        "stretch_index": [1.0, 2.0, 3.0, 10.0, 4.0],
        "pressure_index": [0, 1, 2, 3, 0],
        "space_score": [0.1, 0.2, 0.3, -0.1, 0.0],
        "line_height_abs": [10.0, 11.0, 12.0, 30.0, 20.0],
        "line_height_rel": [1.0, 1.0, 1.0, 5.0, 2.0],
    })
    table, fit = aggregate_frame_features(ff)
    assert list(table.seq_id) == ["a", "b", "c"]
    means = np.array([2.0, 10.0, 4.0])
    np.testing.assert_allclose(table.stretch_index, means)
    np.testing.assert_allclose(table.z_stretch_index, (means - means.mean()) / means.std(ddof=1), atol=1e-12)
    assert fit["std"]["stretch_index"] == pytest.approx(means.std(ddof=1))


def test_quartiles_linear():
    q = quartiles_and_fences([1, 2, 3, 4])
    assert (q.q1, q.median, q.q3) == (1.75, 2.5, 3.25)


def test_pressure_fences():
    q = quartiles_and_fences([2, 2, 2, 3, 3, 3, 2, 3])
    assert (q.q1, q.q3) == (2.0, 3.0)
    assert (q.lower_fence, q.upper_fence) == (0.5, 4.5)


def test_constant_data_fences_collapse():
    q = quartiles_and_fences([7.0] * 9)
    assert q.iqr == 0 and q.lower_fence == q.upper_fence == 7.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60))
def test_quartiles_against_oracle(xs):
    q = quartiles_and_fences(xs)
    assert q.q1 == pytest.approx(quantile_type7(xs, 0.25), rel=1e-12, abs=1e-9)
    assert q.median == pytest.approx(quantile_type7(xs, 0.5), rel=1e-12, abs=1e-9)
    assert q.q3 == pytest.approx(quantile_type7(xs, 0.75), rel=1e-12, abs=1e-9)


def test_descriptives_columns():
    d = descriptives(_table(np.random.default_rng(2)))
    assert list(d.index) == list(INDICATORS)
    assert set(d.columns) == {"min", "q1", "median", "q3", "max", "mean", "sd", "range"}
    assert (d["range"] == d["max"] - d["min"]).all()


def test_correlation_properties():
    rng = np.random.default_rng(3)
    df = _table(rng, 5000)
    df["line_height_rel"] = -df["stretch_index"]
    c = correlation_matrix(df).to_numpy()
    np.testing.assert_allclose(np.diag(c), 1.0, atol=1e-12)
    np.testing.assert_allclose(c, c.T, atol=1e-15)
    assert c[0, 4] == pytest.approx(-1.0, abs=1e-12)
    assert abs(c[0, 1]) < 0.05
    assert np.linalg.eigvalsh(c).min() >= -1e-10


def test_outliers_count_and_permutation_invariance():
    rng = np.random.default_rng(4)
    df = _table(rng, 200)
    df.loc[7, "space_score"] = 50.0
    rep = outlier_report(df)
    assert rep["space_score"]["z_outliers"] >= 1 and rep["space_score"]["iqr_outliers"] >= 1
    shuffled = df.sample(frac=1.0, random_state=0).reset_index(drop=True)
    again = outlier_report(shuffled)
    for k in INDICATORS:
        assert again[k]["z_outliers"] == rep[k]["z_outliers"]
        assert again[k]["iqr_outliers"] == rep[k]["iqr_outliers"]
        assert again[k]["lower_fence"] == pytest.approx(rep[k]["lower_fence"], abs=1e-12)
    assert len(df) == 200  # flagged, never dropped


def test_feature_table_empty_has_columns():
    assert list(feature_table([]).columns) == ["seq_id", "team", "outcome", *INDICATORS]
