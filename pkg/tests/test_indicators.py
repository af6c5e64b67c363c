import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backline.geometry import Point2
from backline.indicators import (
    IndicatorConfig,
    compute_sequence_indicators,
    line_height_abs,
    line_height_rel,
    pda,
    pressure_index,
    space_score,
    stretch_index,
)

FAR_BALL = Point2(95.0, 60.0)
pt = st.tuples(st.floats(0, 105), st.floats(0, 68))
four = st.lists(pt, min_size=4, max_size=4)
upto3 = st.lists(pt, min_size=0, max_size=3)
team10 = st.lists(pt, min_size=0, max_size=10)


# --- stretch -------------------------------------------------------------------


def test_stretch_by_hand():
    defenders = [(0, 0), (10, 0), (10, 8), (0, 8)]  # hull 80 m^2
    attackers = [(-6, 0), (16, 0), (10, 14)]  # each 6 m from its closest defender
    assert pda(defenders, attackers) == pytest.approx(6.0)
    assert stretch_index(defenders, attackers) == pytest.approx(43.0, abs=1e-12)


def test_stretch_degenerate_hull():
    assert stretch_index([(5, 5)] * 4, [(9, 5)]) == pytest.approx(2.0, abs=1e-12)


def test_stretch_no_attackers_uses_zero_pda():
    assert stretch_index([(0, 0), (2, 0), (2, 2), (0, 2)], []) == pytest.approx(2.0)


def test_stretch_needs_four():
    with pytest.raises(ValueError):
        stretch_index([(0, 0), (1, 0), (1, 1)], [(3, 3)])


@settings(max_examples=200, deadline=None)
@given(four, st.lists(pt, min_size=1, max_size=3), st.floats(0, 1))
def test_stretch_affine_in_lambda(d, a, lam):
    area = stretch_index(d, a, IndicatorConfig(lam=1.0))
    p = stretch_index(d, a, IndicatorConfig(lam=0.0))
    got = stretch_index(d, a, IndicatorConfig(lam=lam))
    assert got == pytest.approx(lam * area + (1 - lam) * p, abs=1e-12 * max(1.0, area))


# --- pressure ------------------------------------------------------------------


def test_pressure_zero_when_far():
    assert pressure_index([(0, 0), (0, 10), (0, 20), (0, 30)], [(20, 0), (20, 10), (20, 20)]) == 0


def test_pressure_boundary_is_strict():
    assert pressure_index([(0, 0), (0, 10), (0, 20), (0, 30)], [(3.0, 0)]) == 0
    assert pressure_index([(0, 0), (0, 10), (0, 20), (0, 30)], [(2.999, 0)]) == 1


def test_pressure_all_within_radius():
    d = [(0, 0), (0, 10), (0, 20), (0, 30)]
    assert pressure_index(d, [(1, 0), (2.5, 10), (2.9, 20)]) == 3


@settings(max_examples=300, deadline=None)
@given(four, upto3, st.floats(0, 10), st.floats(0, 10))
def test_pressure_range_and_monotone_in_radius(d, a, r1, r2):
    lo, hi = sorted((r1, r2))
    p_lo = pressure_index(d, a, IndicatorConfig(pressure_radius_m=lo))
    p_hi = pressure_index(d, a, IndicatorConfig(pressure_radius_m=hi))
    assert p_lo in {0, 1, 2, 3} and p_hi in {0, 1, 2, 3}
    assert p_lo <= p_hi


def test_pressure_range_on_many_random_frames():
    rng = np.random.default_rng(0)
    d = rng.uniform(0, 30, size=(100_000, 4, 2))
    a = rng.uniform(0, 30, size=(100_000, 3, 2))
    dist = np.min(np.hypot(*(a[:, :, None, :] - d[:, None, :, :]).transpose(3, 0, 1, 2)), axis=2)
    counts = np.sum(dist < 3.0, axis=1)
    assert set(np.unique(counts)) <= {0, 1, 2, 3}
    for i in range(200):
        assert pressure_index(d[i], a[i]) == counts[i]


# --- space -------------------------------------------------------------------------


def test_space_empty_is_zero():
    assert space_score([], [], FAR_BALL) == 0.0
    assert space_score([(60, 34)], [(70, 30)], FAR_BALL) == 0.0


def test_space_by_hand_and_mirror():
    d = [(20, 30), (25, 36)]
    a = [(30, 34)]
    assert space_score(d, a, FAR_BALL) == pytest.approx(0.35 * 1 / 4, abs=1e-15)
    assert space_score(a, d, FAR_BALL) == pytest.approx(-0.0875, abs=1e-15)


def test_space_counts_each_player_once():
    # inside both the proximity zone and the ball radius: only the 0.30 zone counts
    s = space_score([(10, 34)], [], Point2(11, 34))
    assert s == pytest.approx(0.30 * 1 / 2)


@settings(max_examples=200, deadline=None)
@given(team10, team10, pt)
def test_space_antisymmetric(d, a, ball):
    s = space_score(d, a, Point2(*ball))
    assert space_score(a, d, Point2(*ball)) == pytest.approx(-s, abs=1e-12)
    assert abs(s) < 1.0


def test_space_not_translation_invariant():
    d = [(20, 34), (22, 30)]
    a = [(60, 34)]
    shifted_d = [(x + 40, y) for x, y in d]
    shifted_a = [(x + 40, y) for x, y in a]
    assert space_score(d, a, FAR_BALL) != space_score(shifted_d, shifted_a, Point2(FAR_BALL.x + 40, FAR_BALL.y))


# --- line height ---------------------------------------------------------------------


def test_line_height_examples():
    assert line_height_abs([(10, 0), (12, 5), (14, 9), (16, 30)]) == 13.0
    assert line_height_abs([(0, 0)] * 4) == 0.0
    assert line_height_rel(Point2(30, 34), 13.0) == 17.0
    assert line_height_rel(Point2(30, 34), 30.0) == 0.0
    assert line_height_rel(Point2(30, 34), 40.0) == -10.0


@settings(max_examples=200, deadline=None)
@given(four, upto3, pt, st.floats(-20, 20), st.floats(-20, 20))
def test_translation_invariance(d, a, ball, dx, dy):
    move = lambda ps: [(x + dx, y + dy) for x, y in ps]
    ball2 = Point2(ball[0] + dx, ball[1] + dy)
    s1, s2 = stretch_index(d, a), stretch_index(move(d), move(a))
    assert s2 == pytest.approx(s1, abs=1e-9 * max(1.0, s1))
    assert pressure_index(d, a) == pressure_index(move(d), move(a)) or any(
        math.isclose(min(math.dist(p, q) for q in d), 3.0, abs_tol=1e-9) for p in a
    )
    L1, L2 = line_height_abs(d), line_height_abs(move(d))
    assert L2 == pytest.approx(L1 + dx, abs=1e-9)
    assert line_height_rel(ball2, L2) == pytest.approx(line_height_rel(Point2(*ball), L1), abs=1e-9)


# --- whole sequences -------------------------------------------------------------------


def test_sequence_indicators_match_scalar_functions(small_sequences):
    """The vectorized per-sequence path against the scalar per-frame functions."""
    for seq in small_sequences[:6]:
        fis = compute_sequence_indicators(seq)
        assert len(fis) == len(seq.frames)
        attack = "away" if seq.losing_team == "home" else "home"
        for k in range(0, len(seq.frames), 17):
            f = seq.frames[k]
            d = [f.player(pid).position for pid in seq.back_four[k]]
            att = sorted(f.outfield(attack), key=lambda p: (p.position.x, p.player_id))[:3]
            a = [p.position for p in att]
            fi = fis[k]
            assert fi.frame_id == f.frame_id
            assert fi.stretch_index == pytest.approx(stretch_index(d, a), rel=1e-12, abs=1e-12)
            assert fi.pressure_index == pressure_index(d, a)
            assert fi.space_score == pytest.approx(
                space_score([p.position for p in f.outfield(seq.losing_team)], [p.position for p in f.outfield(attack)], f.ball),
                abs=1e-12,
            )
            assert fi.line_height_abs == pytest.approx(line_height_abs(d), abs=1e-12)
            assert not fi.degraded


def test_line_identity_every_frame(small_sequences):
    for seq in small_sequences:
        for fi, bx in zip(compute_sequence_indicators(seq), seq.frames.ball[:, 0]):
            assert abs(fi.line_height_rel + fi.line_height_abs - bx) <= 1e-12
            assert 0 <= fi.pressure_index <= 3


def test_config_validation():
    with pytest.raises(ValueError):
        IndicatorConfig(lam=1.5)
    with pytest.raises(ValueError):
        IndicatorConfig(epsilon=0)
