import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from backline.errors import DegenerateGeometryError, OrientationUnknownError
from backline.geometry import (
    DEFAULT_ZONES,
    Pitch,
    Point2,
    ZoneKind,
    ZoneScheme,
    convex_hull,
    convex_hull_area,
    normalize_orientation,
    zone_codes,
    zone_membership,
)
from conftest import make_frame
from oracles import naive_hull_area

coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False)
point_sets = st.lists(st.tuples(coord, coord), min_size=3, max_size=10)


# --- convex hull ------------------------------------------------------------


def test_hull_unit_square():
    assert convex_hull_area([(0, 0), (1, 0), (1, 1), (0, 1)]) == 1.0


def test_hull_collinear_is_zero():
    assert convex_hull_area([(0, 0), (1, 1), (2, 2), (3, 3)]) == 0.0


def test_hull_quadrilateral_by_hand():
    # (1,2) lies above the diagonal y = 0.75x, so all four points are hull vertices.
    # Shoelace over the CCW ring: (0 - 0) + (12 - 0) + (8 - 3) + (0 - 0) = 17, area 8.5.
    area = convex_hull_area([(0, 0), (4, 0), (4, 3), (1, 2)])
    assert area == pytest.approx(naive_hull_area([(0, 0), (4, 0), (4, 3), (1, 2)]), abs=1e-12)
    assert area == pytest.approx(8.5, abs=1e-12)


def test_hull_needs_three_points():
    with pytest.raises(DegenerateGeometryError):
        convex_hull_area([(0, 0), (1, 1)])


def test_hull_rejects_nan():
    with pytest.raises(DegenerateGeometryError):
        convex_hull_area([(0, 0), (1, 1), (float("nan"), 0)])


def test_hull_vertices_ccw_without_collinear():
    hull = convex_hull([(0, 0), (2, 0), (1, 0), (2, 2), (0, 2), (1, 1)])
    assert hull == [(0.0, 0.0), (2.0, 0.0), (2.0, 2.0), (0.0, 2.0)]


@settings(max_examples=200, deadline=None)
@given(point_sets)
def test_hull_matches_naive_oracle(pts):
    assert convex_hull_area(pts) == pytest.approx(naive_hull_area(pts), abs=1e-9, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(point_sets, st.randoms(use_true_random=False))
def test_hull_permutation_invariant(pts, rnd):
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    assert convex_hull_area(shuffled) == pytest.approx(convex_hull_area(pts), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(point_sets, coord, coord, st.floats(0, 2 * math.pi), st.floats(0.1, 5))
def test_hull_rigid_and_scaling(pts, dx, dy, theta, k):
    a = convex_hull_area(pts)
    c, s = math.cos(theta), math.sin(theta)
    moved = [(c * x - s * y + dx, s * x + c * y + dy) for x, y in pts]
    assert convex_hull_area(moved) == pytest.approx(a, abs=1e-9 * max(1.0, a) * 10)
    scaled = [(k * x, k * y) for x, y in pts]
    assert convex_hull_area(scaled) == pytest.approx(k * k * a, rel=1e-9, abs=1e-9)


# --- zones -----------------------------------------------------------------


def test_default_zone_weights():
    w = {z.kind: z.weight for z in DEFAULT_ZONES.zones}
    assert w == {
        ZoneKind.CENTRAL_FINAL_THIRD: 0.35,
        ZoneKind.PENALTY_BOX_PROXIMITY: 0.30,
        ZoneKind.WING_POCKETS: 0.20,
        ZoneKind.BALL_CARRIER_RADIUS: 0.15,
    }
    assert [z.weight for z in DEFAULT_ZONES.zones] == [0.35, 0.30, 0.20, 0.15]


def test_zone_priority_examples():
    far = Point2(90, 10)
    assert zone_membership(Point2(20, 34), far).kind is ZoneKind.CENTRAL_FINAL_THIRD
    z = zone_membership(Point2(10, 34), Point2(12, 34))
    assert z.kind is ZoneKind.PENALTY_BOX_PROXIMITY and z.weight == 0.30
    assert zone_membership(Point2(60, 34), Point2(58, 34)).kind is ZoneKind.BALL_CARRIER_RADIUS


def test_zone_outside_everything():
    assert zone_membership(Point2(60, 34), Point2(90, 10)) is None


def test_zone_boundaries():
    pitch = Pitch()
    far = Point2(100, 0)
    # closed edges on the rectangles
    assert zone_membership(Point2(35.0, 34), far).kind is ZoneKind.CENTRAL_FINAL_THIRD
    assert zone_membership(Point2(21.5, 34 + 25.16), far).kind is ZoneKind.PENALTY_BOX_PROXIMITY
    # strict ball radius
    assert zone_membership(Point2(65.0, 34), Point2(60, 34), pitch) is None
    assert zone_membership(Point2(64.999, 34), Point2(60, 34), pitch).kind is ZoneKind.BALL_CARRIER_RADIUS
    # the penalty box itself counts as proximity
    assert zone_membership(Point2(5, 34), far).kind is ZoneKind.PENALTY_BOX_PROXIMITY
    # wing pocket beyond the box width
    assert zone_membership(Point2(30, 2), far).kind is ZoneKind.WING_POCKETS


def test_zone_scheme_validation():
    with pytest.raises(ValueError):
        ZoneScheme({ZoneKind.CENTRAL_FINAL_THIRD: 1.0})
    bad = dict(DEFAULT_ZONES.weights)
    bad[ZoneKind.WING_POCKETS] = 0.5
    with pytest.raises(ValueError):
        ZoneScheme(bad)


@settings(max_examples=300, deadline=None)
@given(st.floats(-5, 110), st.floats(-5, 73), st.floats(0, 105), st.floats(0, 68))
def test_zone_codes_agree_with_scalar_membership(x, y, bx, by):
    code = int(zone_codes(np.array([x]), np.array([y]), Point2(bx, by), Pitch())[0])
    z = zone_membership(Point2(x, y), Point2(bx, by))
    assert (code == -1) == (z is None)
    if z is not None:
        assert DEFAULT_ZONES.zones[code] == z


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 105), st.floats(0, 68), st.floats(0, 105), st.floats(0, 68))
def test_zone_is_highest_weight_containing(x, y, bx, by):
    """Independent check: evaluate every zone's region by hand, take the max weight."""
    pitch = Pitch()
    dy = abs(y - 34)
    regions = {
        ZoneKind.CENTRAL_FINAL_THIRD: 16.5 <= x <= 35 and dy <= 20.16,
        ZoneKind.PENALTY_BOX_PROXIMITY: 0 <= x <= 21.5 and dy <= 25.16,
        ZoneKind.WING_POCKETS: 0 <= x <= 35 and dy > 20.16,
        ZoneKind.BALL_CARRIER_RADIUS: math.hypot(x - bx, y - by) < 5,
    }
    inside = [k for k, v in regions.items() if v]
    z = zone_membership(Point2(x, y), Point2(bx, by), pitch)
    if not inside:
        assert z is None
    else:
        assert z.kind is max(inside, key=lambda k: DEFAULT_ZONES.weights[k])


def test_zone_rescaled_pitch():
    p = Pitch().rescaled(120.0, 80.0)
    assert p.final_third_depth == pytest.approx(35 * 120 / 105)
    assert p.penalty_box_width == pytest.approx(40.32 * 80 / 68)
    # the same relative spot lands in the same zone
    assert zone_membership(Point2(20 * 120 / 105, 40), Point2(110, 5), p).kind is ZoneKind.CENTRAL_FINAL_THIRD


# --- orientation -------------------------------------------------------------


def test_normalize_reflects_through_center():
    f = make_frame(home=[(100, 30)], ball=(52.5, 34))
    out = normalize_orientation(f, False)
    p = out.players[0].position
    assert (p.x, p.y) == (5.0, 38.0)
    assert (out.ball.x, out.ball.y) == (52.5, 34.0)
    assert out.canonical


def test_normalize_already_canonical_is_identity():
    f = make_frame(home=[(10, 20)], ball=(30, 30))
    out = normalize_orientation(f, True)
    assert out.players == f.players and out.ball == f.ball


def test_normalize_unknown_direction():
    with pytest.raises(OrientationUnknownError):
        normalize_orientation(make_frame(home=[(1, 1)]), None)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 105), st.floats(0, 68)), min_size=1, max_size=6), st.booleans())
def test_normalize_idempotent(pts, right):
    f = make_frame(home=pts)
    once = normalize_orientation(f, right)
    assert normalize_orientation(once, right) == once
    assert normalize_orientation(once, not right) == once
