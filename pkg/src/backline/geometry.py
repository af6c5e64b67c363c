"""Pitch coordinates, orientation normalization, tactical zones and hull areas.

Canonical coordinates are meters with the origin at a pitch corner. After
normalization the defending (possession-losing) team's own goal line sits at
``x = 0`` and that team attacks toward ``x = pitch.length``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, NamedTuple, Optional, Sequence

import numpy as np

from backline.errors import DegenerateGeometryError, OrientationUnknownError

if TYPE_CHECKING:
    from backline.ingest import Frame


class Point2(NamedTuple):
    x: float
    y: float


@dataclass(frozen=True)
class Pitch:
    length: float = 105.0
    width: float = 68.0
    penalty_box_depth: float = 16.5
    penalty_box_width: float = 40.32
    proximity_buffer: float = 5.0
    final_third_depth: float = 35.0
    ball_radius_zone: float = 5.0

    def __post_init__(self):
        if not self.length > 2 * self.final_third_depth:
            raise ValueError("pitch length must exceed twice the final third depth")
        if not self.penalty_box_width < self.width:
            raise ValueError("penalty box must be narrower than the pitch")
        if not self.penalty_box_depth < self.final_third_depth:
            raise ValueError("penalty box must be shallower than the final third")
        for name in ("proximity_buffer", "ball_radius_zone"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def rescaled(self, length: float, width: float) -> "Pitch":
        """Same pitch markings scaled proportionally to new dimensions (x by length, y by width)."""
        sx, sy = length / self.length, width / self.width
        return Pitch(
            length,
            width,
            self.penalty_box_depth * sx,
            self.penalty_box_width * sy,
            self.proximity_buffer * sx,
            self.final_third_depth * sx,
            self.ball_radius_zone * sx,
        )

    @property
    def center(self) -> Point2:
        return Point2(self.length / 2, self.width / 2)

    def in_penalty_box(self, x, y):
        """Whether canonical points lie inside the defending team's penalty box (closed)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        half = self.penalty_box_width / 2
        return (x >= 0) & (x <= self.penalty_box_depth) & (np.abs(y - self.width / 2) <= half)


class ZoneKind(enum.Enum):
    CENTRAL_FINAL_THIRD = "central_final_third"
    PENALTY_BOX_PROXIMITY = "penalty_box_proximity"
    WING_POCKETS = "wing_pockets"
    BALL_CARRIER_RADIUS = "ball_carrier_radius"


DEFAULT_ZONE_WEIGHTS = {
    ZoneKind.CENTRAL_FINAL_THIRD: 0.35,
    ZoneKind.PENALTY_BOX_PROXIMITY: 0.30,
    ZoneKind.WING_POCKETS: 0.20,
    ZoneKind.BALL_CARRIER_RADIUS: 0.15,
}


@dataclass(frozen=True)
class Zone:
    kind: ZoneKind
    weight: float


@dataclass(frozen=True)
class ZoneScheme:
    """Zone weights plus the priority order used to resolve overlaps."""

    weights: dict = field(default_factory=lambda: dict(DEFAULT_ZONE_WEIGHTS))

    def __post_init__(self):
        if set(self.weights) != set(ZoneKind):
            raise ValueError("zone weights must cover every zone kind")
        if any(not 0 < w < 1 for w in self.weights.values()):
            raise ValueError("zone weights must lie in (0, 1)")
        if abs(sum(self.weights.values()) - 1.0) > 1e-9:
            raise ValueError("zone weights must sum to 1")

    @property
    def zones(self) -> list[Zone]:
        # stable on ties: enum declaration order
        order = sorted(ZoneKind, key=lambda k: -self.weights[k])
        return [Zone(k, self.weights[k]) for k in order]


DEFAULT_ZONES = ZoneScheme()


def _contains(kind: ZoneKind, x, y, bx, by, pitch: Pitch):
    cy = pitch.width / 2
    half_box = pitch.penalty_box_width / 2
    dy = np.abs(y - cy)
    if kind is ZoneKind.CENTRAL_FINAL_THIRD:
        return (x >= pitch.penalty_box_depth) & (x <= pitch.final_third_depth) & (dy <= half_box)
    if kind is ZoneKind.PENALTY_BOX_PROXIMITY:
        return (
            (x >= 0)
            & (x <= pitch.penalty_box_depth + pitch.proximity_buffer)
            & (dy <= half_box + pitch.proximity_buffer)
        )
    if kind is ZoneKind.WING_POCKETS:
        return (x >= 0) & (x <= pitch.final_third_depth) & (dy > half_box)
    if kind is ZoneKind.BALL_CARRIER_RADIUS:
        return np.hypot(x - bx, y - by) < pitch.ball_radius_zone
    raise ValueError(kind)


def zone_codes(x, y, ball: Point2, pitch: Pitch, scheme: ZoneScheme = DEFAULT_ZONES) -> np.ndarray:
    """Vectorized zone assignment.

    Returns an integer array of the same shape as ``x`` holding the index of
    the assigned zone within ``scheme.zones`` (priority order), or -1.
    ``ball`` may hold arrays broadcastable against ``x``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    bx = np.asarray(ball[0], dtype=float)
    by = np.asarray(ball[1], dtype=float)
    codes = np.full(np.broadcast(x, y, bx, by).shape, -1, dtype=int)
    for i, zone in reversed(list(enumerate(scheme.zones))):
        hit = _contains(zone.kind, x, y, bx, by, pitch)
        codes = np.where(hit & np.isfinite(x) & np.isfinite(y), i, codes)
    return codes


def zone_membership(
    p: Point2, ball: Point2, pitch: Pitch = Pitch(), scheme: ZoneScheme = DEFAULT_ZONES
) -> Optional[Zone]:
    """Highest-weighted zone containing ``p``, or None."""
    for zone in scheme.zones:
        if bool(_contains(zone.kind, float(p[0]), float(p[1]), float(ball[0]), float(ball[1]), pitch)):
            return zone
    return None


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Iterable[Sequence[float]]) -> list[tuple[float, float]]:
    """Monotone-chain hull, counter-clockwise, collinear points dropped."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) <= 2:
        return pts
    lower: list = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def polygon_area(vertices: Sequence[Sequence[float]]) -> float:
    """Shoelace area of a simple polygon given in order."""
    n = len(vertices)
    if n < 3:
        return 0.0
    s = 0.0
    for i in range(n):
        x1, y1 = vertices[i]
        x2, y2 = vertices[(i + 1) % n]
        s += x1 * y2 - x2 * y1
    return abs(s) / 2.0


def convex_hull_area(points: Sequence[Sequence[float]]) -> float:
    if len(points) < 3:
        raise DegenerateGeometryError(f"hull area needs at least 3 points, got {len(points)}")
    arr = np.asarray(points, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DegenerateGeometryError("hull points must be finite")
    return polygon_area(convex_hull(arr.tolist()))


def reflect(x, y, pitch: Pitch = Pitch()):
    """Point reflection through the pitch center (x -> L - x, y -> W - y)."""
    return pitch.length - np.asarray(x, dtype=float), pitch.width - np.asarray(y, dtype=float)


def normalize_orientation(
    frame: "Frame", losing_team_attacks_right: Optional[bool], pitch: Pitch = Pitch()
) -> "Frame":
    """Map a raw frame into the losing team's canonical coordinates.

    ``losing_team_attacks_right`` says whether, in the raw coordinates of this
    frame's period, the losing team attacks toward increasing x. When it does the
    frame is already canonical and returned unchanged; frames that went through
    normalization once are marked canonical and never reflected again.
    """
    if frame.canonical:
        return frame
    if losing_team_attacks_right is None:
        raise OrientationUnknownError(
            f"no attacking direction known for period {frame.period} (frame {frame.frame_id})"
        )
    if losing_team_attacks_right:
        return replace(frame, canonical=True)
    bx, by = reflect(frame.ball.x, frame.ball.y, pitch)
    players = tuple(
        replace(
            p,
            position=Point2(pitch.length - p.position.x, pitch.width - p.position.y),
            velocity=(-p.velocity[0], -p.velocity[1]),
        )
        for p in frame.players
    )
    return replace(frame, ball=Point2(float(bx), float(by)), players=players, canonical=True)
