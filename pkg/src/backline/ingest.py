"""Tracking and event ingestion from the open JSONL formats.

Tracking, one frame per line::

    {"frame_id":int,"period":int,"timestamp_ms":int,
     "ball":{"x":f,"y":f,"carrier":str|null},
     "players":[{"id":str,"team":"home"|"away","x":f,"y":f,"vx":f,"vy":f,"gk":bool}]}

Events, one per line::

    {"event_id":str,"period":int,"timestamp_ms":int,"kind":str,
     "team":"home"|"away","player":str,"x":f|null,"y":f|null,"outcome":str|null}

Coordinates are meters with the origin at a pitch corner. Frames are held in
a columnar :class:`Tracking` container; :class:`Frame` objects are views.
"""

from __future__ import annotations

import enum
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence, Union, overload

import numpy as np

from backline.errors import CorruptInputError, MissingInputError
from backline.geometry import Point2

log = logging.getLogger(__name__)

TEAMS = ("home", "away")
FRAME_INTERVAL_MS = 40
MAX_PLAYER_SPEED = 13.0
MAX_REJECT_FRACTION = 0.05


def other_team(team: str) -> str:
    return "away" if team == "home" else "home"


class EventKind(str, enum.Enum):
    PASS = "pass"
    CARRY = "carry"
    TACKLE = "tackle"
    INTERCEPTION = "interception"
    DUEL = "duel"
    PRESSURE = "pressure"
    SHOT = "shot"
    GOAL = "goal"
    CLEARANCE = "clearance"
    FOUL = "foul"
    OFFSIDE = "offside"
    THROW_IN = "throw_in"
    SUBSTITUTION = "substitution"
    OTHER_RESTART = "other_restart"
    OTHER = "other"

    def is_restart(self) -> bool:
        """Stoppages and set restarts: they break open play."""
        return self in _RESTARTS

    def is_on_ball(self) -> bool:
        return self in _ON_BALL


_RESTARTS = frozenset({EventKind.THROW_IN, EventKind.OTHER_RESTART, EventKind.OFFSIDE, EventKind.FOUL})
_ON_BALL = frozenset(
    {
        EventKind.PASS,
        EventKind.CARRY,
        EventKind.TACKLE,
        EventKind.INTERCEPTION,
        EventKind.DUEL,
        EventKind.SHOT,
        EventKind.CLEARANCE,
    }
)


class Outcome(str, enum.Enum):
    COMPLETE = "complete"
    INCOMPLETE = "incomplete"
    WON = "won"
    LOST = "lost"


@dataclass(frozen=True)
class PlayerState:
    player_id: str
    team: str
    position: Point2
    velocity: tuple = (0.0, 0.0)
    is_goalkeeper: bool = False

    @property
    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])


@dataclass(frozen=True)
class Frame:
    frame_id: int
    period: int
    timestamp_ms: int
    ball: Point2
    players: tuple = ()
    carrier: Optional[str] = None
    canonical: bool = False

    def player(self, player_id: str) -> Optional[PlayerState]:
        for p in self.players:
            if p.player_id == player_id:
                return p
        return None

    def outfield(self, team: str) -> list[PlayerState]:
        return [p for p in self.players if p.team == team and not p.is_goalkeeper]


@dataclass(frozen=True)
class MatchEvent:
    event_id: str
    timestamp_ms: int
    period: int
    kind: EventKind
    team: str
    player_id: str
    location: Optional[Point2] = None
    outcome: Optional[Outcome] = None

    @property
    def gains_ball(self) -> bool:
        """Whether this event leaves ``team`` in control of the ball."""
        if not self.kind.is_on_ball():
            return False
        if self.kind in (EventKind.TACKLE, EventKind.INTERCEPTION, EventKind.DUEL):
            return self.outcome is not Outcome.LOST and (
                self.kind is not EventKind.DUEL or self.outcome is Outcome.WON
            )
        return True


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str


class Tracking(Sequence[Frame]):
    """Columnar store of frames.

    Players are columns ordered by (team, player_id); untracked players are NaN.
    Indexing with an int gives a :class:`Frame`, with a slice or index array a
    new :class:`Tracking`.
    """

    def __init__(
        self,
        frame_id,
        period,
        timestamp_ms,
        ball,
        carrier: Sequence[Optional[str]],
        player_ids: Sequence[str],
        teams: Sequence[str],
        is_goalkeeper,
        pos,
        vel,
        canonical: bool = False,
    ):
        self.frame_id = np.asarray(frame_id, dtype=np.int64)
        self.period = np.asarray(period, dtype=np.int64)
        self.timestamp_ms = np.asarray(timestamp_ms, dtype=np.int64)
        self.ball = np.asarray(ball, dtype=float).reshape(-1, 2)
        self.carrier = list(carrier)
        self.player_ids = list(player_ids)
        self.teams = np.asarray(teams, dtype=object)
        self.is_goalkeeper = np.asarray(is_goalkeeper, dtype=bool)
        n, p = len(self.frame_id), len(self.player_ids)
        self.pos = np.asarray(pos, dtype=float).reshape(n, p, 2)
        self.vel = np.asarray(vel, dtype=float).reshape(n, p, 2)
        self.canonical = canonical
        self._col = {pid: j for j, pid in enumerate(self.player_ids)}
        self._row = None
        self._periods = None

    @classmethod
    def empty(cls) -> "Tracking":
        return cls([], [], [], np.zeros((0, 2)), [], [], [], [], np.zeros((0, 0, 2)), np.zeros((0, 0, 2)))

    @classmethod
    def from_frames(cls, frames: Iterable[Frame]) -> "Tracking":
        frames = list(frames)
        rows = [
            _FrameRow(
                f.frame_id, f.period, f.timestamp_ms, f.ball.x, f.ball.y, f.carrier,
                [(p.player_id, p.team, p.position.x, p.position.y, p.velocity[0], p.velocity[1], p.is_goalkeeper) for p in f.players],
            )
            for f in frames
        ]
        out = cls.from_rows(rows)
        out.canonical = bool(frames) and all(f.canonical for f in frames)
        return out

    @classmethod
    def from_rows(cls, rows: Sequence["_FrameRow"]) -> "Tracking":
        meta: dict = {}
        for r in rows:
            for p in r.players:
                if p[0] not in meta:
                    meta[p[0]] = (p[1], p[6])
        order = sorted(meta, key=lambda pid: (TEAMS.index(meta[pid][0]), pid))
        col = {pid: j for j, pid in enumerate(order)}
        n, m = len(rows), len(order)
        idx_i, idx_j, vals = [], [], []
        for i, r in enumerate(rows):
            for p in r.players:
                idx_i.append(i)
                idx_j.append(col[p[0]])
                vals.append(p[2:6])
        pos = np.full((n, m, 2), np.nan)
        vel = np.full_like(pos, np.nan)
        if vals:
            v = np.asarray(vals, dtype=float)
            pos[idx_i, idx_j] = v[:, :2]
            vel[idx_i, idx_j] = v[:, 2:]
        return cls(
            [r.frame_id for r in rows],
            [r.period for r in rows],
            [r.timestamp_ms for r in rows],
            np.array([(r.bx, r.by) for r in rows], dtype=float).reshape(-1, 2),
            [r.carrier for r in rows],
            order,
            [meta[pid][0] for pid in order],
            [meta[pid][1] for pid in order],
            pos,
            vel,
        )

    def records(self) -> Iterator[dict]:
        """Frames as tracking-JSONL dicts, straight from the arrays."""
        pos, vel = self.pos.tolist(), self.vel.tolist()
        ball = self.ball.tolist()
        gk = self.is_goalkeeper.tolist()
        for i in range(len(self)):
            players = []
            for j, pid in enumerate(self.player_ids):
                x, y = pos[i][j]
                if x != x:
                    continue
                vx, vy = vel[i][j]
                players.append({"id": pid, "team": self.teams[j], "x": x, "y": y, "vx": vx, "vy": vy, "gk": gk[j]})
            yield {
                "frame_id": int(self.frame_id[i]),
                "period": int(self.period[i]),
                "timestamp_ms": int(self.timestamp_ms[i]),
                "ball": {"x": ball[i][0], "y": ball[i][1], "carrier": self.carrier[i]},
                "players": players,
            }

    def __len__(self) -> int:
        return len(self.frame_id)

    @overload
    def __getitem__(self, i: int) -> Frame: ...

    @overload
    def __getitem__(self, i: slice) -> "Tracking": ...

    def __getitem__(self, i):
        if isinstance(i, (int, np.integer)):
            return self._frame(int(i))
        return self.take(np.arange(len(self))[i] if isinstance(i, slice) else i)

    def __iter__(self) -> Iterator[Frame]:
        for i in range(len(self)):
            yield self._frame(i)

    def _frame(self, i: int) -> Frame:
        if i < 0:
            i += len(self)
        players = []
        for j, pid in enumerate(self.player_ids):
            x, y = self.pos[i, j]
            if np.isnan(x):
                continue
            vx, vy = self.vel[i, j]
            players.append(
                PlayerState(pid, self.teams[j], Point2(float(x), float(y)), (float(vx), float(vy)), bool(self.is_goalkeeper[j]))
            )
        return Frame(
            int(self.frame_id[i]),
            int(self.period[i]),
            int(self.timestamp_ms[i]),
            Point2(float(self.ball[i, 0]), float(self.ball[i, 1])),
            tuple(players),
            self.carrier[i],
            self.canonical,
        )

    def take(self, idx) -> "Tracking":
        idx = np.asarray(idx, dtype=np.int64)
        return Tracking(
            self.frame_id[idx],
            self.period[idx],
            self.timestamp_ms[idx],
            self.ball[idx],
            [self.carrier[i] for i in idx],
            self.player_ids,
            self.teams,
            self.is_goalkeeper,
            self.pos[idx],
            self.vel[idx],
            self.canonical,
        )

    def column(self, player_id: str) -> Optional[int]:
        return self._col.get(player_id)

    def index_of(self, frame_id: int) -> Optional[int]:
        if self._row is None:
            self._row = {int(f): i for i, f in enumerate(self.frame_id)}
        return self._row.get(int(frame_id))

    def outfield_mask(self, team: str) -> np.ndarray:
        return (self.teams == team) & ~self.is_goalkeeper

    def period_rows(self, period: int) -> np.ndarray:
        """Row indices of one period (cached)."""
        if self._periods is None:
            self._periods = {int(p): np.flatnonzero(self.period == p) for p in np.unique(self.period)}
        return self._periods.get(int(period), np.zeros(0, dtype=np.int64))

    def period_bounds(self, period: int) -> Optional[tuple[int, int]]:
        ids = self.frame_id[self.period_rows(period)]
        if len(ids) == 0:
            return None
        return int(ids.min()), int(ids.max())

    def reflected(self, flip, length: float, width: float) -> "Tracking":
        """Copy with rows where ``flip`` is true reflected through the pitch center."""
        flip = np.broadcast_to(np.asarray(flip, dtype=bool), (len(self),))
        ball = self.ball.copy()
        pos = self.pos.copy()
        vel = self.vel.copy()
        ball[flip] = (length, width) - ball[flip]
        pos[flip] = np.array([length, width]) - pos[flip]
        vel[flip] = -vel[flip]
        return Tracking(
            self.frame_id, self.period, self.timestamp_ms, ball, self.carrier,
            self.player_ids, self.teams, self.is_goalkeeper, pos, vel, canonical=True,
        )


# --- parsing -------------------------------------------------------------


class _LineError(Exception):
    pass


def _num(obj: dict, key: str) -> float:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _LineError(f"{key} is not a number")
    v = float(v)
    if not math.isfinite(v):
        raise _LineError(f"{key} is not finite")
    return v


def _int(obj: dict, key: str) -> int:
    v = obj.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise _LineError(f"{key} is not an integer")
    return v


def _period(obj: dict) -> int:
    p = _int(obj, "period")
    if p not in (1, 2):
        raise _LineError(f"period {p} not in (1, 2)")
    return p


def _team(obj: dict, key: str = "team") -> str:
    t = obj.get(key)
    if t not in TEAMS:
        raise _LineError(f"{key} must be 'home' or 'away'")
    return t


def _str(obj: dict, key: str, optional: bool = False) -> Optional[str]:
    v = obj.get(key)
    if v is None and optional:
        return None
    if not isinstance(v, str):
        raise _LineError(f"{key} is not a string")
    return v


class _FrameRow(NamedTuple):
    frame_id: int
    period: int
    timestamp_ms: int
    bx: float
    by: float
    carrier: Optional[str]
    players: list  # (id, team, x, y, vx, vy, gk)


_NUM_TYPES = (float, int)
_MAX_SPEED_SQ = MAX_PLAYER_SPEED**2


def _fast_players(players: list) -> Optional[list]:
    """Player tuples if every entry is clean, else None so the strict path can say why."""
    out = []
    for p in players:
        try:
            pid, team, x, y, vx, vy = p["id"], p["team"], p["x"], p["y"], p["vx"], p["vy"]
        except (KeyError, TypeError):
            return None
        gk = p.get("gk", False)
        if (
            type(pid) is not str
            or team not in TEAMS
            or type(gk) is not bool
            or type(x) not in _NUM_TYPES
            or type(y) not in _NUM_TYPES
            or type(vx) not in _NUM_TYPES
            or type(vy) not in _NUM_TYPES
        ):
            return None
        total = x + y + vx + vy
        if total - total != 0 or vx * vx + vy * vy > _MAX_SPEED_SQ:
            return None
        out.append((pid, team, float(x), float(y), float(vx), float(vy), gk))
    if len({r[0] for r in out}) != len(out):
        return None
    return out


def _strict_players(players: list) -> list:
    out = []
    seen = set()
    for p in players:
        if not isinstance(p, dict):
            raise _LineError("player entry is not an object")
        pid = _str(p, "id")
        if pid in seen:
            raise _LineError(f"duplicate player id {pid}")
        seen.add(pid)
        gk = p.get("gk", False)
        if not isinstance(gk, bool):
            raise _LineError("gk is not a boolean")
        vx, vy = _num(p, "vx"), _num(p, "vy")
        if math.hypot(vx, vy) > MAX_PLAYER_SPEED:
            raise _LineError(f"player {pid} speed exceeds {MAX_PLAYER_SPEED} m/s")
        out.append((pid, _team(p), _num(p, "x"), _num(p, "y"), vx, vy, gk))
    return out


def parse_frame_row(obj) -> _FrameRow:
    if not isinstance(obj, dict):
        raise _LineError("line is not a JSON object")
    ts = _int(obj, "timestamp_ms")
    if ts < 0:
        raise _LineError("negative timestamp")
    ball = obj.get("ball")
    if not isinstance(ball, dict):
        raise _LineError("ball missing")
    players = obj.get("players")
    if not isinstance(players, list):
        raise _LineError("players is not a list")
    rows = _fast_players(players)
    if rows is None:
        rows = _strict_players(players)
    return _FrameRow(
        _int(obj, "frame_id"), _period(obj), ts, _num(ball, "x"), _num(ball, "y"), _str(ball, "carrier", optional=True), rows
    )


def parse_frame(obj) -> Frame:
    r = parse_frame_row(obj)
    players = tuple(PlayerState(p[0], p[1], Point2(p[2], p[3]), (p[4], p[5]), p[6]) for p in r.players)
    return Frame(r.frame_id, r.period, r.timestamp_ms, Point2(r.bx, r.by), players, r.carrier)


def parse_event(obj) -> MatchEvent:
    if not isinstance(obj, dict):
        raise _LineError("line is not a JSON object")
    kind_raw = _str(obj, "kind")
    try:
        kind = EventKind(kind_raw)
    except ValueError:
        log.warning("unknown event kind %r mapped to 'other'", kind_raw)
        kind = EventKind.OTHER
    outcome_raw = _str(obj, "outcome", optional=True)
    try:
        outcome = None if outcome_raw is None else Outcome(outcome_raw)
    except ValueError:
        raise _LineError(f"unknown outcome {outcome_raw!r}") from None
    x, y = obj.get("x"), obj.get("y")
    if (x is None) != (y is None):
        raise _LineError("x and y must both be present or both null")
    location = None if x is None else Point2(_num(obj, "x"), _num(obj, "y"))
    ts = _int(obj, "timestamp_ms")
    return MatchEvent(
        _str(obj, "event_id"), ts, _period(obj), kind, _team(obj), _str(obj, "player"), location, outcome
    )


def _read_lines(path, parse, what: str, rejects: Optional[list]):
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise MissingInputError(f"{what} file not found: {path}") from None
    except OSError as e:
        raise MissingInputError(f"cannot read {what} file {path}: {e}") from None
    items, bad, total = [], [], 0
    for lineno, raw in enumerate(data.split(b"\n"), start=1):
        if not raw.strip():
            continue
        total += 1
        try:
            items.append(parse(json.loads(raw.decode("utf-8"))))
        except (_LineError, ValueError, UnicodeDecodeError, RecursionError) as e:
            reason = str(e) if isinstance(e, _LineError) else f"malformed line: {type(e).__name__}"
            bad.append(Reject(lineno, reason))
            log.debug("rejected %s line %d: %s", what, lineno, reason)
    if total == 0:
        log.warning("%s file %s is empty", what, path)
    if bad:
        log.warning("%s: rejected %d of %d lines", path, len(bad), total)
    if rejects is not None:
        rejects.extend(bad)
    if total and len(bad) / total > MAX_REJECT_FRACTION:
        raise CorruptInputError(f"{path}: {len(bad)}/{total} lines rejected (first: line {bad[0].line}, {bad[0].reason})")
    return items, bad


def read_tracking(path, rejects: Optional[list] = None) -> Tracking:
    """Read tracking JSONL; frames come back sorted by (period, frame_id).

    Malformed lines are skipped and, when ``rejects`` is given, appended to it as
    :class:`Reject` records. A later duplicate of a (period, frame_id) is rejected.
    """
    frames, bad = _read_lines(path, parse_frame_row, "tracking", None)
    frames.sort(key=lambda f: (f.period, f.frame_id))
    unique = []
    for f in frames:
        if unique and (unique[-1].period, unique[-1].frame_id) == (f.period, f.frame_id):
            bad.append(Reject(-1, f"duplicate frame {f.frame_id} in period {f.period}"))
            continue
        unique.append(f)
    if rejects is not None:
        rejects.extend(bad)
    return Tracking.from_rows(unique)


def read_events(path, rejects: Optional[list] = None) -> list[MatchEvent]:
    """Read event JSONL sorted by (period, timestamp_ms); ties keep file order."""
    events, _ = _read_lines(path, parse_event, "events", rejects)
    events.sort(key=lambda e: (e.period, e.timestamp_ms))
    return events


# --- writing -------------------------------------------------------------


def frame_to_dict(frame: Frame) -> dict:
    return {
        "frame_id": frame.frame_id,
        "period": frame.period,
        "timestamp_ms": frame.timestamp_ms,
        "ball": {"x": frame.ball.x, "y": frame.ball.y, "carrier": frame.carrier},
        "players": [
            {
                "id": p.player_id,
                "team": p.team,
                "x": p.position.x,
                "y": p.position.y,
                "vx": p.velocity[0],
                "vy": p.velocity[1],
                "gk": p.is_goalkeeper,
            }
            for p in frame.players
        ],
    }


def event_to_dict(event: MatchEvent) -> dict:
    return {
        "event_id": event.event_id,
        "period": event.period,
        "timestamp_ms": event.timestamp_ms,
        "kind": event.kind.value,
        "team": event.team,
        "player": event.player_id,
        "x": None if event.location is None else event.location.x,
        "y": None if event.location is None else event.location.y,
        "outcome": None if event.outcome is None else event.outcome.value,
    }


def dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=False)


def write_jsonl(records: Iterable[dict], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps(r))
            fh.write("\n")


def write_tracking(frames: Union[Tracking, Iterable[Frame]], path) -> None:
    records = frames.records() if isinstance(frames, Tracking) else (frame_to_dict(f) for f in frames)
    write_jsonl(records, path)


def write_events(events: Iterable[MatchEvent], path) -> None:
    write_jsonl((event_to_dict(e) for e in events), path)


# --- validation ----------------------------------------------------------


@dataclass
class ValidationSummary:
    frames_per_period: dict = field(default_factory=dict)
    events_per_period: dict = field(default_factory=dict)
    gaps: list = field(default_factory=list)
    players_per_frame: Counter = field(default_factory=Counter)
    excluded: bool = False
    reasons: list = field(default_factory=list)

    @property
    def n_gaps(self) -> int:
        return len(self.gaps)


def validate_match(tracking: Union[Tracking, Sequence[Frame]], events: Sequence[MatchEvent]) -> ValidationSummary:
    """Count frames and events per period, locate frame-rate gaps, histogram players.

    A match is flagged excluded when some period with events has no tracking.
    Gaps are consecutive frames whose timestamps differ by more than 41 ms.
    """
    if not isinstance(tracking, Tracking):
        tracking = Tracking.from_frames(tracking)
    s = ValidationSummary()
    for period in (1, 2):
        rows = np.flatnonzero(tracking.period == period)
        s.frames_per_period[period] = int(len(rows))
        s.events_per_period[period] = sum(1 for e in events if e.period == period)
        ts = tracking.timestamp_ms[rows]
        ids = tracking.frame_id[rows]
        for k in np.flatnonzero(np.abs(np.diff(ts) - FRAME_INTERVAL_MS) > 1):
            s.gaps.append((period, int(ids[k]), int(ids[k + 1]), int(ts[k + 1] - ts[k])))
        if s.events_per_period[period] and not s.frames_per_period[period]:
            s.excluded = True
            s.reasons.append(f"no tracking data for period {period}")
    if len(tracking) == 0:
        s.excluded = True
        s.reasons.append("no tracking data")
    counts = np.sum(~np.isnan(tracking.pos[:, :, 0]), axis=1) if len(tracking) else []
    s.players_per_frame = Counter(int(c) for c in counts)
    return s


def infer_directions(tracking: Tracking, length: float = 105.0) -> dict:
    """Attacking direction per period from goalkeeper positions.

    Returns ``{period: {"home": bool, "away": bool}}`` where True means the
    team attacks toward increasing x. Periods without a tracked goalkeeper are
    omitted.
    """
    out = {}
    for period in np.unique(tracking.period):
        rows = tracking.period == period
        for team in TEAMS:
            cols = (tracking.teams == team) & tracking.is_goalkeeper
            if not cols.any():
                continue
            xs = tracking.pos[rows][:, cols, 0]
            if np.all(np.isnan(xs)):
                continue
            right = bool(np.nanmean(xs) < length / 2)
            out[int(period)] = {team: right, other_team(team): not right}
            break
    return out


def infer_carrier(frame: Frame, possession_team: Optional[str], max_dist: float = 2.0) -> Optional[str]:
    """Provider carrier if present, else the nearest possession-team player within ``max_dist``."""
    if frame.carrier is not None:
        return frame.carrier
    if possession_team is None:
        return None
    best, best_d = None, max_dist
    for p in frame.players:
        if p.team != possession_team:
            continue
        d = math.hypot(p.position.x - frame.ball.x, p.position.y - frame.ball.y)
        if d <= best_d:
            best, best_d = p.player_id, d
    return best
