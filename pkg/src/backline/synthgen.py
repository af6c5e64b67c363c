"""Deterministic synthetic matches with planted turnovers and known outcomes.

A match is scripted as a chain of episodes. In each, the losing team L builds
up with three passes, the gaining team G wins the ball (interception, tackle or
won duel) and counter-attacks through ten events toward L's goal. The tenth is
a pass (success for L) or a shot (failure). With some probability, scaled by
``signal_strength``, failures instead carry the ball into the penalty box.

Geometry is generated in L-canonical coordinates (L defends x = 0) from a few
per-episode latent variables, then mapped to raw pitch coordinates. Players
move by linear interpolation between keyframes, with keyframe jitter; keyframe
spacing is stretched where needed so no player exceeds the speed cap. The
success class gets a shorter distance from line to ball, more recovering
midfielders in the danger zones, and fewer gaining-team players near the ball
or overlapping wide, so it has a higher space score and a smaller relative
line height.

Episodes may also be planted invalid, one per rejection reason: turnover
outside the defensive third, defenders dropped from tracking, missing frames,
or a throw-in inside the ten-event window.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from backline.errors import InfeasibleConfigError, ValidationError
from backline.geometry import Pitch
from backline.ingest import (
    FRAME_INTERVAL_MS,
    MAX_PLAYER_SPEED,
    TEAMS,
    EventKind,
    MatchEvent,
    Outcome,
    Point2,
    Tracking,
    other_team,
    write_events,
    write_tracking,
)
from backline.transitions import RejectReason

FPS = 1000 // FRAME_INTERVAL_MS
PLAYER_IDS = [f"{t}_{r + 1:02d}" for t in TEAMS for r in range(11)]
N_PLAYERS = len(PLAYER_IDS)
GK, DEFS, MIDS, FWDS = 0, (1, 2, 3, 4), (5, 6, 7, 8), (9, 10)
CARRIERS, RUNNERS = (5, 6, 7), (8, 9, 10)
INVALID_KINDS = tuple(r.value for r in RejectReason)

# keyframe spacing (frames) and generator speed cap (m/s)
_PASS_GAP = 25
_SLOT_GAP = 22
_TAIL_P = 20
_TAIL_OUT = 30
_HANDOFF_GAP = 25
_V_GEN = 9.0
_LINE_MIN = 4.0

# latent effects per unit signal
_EFFECT_R = 3.2  # relative line height (m)
_EFFECT_SPACE = 2.0  # recovery and support latent (sd units)


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 42
    n_turnovers: int = 50
    class_balance: float = 0.40
    signal_strength: float = 1.0
    clock_shift_ms: int = 0
    noise: float = 0.3
    invalid: dict = field(default_factory=dict)
    box_entry_share: float = 0.5
    pressure_prob: float = 0.3
    period_duration_s: float = 2700.0
    max_turnovers_per_match: int = 150

    def __post_init__(self):
        if not 0.0 < self.class_balance < 1.0:
            raise ValueError("class_balance must lie in (0, 1)")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if self.signal_strength < 0:
            raise ValueError("signal_strength must be non-negative")
        if self.n_turnovers < 0 or self.max_turnovers_per_match < 1:
            raise ValueError("turnover counts must be positive")
        if not 0.0 <= self.box_entry_share <= 1.0 or not 0.0 <= self.pressure_prob <= 1.0:
            raise ValueError("shares must lie in [0, 1]")
        bad = set(self.invalid) - set(INVALID_KINDS)
        if bad:
            raise ValueError(f"unknown invalid kinds {sorted(bad)}")
        if any(int(v) < 0 for v in self.invalid.values()):
            raise ValueError("invalid counts must be non-negative")

    @property
    def n_invalid(self) -> int:
        return sum(int(v) for v in self.invalid.values())

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValidationError(f"unknown synth config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class SynthMatch:
    match_id: str
    tracking: Tracking
    events: list
    truth: dict

    def write(self, out_dir) -> dict:
        """Write tracking, events and truth files; returns their paths."""
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "tracking": out / f"{self.match_id}_tracking.jsonl",
            "events": out / f"{self.match_id}_events.jsonl",
            "truth": out / f"{self.match_id}_truth.json",
        }
        write_tracking(self.tracking, paths["tracking"])
        write_events(self.events, paths["events"])
        paths["truth"].write_text(json.dumps(self.truth, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        return paths


# --- episode planning ----------------------------------------------------


@dataclass
class _Episode:
    losing: str
    period: int
    status: str  # "valid" or a RejectReason value
    label: int
    fail_kind: Optional[str]  # "shot" | "box" | None
    x_turn: float
    R: float
    width: float
    stagger: np.ndarray
    mark: float
    theta: np.ndarray
    marked: np.ndarray
    n_rec: int
    deep_x: np.ndarray
    gap: float
    trail: float  # how far G's off-ball carriers sit behind the ball
    n_ovl: int  # G fullbacks overlapping into the wide channels


@dataclass
class _Key:
    pos: np.ndarray  # (22, 2), L-canonical until mapped
    ball: np.ndarray
    nominal: int
    events: list = field(default_factory=list)  # (kind, team, col, outcome, at_actor)
    tag: Optional[str] = None
    fixed: dict = field(default_factory=dict)  # col -> position pinned after jitter


def _col(team: str, role: int) -> int:
    return TEAMS.index(team) * 11 + role


def _attacks_right(team: str, period: int) -> bool:
    """Home attacks toward increasing x in the first period."""
    return (team == "home") == (period == 1)


def _plan(cfg: SynthConfig, n_valid: int, invalid: dict, rng: np.random.Generator) -> list[_Episode]:
    statuses = ["valid"] * n_valid
    for kind in INVALID_KINDS:
        statuses += [kind] * int(invalid.get(kind, 0))
    rng.shuffle(statuses)
    n = len(statuses)
    n_pos = int(round(cfg.class_balance * n_valid))
    labels_valid = np.array([1] * n_pos + [0] * (n_valid - n_pos))
    rng.shuffle(labels_valid)
    losing = np.array(["home"] * ((n + 1) // 2) + ["away"] * (n // 2))
    rng.shuffle(losing)
    box_share = cfg.box_entry_share * min(1.0, cfg.signal_strength)
    n_p1 = (n + 1) // 2
    out, k = [], 0
    for i, status in enumerate(statuses):
        if status == "valid":
            label = int(labels_valid[k])
            k += 1
        else:
            label = 1
        team_sign = 1.0 if losing[i] == "home" else -1.0
        s = cfg.signal_strength * (1.0 if label == 1 else -1.0)
        fail_kind = None
        if label == 0:
            fail_kind = "box" if rng.random() < box_share else "shot"
        if status == RejectReason.DEFENSIVE_THIRD_GATE.value:
            x_turn = rng.uniform(45.0, 65.0)
        else:
            x_turn = rng.uniform(72.0, 95.0)
        # team B reacts more strongly to the outcome: a planted interaction
        r_eff = _EFFECT_R * (1.0 if team_sign > 0 else 1.4)
        R = float(np.clip(17.0 + 1.5 * team_sign - 0.5 * r_eff * s + rng.normal(0, 2.5), 9.0, 32.0))
        width = float(np.clip(24.0 + 3.0 * team_sign + rng.normal(0, 3.0), 14.0, 40.0))
        stagger = rng.uniform(-1.0, 1.0, 4) * rng.uniform(0.5, 2.5)
        mark = float(np.clip(4.0 - 0.3 * team_sign + rng.normal(0, 1.0), 1.5, 7.0))
        theta = rng.uniform(-math.pi / 3, math.pi / 3, 3)
        marked = np.sort(rng.choice(4, 3, replace=False))
        u = 0.5 * _EFFECT_SPACE * s + rng.normal(0, 1.0)
        n_rec = int(np.clip(np.round(1.5 + u), 0, 3))
        deep_x = np.clip(29.0 - 3.0 * u + rng.normal(0, 2.0, 4), 17.0, 34.0)
        gap = float(rng.uniform(10.0, 16.0))
        trail = float(np.clip(6.0 + 4.0 * u + rng.normal(0, 1.0), -2.0, 16.0))
        n_ovl = int(np.clip(np.round(1.0 - u), 0, 2))
        out.append(
            _Episode(
                str(losing[i]), 1 if i < n_p1 else 2, status, label, fail_kind, float(x_turn),
                R, width, stagger, mark, theta, marked, n_rec, deep_x, gap, trail, n_ovl,
            )
        )
    return out


# --- layouts (L-canonical) -----------------------------------------------


def _back_line(ep: _Episode, pos: np.ndarray, bx: float, by: float, rng: np.random.Generator) -> None:
    """L's back four a distance ``R`` behind the ball, goalkeepers, and G's three runners marking it."""
    L, G = ep.losing, other_team(ep.losing)
    line = max(_LINE_MIN, bx - ep.R)
    yc = 34.0 + 0.35 * (by - 34.0)
    defenders = np.array([(line + ep.stagger[k], yc + ep.width * (k / 3.0 - 0.5)) for k in range(4)])
    for k, i in enumerate(DEFS):
        pos[_col(L, i)] = defenders[k]
    pos[_col(L, GK)] = (max(1.0, min(5.0, line - 2.0)), 34.0 + 0.2 * (by - 34.0))
    pos[_col(G, GK)] = (100.0, 34.0)
    for k, i in enumerate(RUNNERS):
        m = max(1.0, ep.mark + rng.normal(0, 0.8))
        th = ep.theta[k] + rng.normal(0, 0.2)
        pos[_col(G, i)] = defenders[ep.marked[k]] + m * np.array([math.cos(th), math.sin(th)])


def _build_layout(ep: _Episode, bx: float, by: float, rng: np.random.Generator) -> np.ndarray:
    """L in possession, attacking toward x = 105."""
    L, G = ep.losing, other_team(ep.losing)
    pos = np.zeros((N_PLAYERS, 2))
    _back_line(ep, pos, bx, by, rng)
    for i, dx, dy in zip(MIDS, (-3.0, 3.0, -6.0, 6.0), (-12.0, -4.0, 4.0, 12.0)):
        pos[_col(L, i)] = (bx - 4.0 + dx, by + dy)
    for i, y in zip(FWDS, (24.0, 44.0)):
        pos[_col(L, i)] = (min(bx + 10.0, 98.0), y)
    for i, y in zip(DEFS, (14.0, 28.0, 40.0, 54.0)):
        pos[_col(G, i)] = (np.clip(bx + 8.0, 60.0, 98.0), y)
    for i, dy in zip(CARRIERS, (-8.0, 0.0, 8.0)):
        pos[_col(G, i)] = (np.clip(bx + 2.0, 30.0, 97.0), by + dy)
    return pos


def _counter_layout(ep: _Episode, bx: float, by: float, rng: np.random.Generator) -> np.ndarray:
    """G in possession, attacking toward x = 0."""
    L, G = ep.losing, other_team(ep.losing)
    pos = np.zeros((N_PLAYERS, 2))
    _back_line(ep, pos, bx, by, rng)
    line = max(_LINE_MIN, bx - ep.R)
    for j, i in enumerate(MIDS):
        if j < ep.n_rec:
            pos[_col(L, i)] = (max(line + 4.0, ep.deep_x[j]), 34.0 + (j - 1.0) * 8.0)
        else:
            # caught upfield: never back inside the final third
            pos[_col(L, i)] = (min(max(line + ep.gap, 36.0) + 3.0 * j, 100.0), 34.0 + (j - 1.5) * 10.0)
    for i, y in zip(FWDS, (22.0, 46.0)):
        pos[_col(L, i)] = (min(bx + 12.0, 98.0), y)
    for i, y in zip(DEFS, (12.0, 27.0, 41.0, 56.0)):
        pos[_col(G, i)] = (np.clip(bx + 14.0, 45.0, 97.0), y)
    # overlapping fullbacks stay behind the runners, so they never press
    for i, y in list(zip((DEFS[0], DEFS[3]), (6.0, 62.0)))[: ep.n_ovl]:
        pos[_col(G, i)] = (min(max(line + 7.0, 22.0), 97.0), y)
    for i, dy in zip(CARRIERS, (-8.0, 0.0, 8.0)):
        pos[_col(G, i)] = (min(bx + ep.trail, 99.0), 34.0 + 0.5 * (by - 34.0) + dy)
    return pos


def _smooth_actors(keys: list[_Key], w: int = 2) -> None:
    """Glide each acting or pinned player between anchors instead of teleporting.

    Anchors are the keys where a player acts on the ball or is pinned. Within
    ``w`` keys of an anchor the player is interpolated (in key index) between
    the anchor and the layout position, or straight to the next anchor.
    """
    anchors: dict = {}
    for i, k in enumerate(keys):
        for col, xy in k.fixed.items():
            anchors.setdefault(col, {})[i] = np.asarray(xy, dtype=float)
        for kind, team, col, _, at_actor in k.events:
            if at_actor:
                anchors.setdefault(col, {})[i] = k.ball
    last = len(keys) - 1
    for col, pts in anchors.items():
        idx = sorted(pts)
        knots = {i: pts[i] for i in idx}
        for a, b in zip([None] + idx, idx + [None]):
            if a is not None and b is not None and b - a <= 2 * w:
                continue
            if a is not None and a + w <= last:
                knots.setdefault(a + w, keys[a + w].pos[col])
            if b is not None and b - w >= 0:
                knots.setdefault(b - w, keys[b - w].pos[col])
        ki = sorted(knots)
        kx = np.array([knots[i][0] for i in ki])
        ky = np.array([knots[i][1] for i in ki])
        for m in range(ki[0], ki[-1] + 1):
            if m in pts:
                continue
            keys[m].fixed[col] = np.array([np.interp(m, ki, kx), np.interp(m, ki, ky)])


def _ball_path(ep: _Episode, n_onball: int, rng: np.random.Generator) -> np.ndarray:
    """Ball waypoints for the gaining team's on-ball events (L-canonical).

    The back line retreats along a path that does not depend on the outcome and
    the ball runs ``R`` ahead of it, so outcome effects on ``R`` leave the
    defenders' absolute depth alone.
    """
    line0 = ep.x_turn - 17.0
    line_end = rng.uniform(8.0, 16.0)
    y_end = rng.uniform(24.0, 44.0)
    t = np.arange(1, n_onball + 1) / n_onball
    xs = line0 + (line_end - line0) * t + rng.normal(0, 1.5, n_onball) * (t < 1) + ep.R
    ys = np.empty(n_onball)
    y = rng.uniform(18.0, 50.0)
    for k in range(n_onball):
        y = np.clip(y + rng.normal(0, 3.5), 12.0, 56.0)
        ys[k] = y
    ys[-1] = y_end
    xs = np.maximum(xs, 20.0)
    if ep.fail_kind == "box":
        xs[-2:] = rng.uniform(8.0, 14.0, 2)
        ys[-2:] = 34.0 + rng.uniform(-12.0, 12.0, 2)
    return np.column_stack([xs, ys])


def _episode_keys(ep: _Episode, need_next: Optional[str], pressure_prob: float, rng: np.random.Generator) -> list[_Key]:
    """Keyframes of one episode in L-canonical coordinates."""
    L, G = ep.losing, other_team(ep.losing)
    keys: list[_Key] = []

    # build-up: three L passes toward the turnover point
    start = np.array([np.clip(ep.x_turn - 25.0 + rng.normal(0, 3.0), 30.0, 80.0), rng.uniform(15.0, 53.0)])
    y_turn = rng.uniform(12.0, 56.0)
    turn = np.array([ep.x_turn, y_turn])
    passers = rng.permutation(MIDS)[:3]
    for k in range(3):
        b = start + (turn - start) * (k / 3.0) + np.array([0.0, rng.normal(0, 3.0)]) * (k > 0)
        keys.append(_Key(_build_layout(ep, *b, rng), b, _PASS_GAP, [(EventKind.PASS, L, _col(L, passers[k]), Outcome.COMPLETE, True)]))

    # the turnover
    kind = (EventKind.INTERCEPTION, EventKind.TACKLE, EventKind.DUEL)[int(rng.integers(3))]
    outcome = None if kind is EventKind.INTERCEPTION else Outcome.WON
    g_def = int(rng.choice(DEFS))
    keys.append(_Key(_counter_layout(ep, *turn, rng), turn.copy(), _PASS_GAP, [(kind, G, _col(G, g_def), outcome, True)], tag="turnover"))

    # ten following events: slot 10 decides the outcome
    slots = ["onball"] * 10
    if ep.status == RejectReason.RESTART.value:
        slots[int(rng.integers(1, 8))] = "restart"
    if ep.status != RejectReason.INSUFFICIENT_DEFENDERS.value:
        for k in range(1, 6):
            if slots[k] == "onball" and rng.random() < pressure_prob:
                slots[k] = "pressure"
    onball = [k for k, s in enumerate(slots) if s == "onball"]
    path = _ball_path(ep, len(onball), rng)
    ball_at = {}
    for k, b in zip(onball, path):
        ball_at[k] = b
    # off-ball slots sit evenly between the surrounding on-ball positions
    prev, prev_k = turn, -1
    for k in range(10):
        if k in onball:
            prev, prev_k = ball_at[k], k
        else:
            nxt_k = next(j for j in range(k + 1, 10) if j in onball)
            ball_at[k] = prev + (ball_at[nxt_k] - prev) * (k - prev_k) / (nxt_k - prev_k)
    actor = _col(G, g_def)
    last_kind = EventKind.PASS
    pressers = [i for j, i in enumerate(MIDS) if j >= ep.n_rec]
    for k, s in enumerate(slots):
        b = ball_at[k]
        pos = _counter_layout(ep, *b, rng)
        if s == "onball":
            if k == 9:
                kind = EventKind.SHOT if ep.label == 0 else EventKind.PASS
            else:
                kind = EventKind.CARRY if rng.random() < 0.3 else EventKind.PASS
            if k > 0 and last_kind is EventKind.PASS:
                actor = _col(G, int(rng.choice([c for c in CARRIERS if _col(G, c) != actor])))
            out = Outcome.COMPLETE if kind is EventKind.PASS else None
            keys.append(_Key(pos, b.copy(), _SLOT_GAP, [(kind, G, actor, out, True)], tag=f"slot{k}"))
            last_kind = kind
        elif s == "pressure":
            presser = _col(L, int(rng.choice(pressers)))
            keys.append(
                _Key(pos, b.copy(), _SLOT_GAP, [(EventKind.PRESSURE, L, presser, None, False)], f"slot{k}",
                     {presser: b + np.array([-1.5, 0.5])})
            )
        else:
            keys.append(_Key(pos, b.copy(), _SLOT_GAP, [(EventKind.THROW_IN, G, actor, None, True)], tag=f"slot{k}"))

    # contest after the last event: geometry identical for both outcomes
    last = ball_at[9]
    P = np.array([last[0] - 3.0, last[1] + rng.uniform(-3.0, 3.0)])
    pos = _counter_layout(ep, *P, rng)
    d_near = _col(L, DEFS[int(np.argmin(np.abs(pos[[_col(L, i) for i in DEFS], 1] - P[1])))])
    runner = _col(G, RUNNERS[0])
    # both contesting players stand on the ball whatever the outcome
    if ep.label == 0:
        ev = [(EventKind.CLEARANCE, L, d_near, None, True)]
        holder = L
    else:
        ev = [(EventKind.CARRY, G, runner, None, True)]
        holder = G
    keys.append(_Key(pos, P, _TAIL_P, ev, "contest", {d_near: P, runner: P}))
    out_ball = np.array([min(P[0] + 10.0, 60.0), np.clip(P[1] + rng.uniform(-5.0, 5.0), 5.0, 63.0)])
    keys.append(_Key(_counter_layout(ep, *out_ball, rng), out_ball, _TAIL_OUT, tag="out"))

    # hand the ball to whoever loses it in the next episode
    if need_next is not None and need_next != holder:
        b1 = out_ball
        b2 = np.array([np.clip(b1[0] + rng.uniform(3.0, 8.0), 5.0, 100.0), np.clip(b1[1] + rng.uniform(-6.0, 6.0), 5.0, 63.0)])
        giver = _col(holder, int(rng.choice(MIDS)))
        taker = _col(need_next, int(rng.choice(MIDS)))
        keys.append(_Key(_counter_layout(ep, *b1, rng), b1.copy(), _HANDOFF_GAP, [(EventKind.PASS, holder, giver, Outcome.INCOMPLETE, True)]))
        keys.append(_Key(_counter_layout(ep, *b2, rng), b2, _HANDOFF_GAP, [(EventKind.CARRY, need_next, taker, None, True)]))
    _smooth_actors(keys)
    return keys


# --- match assembly ------------------------------------------------------


def _to_raw(xy: np.ndarray, flip: bool, pitch: Pitch) -> np.ndarray:
    return np.array([pitch.length, pitch.width]) - xy if flip else xy


def _finalize_key(key: _Key, ep: _Episode, noise: float, rng: np.random.Generator, pitch: Pitch) -> _Key:
    """Add jitter, pin actors to the ball (or their fixed spots) and map to raw coordinates."""
    pos = key.pos + noise * rng.normal(0, 1.0, key.pos.shape)
    for col, xy in key.fixed.items():
        pos[col] = xy
    pos[:, 0] = np.clip(pos[:, 0], 0.5, pitch.length - 0.5)
    pos[:, 1] = np.clip(pos[:, 1], 0.5, pitch.width - 0.5)
    ball = np.array([np.clip(key.ball[0], 0.5, pitch.length - 0.5), np.clip(key.ball[1], 0.5, pitch.width - 0.5)])
    for kind, team, col, _, at_actor in key.events:
        if at_actor:
            pos[col] = ball
    flip = not _attacks_right(ep.losing, ep.period)
    return _Key(_to_raw(pos, flip, pitch), _to_raw(ball, flip, pitch), key.nominal, key.events, key.tag)


def _period_frames(keys: list[_Key]) -> np.ndarray:
    """Frame index of every keyframe, spacing stretched to respect the speed cap."""
    idx = np.zeros(len(keys), dtype=np.int64)
    for i in range(1, len(keys)):
        disp = np.max(np.hypot(*(keys[i].pos - keys[i - 1].pos).T))
        need = int(math.ceil(disp / _V_GEN * FPS))
        idx[i] = idx[i - 1] + max(keys[i].nominal, need, 1)
    return idx


def generate_match(cfg: SynthConfig = SynthConfig(), match_index: int = 0, n_valid: Optional[int] = None,
                   invalid: Optional[dict] = None, pitch: Pitch = Pitch()) -> SynthMatch:
    """One synthetic match; all randomness flows from ``(cfg.seed, match_index)``."""
    n_valid = cfg.n_turnovers if n_valid is None else n_valid
    invalid = dict(cfg.invalid) if invalid is None else invalid
    rng = np.random.default_rng([cfg.seed, match_index])
    episodes = _plan(cfg, n_valid, invalid, rng)

    period_ms = int(round(cfg.period_duration_s * 1000))
    frame_id0 = 0
    fid_all, per_all, ts_all, ball_all, pos_all = [], [], [], [], []
    events: list[MatchEvent] = []
    truth_rows = []
    drop_rows, blank = [], []
    n_event = 0

    for period in (1, 2):
        eps = [e for e in episodes if e.period == period]
        if not eps:
            continue
        # kickoff from the centre by the first losing team
        first = eps[0]
        kick = _Key(_build_layout(first, pitch.length / 2, pitch.width / 2, rng), np.array([pitch.length / 2, pitch.width / 2]), 0,
                    [(EventKind.OTHER_RESTART, first.losing, _col(first.losing, MIDS[0]), None, True)])
        keys = [_finalize_key(kick, first, 0.0, rng, pitch)]
        owner = [-1]  # episode index per key
        for j, ep in enumerate(eps):
            need = eps[j + 1].losing if j + 1 < len(eps) else None
            for key in _episode_keys(ep, need, cfg.pressure_prob, rng):
                keys.append(_finalize_key(key, ep, cfg.noise, rng, pitch))
                owner.append(j)
        kidx = _period_frames(keys)
        n_frames = int(kidx[-1]) + 1
        if n_frames * FRAME_INTERVAL_MS > period_ms:
            raise InfeasibleConfigError(
                f"period {period} needs {n_frames * FRAME_INTERVAL_MS / 1000:.0f} s for {len(eps)} turnovers, "
                f"longer than the configured {cfg.period_duration_s:.0f} s"
            )
        t = np.arange(n_frames)
        kpos = np.stack([k.pos for k in keys])
        kball = np.stack([k.ball for k in keys])
        pos = np.empty((n_frames, N_PLAYERS, 2))
        for p in range(N_PLAYERS):
            for d in range(2):
                pos[:, p, d] = np.interp(t, kidx, kpos[:, p, d])
        ball = np.column_stack([np.interp(t, kidx, kball[:, 0]), np.interp(t, kidx, kball[:, 1])])
        pos = np.round(pos, 3)
        ball = np.round(ball, 3)
        ts0 = (period - 1) * period_ms

        # events and ground truth
        for i, key in enumerate(keys):
            f = int(kidx[i])
            for kind, team, col, out, at_actor in key.events:
                loc = pos[f, col] if kind is EventKind.PRESSURE else ball[f]
                eid = f"e{n_event:06d}"
                n_event += 1
                events.append(
                    MatchEvent(eid, ts0 + f * FRAME_INTERVAL_MS + cfg.clock_shift_ms, period, kind, team,
                               PLAYER_IDS[col], Point2(float(loc[0]), float(loc[1])), out)
                )
                if key.tag == "turnover":
                    ep = eps[owner[i]]
                    truth_rows.append(_truth_row(eid, ep, frame_id0 + f, pos[f], ball[f], pitch))

        # planted tracking defects, by episode
        for j, ep in enumerate(eps):
            kis = [i for i in range(len(keys)) if owner[i] == j]
            tags = {keys[i].tag: i for i in kis}
            # defects sit a few frames after a slot event, inside its window and before the next key
            if ep.status == RejectReason.INCOMPLETE_TRACKING.value:
                a = kidx[tags["slot4"]]
                drop_rows.append(frame_id0 + np.arange(a + 8, a + 14))
            elif ep.status == RejectReason.INSUFFICIENT_DEFENDERS.value:
                a = kidx[tags["slot2"]]
                keep = set(rng.choice([_col(ep.losing, r) for r in DEFS + MIDS + FWDS], 3, replace=False).tolist())
                cols = [_col(ep.losing, r) for r in DEFS + MIDS + FWDS if _col(ep.losing, r) not in keep]
                blank.append((frame_id0 + np.arange(a + 6, a + 16), cols))

        fid_all.append(frame_id0 + t)
        per_all.append(np.full(n_frames, period))
        ts_all.append(ts0 + t * FRAME_INTERVAL_MS)
        ball_all.append(ball)
        pos_all.append(pos)
        frame_id0 += n_frames

    if not pos_all:
        tracking = Tracking.empty()
    else:
        frame_id = np.concatenate(fid_all)
        pos = np.concatenate(pos_all)
        vel = np.zeros_like(pos)
        per = np.concatenate(per_all)
        for period in np.unique(per):
            rows = per == period
            if rows.sum() > 1:
                vel[rows] = np.round(np.gradient(pos[rows], axis=0) * FPS, 3)
        speed = np.hypot(vel[..., 0], vel[..., 1])
        if speed.size and speed.max() >= MAX_PLAYER_SPEED:
            raise RuntimeError(f"generator produced speed {speed.max():.2f} m/s")
        for fids, cols in blank:
            pos[np.ix_(fids, cols)] = np.nan
            vel[np.ix_(fids, cols)] = np.nan
        keep = np.ones(len(frame_id), dtype=bool)
        for fids in drop_rows:
            keep[fids] = False
        tracking = Tracking(
            frame_id[keep], per[keep], np.concatenate(ts_all)[keep], np.concatenate(ball_all)[keep],
            [None] * int(keep.sum()), PLAYER_IDS, [t for t in TEAMS for _ in range(11)],
            [r == GK for _ in TEAMS for r in range(11)], pos[keep], vel[keep],
        )

    match_id = f"synth{cfg.seed}_{match_index:02d}"
    truth = {
        "match_id": match_id,
        "config": cfg.to_dict(),
        "clock_shift_ms": cfg.clock_shift_ms,
        "directions": {str(p): {t: _attacks_right(t, p) for t in TEAMS} for p in (1, 2)},
        "turnovers": truth_rows,
    }
    return SynthMatch(match_id, tracking, events, truth)


def _truth_row(eid: str, ep: _Episode, frame_id: int, pos: np.ndarray, ball: np.ndarray, pitch: Pitch) -> dict:
    flip = not _attacks_right(ep.losing, ep.period)
    cols = [_col(ep.losing, r) for r in DEFS + MIDS + FWDS]
    x = pos[cols, 0]
    if flip:
        x = pitch.length - x
    order = sorted(range(len(cols)), key=lambda k: (x[k], PLAYER_IDS[cols[k]]))
    valid = ep.status == "valid"
    reason = None
    if valid:
        reason = "none" if ep.label == 1 else ("penalty_area_entry" if ep.fail_kind == "box" else "shot")
    return {
        "turnover_id": eid,
        "period": ep.period,
        "losing_team": ep.losing,
        "frame_id": int(frame_id),
        "x_turn": round(float(pitch.length - ball[0] if flip else ball[0]), 3),
        "status": "valid" if valid else "rejected",
        "reason": None if valid else ep.status,
        "label": ep.label if valid else None,
        "label_reason": reason,
        "back_four": [PLAYER_IDS[cols[k]] for k in order[:4]] if valid else None,
    }


def match_plan(cfg: SynthConfig) -> list[tuple[int, int, dict]]:
    """Split turnovers across matches: (match_index, n_valid, invalid counts)."""
    total = cfg.n_turnovers + cfg.n_invalid
    n_matches = max(1, math.ceil(total / cfg.max_turnovers_per_match))
    valid = np.array_split(np.arange(cfg.n_turnovers), n_matches)
    plans = []
    for m in range(n_matches):
        inv = {k: len(np.array_split(np.arange(int(v)), n_matches)[m]) for k, v in cfg.invalid.items()}
        plans.append((m, len(valid[m]), inv))
    return plans


def generate_dataset(cfg: SynthConfig = SynthConfig()):
    """Yield as many matches as needed to host ``cfg.n_turnovers`` planted turnovers."""
    for m, n_valid, inv in match_plan(cfg):
        yield generate_match(cfg, m, n_valid, inv)


# --- ground-truth comparison ---------------------------------------------


@dataclass
class TruthDiff:
    n_planted: int = 0
    n_planted_valid: int = 0
    n_recovered_valid: int = 0
    n_label_agree: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict:
        return asdict(self) | {"ok": self.ok}


def ground_truth_check(records: Sequence[dict], truth: dict) -> TruthDiff:
    """Compare extraction records with the planted truth, turnover by turnover.

    Reports planted turnovers that were missed, extra detections, and any
    disagreement in status, rejection reason, label or back four.
    """
    got = {r["turnover_id"]: r for r in records}
    diff = TruthDiff()
    planted = truth["turnovers"]
    diff.n_planted = len(planted)
    for t in planted:
        tid = t["turnover_id"]
        if t["status"] == "valid":
            diff.n_planted_valid += 1
        r = got.pop(tid, None)
        if r is None:
            diff.mismatches.append({"turnover_id": tid, "field": "existence", "expected": "detected", "got": None})
            continue
        for key in ("status", "reason", "label", "label_reason", "back_four"):
            if t[key] != r.get(key):
                diff.mismatches.append({"turnover_id": tid, "field": key, "expected": t[key], "got": r.get(key)})
        if t["status"] == "valid" and r["status"] == "valid":
            diff.n_recovered_valid += 1
            diff.n_label_agree += int(t["label"] == r["label"])
    for tid in sorted(got):
        diff.mismatches.append({"turnover_id": tid, "field": "existence", "expected": None, "got": "detected"})
    return diff
