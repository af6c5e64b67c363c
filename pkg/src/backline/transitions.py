"""Negative-transition extraction: turnovers, validity gates, back four, outcome labels."""

from __future__ import annotations

import enum
import json
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from backline.errors import InsufficientDefendersError, MissingInputError, OrientationUnknownError
from backline.geometry import Pitch
from backline.ingest import (
    EventKind,
    Frame,
    Tracking,
    dumps,
    other_team,
    parse_frame_row,
)
from backline.sync import SyncedEvent, synced_from_dict, synced_to_dict

log = logging.getLogger(__name__)


class RejectReason(str, enum.Enum):
    DEFENSIVE_THIRD_GATE = "defensive_third_gate"
    INSUFFICIENT_DEFENDERS = "insufficient_defenders"
    INCOMPLETE_TRACKING = "incomplete_tracking"
    RESTART = "restart"


class LabelReason(str, enum.Enum):
    PENALTY_AREA_ENTRY = "penalty_area_entry"
    SHOT = "shot"
    GOAL = "goal"
    NONE = "none"


@dataclass(frozen=True)
class TransitionConfig:
    gate_min_x: float = 70.0
    n_events: int = 10
    pressure_lookback_ms: int = 2000
    min_defenders: int = 4

    def __post_init__(self):
        if self.n_events < 1 or self.min_defenders < 4 or self.pressure_lookback_ms < 0:
            raise ValueError("invalid transition config")


@dataclass(frozen=True)
class Turnover:
    turnover_id: str
    index: int
    losing_team: str
    event: SyncedEvent
    cause: str

    @property
    def gaining_team(self) -> str:
        return other_team(self.losing_team)


@dataclass(frozen=True)
class OutcomeLabel:
    value: int
    reason: LabelReason

    def __post_init__(self):
        if (self.value == 0) != (self.reason is not LabelReason.NONE):
            raise ValueError("failure labels need a reason, successes must not have one")


@dataclass
class TransitionSequence:
    seq_id: str
    losing_team: str
    turnover_event: SyncedEvent
    events: list
    frames: Tracking
    back_four: list
    turnover_ball_x: float
    label: Optional[OutcomeLabel] = None

    @property
    def period(self) -> int:
        return self.turnover_event.event.period


@dataclass
class Extraction:
    turnover: Turnover
    sequence: Optional[TransitionSequence] = None
    reason: Optional[RejectReason] = None


_FORCING_KINDS = (EventKind.TACKLE, EventKind.INTERCEPTION)
_BREAKS = (EventKind.SUBSTITUTION,)


def detect_turnovers(events: Sequence[SyncedEvent], cfg: TransitionConfig = TransitionConfig()) -> list[Turnover]:
    """Opponent-induced possession changes.

    Possession follows the team of the latest ball-gaining event. A change counts
    when the gaining team's first touch is a tackle, interception or won duel, or
    when the gaining team pressed within the look-back before that touch. Any
    restart, foul, offside or substitution between the two touches voids it.
    """
    out = []
    possession, period, broken = None, None, False
    for i, s in enumerate(events):
        e = s.event
        if e.period != period:
            possession, period, broken = None, e.period, False
        if e.kind.is_restart() or e.kind in _BREAKS:
            broken = True
            continue
        if not e.gains_ball:
            continue
        if possession is not None and e.team != possession and not broken:
            cause = None
            if e.kind in _FORCING_KINDS or e.kind is EventKind.DUEL:
                cause = e.kind.value
            else:
                for j in range(i - 1, -1, -1):
                    pe = events[j].event
                    if pe.period != e.period or e.timestamp_ms - pe.timestamp_ms > cfg.pressure_lookback_ms:
                        break
                    if pe.kind is EventKind.PRESSURE and pe.team == e.team:
                        cause = "pressure"
                        break
            if cause is not None:
                out.append(Turnover(e.event_id, i, possession, s, cause))
        possession, broken = e.team, False
    return out


def identify_back_four(frame: Frame, losing_team: str) -> list[str]:
    """Four outfield players of ``losing_team`` with the smallest canonical x (ties by id)."""
    outfield = frame.outfield(losing_team)
    if len(outfield) < 4:
        raise InsufficientDefendersError(
            f"frame {frame.frame_id}: {len(outfield)} outfield players tracked for {losing_team}"
        )
    outfield.sort(key=lambda p: (p.position.x, p.player_id))
    return [p.player_id for p in outfield[:4]]


def back_four_columns(frames: Tracking, team: str) -> np.ndarray:
    """(n_frames, 4) column indices of the back four; -1 where fewer than 4 are tracked."""
    cols = np.flatnonzero(frames.outfield_mask(team))
    x = frames.pos[:, cols, 0]
    key = np.where(np.isnan(x), np.inf, x)
    # columns are already in id order, so a stable sort breaks x ties by id
    order = np.argsort(key, axis=1, kind="stable")[:, :4]
    picked = cols[order]
    short = np.sum(np.isfinite(key), axis=1) < 4
    picked[short] = -1
    return picked


def top_attacker_columns(frames: Tracking, team: str, k: int = 3) -> np.ndarray:
    """(n_frames, k) columns of the k most advanced (smallest x) outfield attackers; -1 pads."""
    cols = np.flatnonzero(frames.outfield_mask(team))
    x = frames.pos[:, cols, 0]
    key = np.where(np.isnan(x), np.inf, x)
    order = np.argsort(key, axis=1, kind="stable")[:, :k]
    picked = cols[order]
    missing = ~np.isfinite(np.take_along_axis(key, order, axis=1))
    picked[missing] = -1
    if picked.shape[1] < k:
        picked = np.hstack([picked, np.full((len(frames), k - picked.shape[1]), -1)])
    return picked


def _possession_per_frame(seq: TransitionSequence) -> np.ndarray:
    """Team in possession at each sequence frame, from ball-gaining events."""
    fids = seq.frames.frame_id
    owner = np.full(len(fids), seq.losing_team, dtype=object)
    for s in [seq.turnover_event, *seq.events]:
        if s.event.gains_ball:
            owner[fids >= s.frame_id] = s.event.team
    return owner


def label_outcome(seq: TransitionSequence, pitch: Pitch = Pitch()) -> OutcomeLabel:
    """Failure (0) on the first of: ball in the own box under opponent possession,
    an opponent shot, an opponent goal; success (1) otherwise."""
    opp = other_team(seq.losing_team)
    triggers = []
    owner = _possession_per_frame(seq)
    inside = pitch.in_penalty_box(seq.frames.ball[:, 0], seq.frames.ball[:, 1]) & (owner == opp)
    if inside.any():
        triggers.append((int(seq.frames.frame_id[np.argmax(inside)]), 0, LabelReason.PENALTY_AREA_ENTRY))
    for s in seq.events:
        if s.event.team != opp:
            continue
        if s.event.kind is EventKind.SHOT:
            triggers.append((s.frame_id, 1, LabelReason.SHOT))
        elif s.event.kind is EventKind.GOAL:
            triggers.append((s.frame_id, 2, LabelReason.GOAL))
    if not triggers:
        return OutcomeLabel(1, LabelReason.NONE)
    return OutcomeLabel(0, min(triggers)[2])


def _attacks_right(directions: dict, period: int, team: str) -> bool:
    try:
        return bool(directions[period][team])
    except KeyError:
        raise OrientationUnknownError(f"no attacking direction for {team} in period {period}") from None


def extract_sequence(
    turnover: Turnover,
    events: Sequence[SyncedEvent],
    tracking: Tracking,
    directions: dict,
    pitch: Pitch = Pitch(),
    cfg: TransitionConfig = TransitionConfig(),
) -> Extraction:
    """Build and label the sequence for one turnover, or say which gate rejected it.

    Gates, checked in order: ball at least ``gate_min_x`` from the losing team's
    goal at the turnover; at least ``min_defenders`` outfield defenders in every
    window frame; no missing frames in the windows; no restart among the
    following events. Events are truncated at the end of the period.
    """
    team = turnover.losing_team
    period = turnover.event.event.period
    flip = not _attacks_right(directions, period, team)
    following = []
    for s in events[turnover.index + 1 :]:
        if len(following) == cfg.n_events or s.event.period != period:
            break
        following.append(s)

    row0 = tracking.index_of(turnover.event.frame_id)
    ball_x = float(tracking.ball[row0, 0])
    if flip:
        ball_x = pitch.length - ball_x
    if ball_x < cfg.gate_min_x:
        return Extraction(turnover, reason=RejectReason.DEFENSIVE_THIRD_GATE)

    wanted = sorted({f for s in (turnover.event, *following) for f in range(s.window[0], s.window[1] + 1)})
    rows = [tracking.index_of(f) for f in wanted]
    present = np.array([r for r in rows if r is not None], dtype=np.int64)
    frames = tracking.take(present).reflected(flip, pitch.length, pitch.width)
    n_def = np.sum(~np.isnan(frames.pos[:, frames.outfield_mask(team), 0]), axis=1)
    if np.any(n_def < cfg.min_defenders):
        return Extraction(turnover, reason=RejectReason.INSUFFICIENT_DEFENDERS)
    if len(present) < len(wanted):
        return Extraction(turnover, reason=RejectReason.INCOMPLETE_TRACKING)
    if any(s.event.kind.is_restart() for s in following):
        return Extraction(turnover, reason=RejectReason.RESTART)

    cols = back_four_columns(frames, team)
    back_four = [tuple(frames.player_ids[c] for c in r) for r in cols]
    seq = TransitionSequence(
        seq_id=turnover.turnover_id,
        losing_team=team,
        turnover_event=turnover.event,
        events=following,
        frames=frames,
        back_four=back_four,
        turnover_ball_x=ball_x,
    )
    seq.label = label_outcome(seq, pitch)
    return Extraction(turnover, sequence=seq)


def extract_all(
    events: Sequence[SyncedEvent],
    tracking: Tracking,
    directions: dict,
    pitch: Pitch = Pitch(),
    cfg: TransitionConfig = TransitionConfig(),
) -> list[Extraction]:
    return [extract_sequence(t, events, tracking, directions, pitch, cfg) for t in detect_turnovers(events, cfg)]


def extraction_records(extractions: Sequence[Extraction]) -> list[dict]:
    """One summary row per detected turnover: status, reason, label, back four at the turnover frame."""
    rows = []
    for x in extractions:
        t = x.turnover
        row = {
            "turnover_id": t.turnover_id,
            "period": t.event.event.period,
            "losing_team": t.losing_team,
            "cause": t.cause,
            "frame_id": t.event.frame_id,
            "status": "valid" if x.sequence is not None else "rejected",
            "reason": None if x.reason is None else x.reason.value,
            "label": None,
            "label_reason": None,
            "back_four": None,
        }
        if x.sequence is not None:
            seq = x.sequence
            k = int(np.flatnonzero(seq.frames.frame_id == t.event.frame_id)[0])
            row.update(label=seq.label.value, label_reason=seq.label.reason.value, back_four=list(seq.back_four[k]))
        rows.append(row)
    return rows


def check_sequence(seq: TransitionSequence, pitch: Pitch = Pitch(), cfg: TransitionConfig = TransitionConfig()) -> list[str]:
    """Re-check the validity invariants of an emitted sequence; returns violations."""
    problems = []
    if seq.turnover_ball_x < cfg.gate_min_x:
        problems.append("turnover inside gate")
    if len(seq.events) > cfg.n_events:
        problems.append("too many events")
    if any(s.event.kind.is_restart() for s in seq.events):
        problems.append("restart in sequence")
    gk = set(np.asarray(seq.frames.player_ids)[seq.frames.is_goalkeeper])
    for b in seq.back_four:
        if len(set(b)) != 4 or gk & set(b):
            problems.append("malformed back four")
            break
    wanted = sorted({f for s in (seq.turnover_event, *seq.events) for f in range(s.window[0], s.window[1] + 1)})
    if seq.frames.frame_id.tolist() != wanted:
        problems.append("frames differ from the union of event windows")
    n_def = np.sum(~np.isnan(seq.frames.pos[:, seq.frames.outfield_mask(seq.losing_team), 0]), axis=1)
    if np.any(n_def < cfg.min_defenders):
        problems.append("too few defenders")
    return problems


# --- serialization -------------------------------------------------------


def sequence_to_dict(seq: TransitionSequence) -> dict:
    return {
        "seq_id": seq.seq_id,
        "losing_team": seq.losing_team,
        "turnover_ball_x": seq.turnover_ball_x,
        "label": seq.label.value,
        "reason": seq.label.reason.value,
        "turnover_event": synced_to_dict(seq.turnover_event),
        "events": [synced_to_dict(s) for s in seq.events],
        "back_four": [list(b) for b in seq.back_four],
        "frames": list(seq.frames.records()),
    }


def sequence_from_dict(d: dict) -> TransitionSequence:
    frames = Tracking.from_rows([parse_frame_row(f) for f in d["frames"]])
    frames.canonical = True
    return TransitionSequence(
        seq_id=d["seq_id"],
        losing_team=d["losing_team"],
        turnover_event=synced_from_dict(d["turnover_event"]),
        events=[synced_from_dict(s) for s in d["events"]],
        frames=frames,
        back_four=[tuple(b) for b in d["back_four"]],
        turnover_ball_x=float(d["turnover_ball_x"]),
        label=OutcomeLabel(int(d["label"]), LabelReason(d["reason"])),
    )


def write_sequences(seqs: Sequence[TransitionSequence], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in seqs:
            fh.write(dumps(sequence_to_dict(s)) + "\n")


def read_sequences(path) -> list[TransitionSequence]:
    try:
        with open(path, encoding="utf-8") as fh:
            return [sequence_from_dict(json.loads(line)) for line in fh if line.strip()]
    except FileNotFoundError:
        raise MissingInputError(f"sequences file not found: {path}") from None
