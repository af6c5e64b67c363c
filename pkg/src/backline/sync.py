"""Event-to-frame synchronization.

A global clock offset per period is estimated first by sliding the event
clock against the ball trajectory. Each event is then assigned the candidate
frame (within a search half-width of its corrected timestamp) that maximizes a
proximity/plausibility score.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from backline.errors import CannotSyncError, MissingInputError
from backline.ingest import MatchEvent, Tracking, dumps, event_to_dict, parse_event

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SyncConfig:
    w_ball: float = 0.5
    w_player: float = 0.4
    w_plausibility: float = 0.1
    ball_scale_m: float = 5.0
    player_scale_m: float = 3.0
    search_halfwidth_ms: int = 1000
    window_frames: int = 30
    offset_range_ms: int = 5000
    offset_step_ms: int = 40
    offset_events: int = 20
    max_offset_residual_m: float = 5.0
    max_speed: float = 13.0


@dataclass(frozen=True)
class SyncedEvent:
    event: MatchEvent
    frame_id: int
    sync_score: float
    window: tuple

    @property
    def event_id(self) -> str:
        return self.event.event_id


def synced_to_dict(s: SyncedEvent) -> dict:
    d = event_to_dict(s.event)
    d.update(frame_id=s.frame_id, sync_score=s.sync_score, window=list(s.window))
    return d


def synced_from_dict(d: dict) -> SyncedEvent:
    return SyncedEvent(parse_event(d), int(d["frame_id"]), float(d["sync_score"]), tuple(d["window"]))


def write_synced(synced: Sequence[SyncedEvent], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in synced:
            fh.write(dumps(synced_to_dict(s)) + "\n")


def read_synced(path) -> list[SyncedEvent]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        raise MissingInputError(f"synced events file not found: {path}") from None
    return [synced_from_dict(json.loads(line)) for line in lines if line.strip()]


def _nearest_rows(ts: np.ndarray, query: np.ndarray) -> np.ndarray:
    k = np.clip(np.searchsorted(ts, query), 1, len(ts) - 1)
    left = ts[k - 1]
    return np.where(np.abs(query - left) <= np.abs(ts[k] - query), k - 1, k)


def estimate_offset(tracking: Tracking, events: Sequence[MatchEvent], cfg: SyncConfig = SyncConfig()) -> dict:
    """Clock offset (ms) per period such that ``event.ts - offset`` aligns with tracking.

    The offset minimizes the mean ball-to-event-location distance over the
    first ``cfg.offset_events`` on-ball events with locations, searched on a
    grid of ``cfg.offset_step_ms`` within ``±cfg.offset_range_ms``. A minimum
    on the search boundary or a residual above ``cfg.max_offset_residual_m``
    means the true shift is out of range and raises :class:`CannotSyncError`.
    """
    offsets = {}
    grid = np.arange(-cfg.offset_range_ms, cfg.offset_range_ms + 1, cfg.offset_step_ms)
    for period in sorted({e.period for e in events}):
        rows = tracking.period_rows(period)
        evs = [e for e in events if e.period == period and e.kind.is_on_ball() and e.location is not None]
        evs = evs[: cfg.offset_events]
        if not evs:
            raise CannotSyncError(f"period {period}: no on-ball events with locations")
        if len(rows) < 2:
            raise CannotSyncError(f"period {period}: not enough tracking frames")
        ts = tracking.timestamp_ms[rows]
        ball = tracking.ball[rows]
        ev_ts = np.array([e.timestamp_ms for e in evs], dtype=np.int64)
        ev_xy = np.array([e.location for e in evs], dtype=float)
        k = _nearest_rows(ts, ev_ts[None, :] - grid[:, None])
        resid = np.hypot(*(ball[k] - ev_xy[None, :, :]).transpose(2, 0, 1)).mean(axis=1)
        # ties: smallest magnitude, then the negative side
        best = min(range(len(grid)), key=lambda i: (round(resid[i], 9), abs(grid[i]), grid[i]))
        if abs(grid[best]) >= cfg.offset_range_ms or resid[best] > cfg.max_offset_residual_m:
            raise CannotSyncError(
                f"period {period}: no offset within ±{cfg.offset_range_ms} ms aligns events "
                f"(best {int(grid[best])} ms, residual {resid[best]:.2f} m)"
            )
        offsets[period] = int(grid[best])
    return offsets


def match_event(
    event: MatchEvent, tracking: Tracking, offset: int = 0, cfg: SyncConfig = SyncConfig()
) -> Optional[SyncedEvent]:
    """Most plausible frame for one event, or None if the acting player is never tracked.

    score = w_ball*exp(-d_ball/5) + w_player*exp(-d_player/3) + w_plaus*[speed < 13]
    where distances are measured from the event location (the acting player's
    position stands in when the event has no location). Ties go to the earliest frame.
    """
    col = tracking.column(event.player_id)
    if col is None:
        return None
    rows = tracking.period_rows(event.period)
    if len(rows) == 0:
        return None
    t = event.timestamp_ms - offset
    ts = tracking.timestamp_ms[rows]
    lo = np.searchsorted(ts, t - cfg.search_halfwidth_ms, side="left")
    hi = np.searchsorted(ts, t + cfg.search_halfwidth_ms, side="right")
    cand = rows[lo:hi]
    player = tracking.pos[cand, col]
    present = ~np.isnan(player[:, 0])
    cand, player = cand[present], player[present]
    if len(cand) == 0:
        return None
    ref = player if event.location is None else np.broadcast_to(np.asarray(event.location, dtype=float), player.shape)
    d_ball = np.hypot(*(tracking.ball[cand] - ref).T)
    d_player = np.hypot(*(player - ref).T)
    speed = np.hypot(*tracking.vel[cand, col].T)
    plaus = (np.nan_to_num(speed, nan=0.0) < cfg.max_speed).astype(float)
    score = (
        cfg.w_ball * np.exp(-d_ball / cfg.ball_scale_m)
        + cfg.w_player * np.exp(-d_player / cfg.player_scale_m)
        + cfg.w_plausibility * plaus
    )
    best = int(np.argmax(score))
    row = cand[best]
    fid = int(tracking.frame_id[row])
    first, last = tracking.period_bounds(event.period)
    window = (max(first, fid - cfg.window_frames), min(last, fid + cfg.window_frames))
    return SyncedEvent(event, fid, float(score[best]), window)


def sync_events(
    tracking: Tracking,
    events: Sequence[MatchEvent],
    cfg: SyncConfig = SyncConfig(),
    offsets: Optional[dict] = None,
) -> list[SyncedEvent]:
    """Estimate offsets (unless given) and match every event; unmatched events are dropped."""
    if offsets is None:
        offsets = estimate_offset(tracking, events, cfg)
    out = []
    dropped = 0
    for e in events:
        s = match_event(e, tracking, offsets.get(e.period, 0), cfg)
        if s is None:
            dropped += 1
            log.info("event %s (%s by %s) unmatched: player not tracked", e.event_id, e.kind.value, e.player_id)
            continue
        out.append(s)
    if dropped:
        log.warning("%d of %d events unmatched and dropped", dropped, len(events))
    for a, b in zip(out, out[1:]):
        if a.event.period == b.event.period and b.frame_id < a.frame_id:
            log.warning("sync anomaly: event %s matched before its predecessor %s", b.event_id, a.event_id)
    return out
