"""Per-frame defensive indicators for the back four.

All inputs are canonical: the defending team's goal line is at x = 0, and the
"most advanced" attackers are those with the smallest x.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from backline.geometry import DEFAULT_ZONES, Pitch, Point2, ZoneScheme, convex_hull_area, zone_codes
from backline.ingest import other_team
from backline.transitions import TransitionSequence, top_attacker_columns

INDICATORS = ("stretch_index", "pressure_index", "space_score", "line_height_abs", "line_height_rel")


@dataclass(frozen=True)
class IndicatorConfig:
    lam: float = 0.5
    pressure_radius_m: float = 3.0
    epsilon: float = 1.0
    zones: ZoneScheme = field(default_factory=lambda: DEFAULT_ZONES)
    top_attackers: int = 3

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError("lam must lie in [0, 1]")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.pressure_radius_m < 0 or self.top_attackers < 1:
            raise ValueError("invalid pressure radius or attacker count")


@dataclass(frozen=True)
class FrameIndicators:
    frame_id: int
    stretch_index: float
    pressure_index: int
    space_score: float
    line_height_abs: float
    line_height_rel: float
    degraded: bool = False


def _min_dists(defenders, attackers) -> np.ndarray:
    d = np.asarray(defenders, dtype=float).reshape(-1, 2)
    a = np.asarray(attackers, dtype=float).reshape(-1, 2)
    if len(a) == 0:
        return np.zeros(0)
    return np.min(np.hypot(a[:, None, 0] - d[None, :, 0], a[:, None, 1] - d[None, :, 1]), axis=1)


def pda(defenders, attackers) -> float:
    """Mean distance from each attacker to its closest defender (0 with no attackers)."""
    m = _min_dists(defenders, attackers)
    return float(m.mean()) if len(m) else 0.0


def stretch_index(defenders, attackers, cfg: IndicatorConfig = IndicatorConfig()) -> float:
    """lam * hull area of the back four + (1 - lam) * PDA.

    Area (m^2) and distance (m) are mixed as-is.
    """
    if len(defenders) != 4:
        raise ValueError(f"stretch index needs exactly 4 defenders, got {len(defenders)}")
    return cfg.lam * convex_hull_area(defenders) + (1.0 - cfg.lam) * pda(defenders, attackers)


def pressure_index(defenders, attackers, cfg: IndicatorConfig = IndicatorConfig()) -> int:
    """Attackers strictly closer than the pressure radius to some defender."""
    return int(np.sum(_min_dists(defenders, attackers) < cfg.pressure_radius_m))


def _space_from_counts(d_counts, a_counts, weights, eps):
    d = np.asarray(d_counts, dtype=float)
    a = np.asarray(a_counts, dtype=float)
    return np.sum(np.asarray(weights) * (d - a) / (d + a + eps), axis=-1)


def space_score(
    defending_players,
    attacking_players,
    ball: Point2,
    pitch: Pitch = Pitch(),
    cfg: IndicatorConfig = IndicatorConfig(),
) -> float:
    """Zone-weighted occupancy balance sum_z w_z (D_z - A_z) / (D_z + A_z + eps).

    Each player counts in at most one zone, the highest-priority one containing it.
    """
    zones = cfg.zones.zones
    k = len(zones)

    def counts(players):
        pts = np.asarray(players, dtype=float).reshape(-1, 2)
        codes = zone_codes(pts[:, 0], pts[:, 1], ball, pitch, cfg.zones)
        return np.bincount(codes[codes >= 0], minlength=k)

    return float(_space_from_counts(counts(defending_players), counts(attacking_players), [z.weight for z in zones], cfg.epsilon))


def line_height_abs(back_four) -> float:
    pts = np.asarray(back_four, dtype=float).reshape(-1, 2)
    if len(pts) != 4:
        raise ValueError(f"line height needs exactly 4 defenders, got {len(pts)}")
    return float(pts[:, 0].mean())


def line_height_rel(ball: Point2, line_height: float) -> float:
    """Ball x minus line height; positive when the line sits deeper than the ball."""
    return float(ball[0]) - float(line_height)


def compute_sequence_indicators(
    seq: TransitionSequence, cfg: IndicatorConfig = IndicatorConfig(), pitch: Pitch = Pitch()
) -> list[FrameIndicators]:
    """One :class:`FrameIndicators` per sequence frame (vectorized over frames)."""
    frames = seq.frames
    n = len(frames)
    if n == 0:
        return []
    attack = other_team(seq.losing_team)
    rows = np.arange(n)
    bf = np.array([[frames.column(pid) for pid in b] for b in seq.back_four], dtype=np.int64)
    defenders = frames.pos[rows[:, None], bf]  # (n, 4, 2)

    att_cols = top_attacker_columns(frames, attack, cfg.top_attackers)
    attackers = frames.pos[rows[:, None], np.where(att_cols < 0, 0, att_cols)]
    attackers[att_cols < 0] = np.nan
    diff = attackers[:, :, None, :] - defenders[:, None, :, :]
    mind = np.min(np.hypot(diff[..., 0], diff[..., 1]), axis=2)  # (n, k), NaN for absent attackers
    have = ~np.isnan(mind)
    n_att = have.sum(axis=1)
    pda_t = np.where(n_att > 0, np.nansum(mind, axis=1) / np.maximum(n_att, 1), 0.0)
    pressure = np.sum(have & (np.nan_to_num(mind, nan=np.inf) < cfg.pressure_radius_m), axis=1)
    area = np.array([convex_hull_area(d) for d in defenders])
    stretch = cfg.lam * area + (1.0 - cfg.lam) * pda_t

    zones = cfg.zones.zones
    ball = frames.ball
    codes = zone_codes(frames.pos[:, :, 0], frames.pos[:, :, 1], (ball[:, :1], ball[:, 1:]), pitch, cfg.zones)
    d_mask = frames.outfield_mask(seq.losing_team)
    a_mask = frames.outfield_mask(attack)
    zidx = np.arange(len(zones))
    hits = codes[:, :, None] == zidx[None, None, :]  # (n, P, k)
    d_counts = hits[:, d_mask, :].sum(axis=1)
    a_counts = hits[:, a_mask, :].sum(axis=1)
    space = _space_from_counts(d_counts, a_counts, [z.weight for z in zones], cfg.epsilon)

    lh_abs = defenders[:, :, 0].mean(axis=1)
    lh_rel = ball[:, 0] - lh_abs
    return [
        FrameIndicators(
            int(frames.frame_id[i]),
            float(stretch[i]),
            int(pressure[i]),
            float(space[i]),
            float(lh_abs[i]),
            float(lh_rel[i]),
            bool(n_att[i] == 0),
        )
        for i in range(n)
    ]
