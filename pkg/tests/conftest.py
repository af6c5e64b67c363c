from __future__ import annotations

import pytest

from backline.config import PipelineConfig
from backline.geometry import Point2
from backline.ingest import EventKind, Frame, MatchEvent, Outcome, PlayerState, Tracking
from backline.sync import SyncedEvent
from backline.synthgen import SynthConfig, generate_match

ALL_INVALID = {"defensive_third_gate": 1, "insufficient_defenders": 1, "incomplete_tracking": 1, "restart": 1}

# filled by tests/test_acceptance.py, printed at the end of the session
ACCEPTANCE_RESULTS: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")


def make_frame(frame_id=0, home=(), away=(), ball=(52.5, 34.0), period=1, ts=None, gk=None, carrier=None):
    """Frame with outfield players ``home_02..`` and ``away_02..`` at the given points.

    ``gk`` maps team -> goalkeeper position (ids ``home_01`` / ``away_01``).
    """
    players = []
    for team, pts in (("home", home), ("away", away)):
        if gk and team in gk:
            players.append(PlayerState(f"{team}_01", team, Point2(*gk[team]), (0.0, 0.0), True))
        for i, p in enumerate(pts):
            players.append(PlayerState(f"{team}_{i + 2:02d}", team, Point2(*p), (0.0, 0.0), False))
    return Frame(frame_id, period, frame_id * 40 if ts is None else ts, Point2(*ball), tuple(players), carrier)


def make_event(eid, ts, kind, team, player, loc=None, outcome=None, period=1):
    return MatchEvent(
        eid,
        ts,
        period,
        EventKind(kind),
        team,
        player,
        None if loc is None else Point2(*loc),
        None if outcome is None else Outcome(outcome),
    )


def synced(event, frame_id, half=30, bounds=(0, 10**9)):
    return SyncedEvent(event, frame_id, 1.0, (max(bounds[0], frame_id - half), min(bounds[1], frame_id + half)))


def tracking_of(frames) -> Tracking:
    return Tracking.from_frames(frames)


@pytest.fixture(scope="session")
def small_match():
    """One synthetic match with a planted clock shift and one turnover per reject reason."""
    return generate_match(SynthConfig(n_turnovers=24, clock_shift_ms=400, invalid=ALL_INVALID, seed=7))


@pytest.fixture(scope="session")
def pipeline_run(tmp_path_factory):
    """A full pipeline run on a small synthetic dataset: (config, out_dir, report)."""
    from backline.pipeline import run_pipeline

    out = tmp_path_factory.mktemp("run")
    cfg = PipelineConfig(
        synth=SynthConfig(n_turnovers=60, clock_shift_ms=400, invalid=ALL_INVALID, max_turnovers_per_match=40),
        out_dir=str(out),
    )
    return cfg, out, run_pipeline(cfg)


@pytest.fixture(scope="session")
def small_sequences(small_match):
    from backline.ingest import infer_directions
    from backline.sync import sync_events
    from backline.transitions import extract_all

    m = small_match
    ex = extract_all(sync_events(m.tracking, m.events), m.tracking, infer_directions(m.tracking))
    return [x.sequence for x in ex if x.sequence is not None]
