import json
import logging

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from backline.errors import CorruptInputError, MissingInputError
from backline.ingest import (
    EventKind,
    Tracking,
    infer_carrier,
    infer_directions,
    read_events,
    read_tracking,
    validate_match,
    write_events,
    write_tracking,
)
from conftest import make_event, make_frame


def _frame_line(fid, x=10.0, period=1, ts=None):
    return {
        "frame_id": fid,
        "period": period,
        "timestamp_ms": fid * 40 if ts is None else ts,
        "ball": {"x": 50.0, "y": 30.0, "carrier": None},
        "players": [
            {"id": "home_01", "team": "home", "x": x, "y": 34.0, "vx": 0.0, "vy": 0.0, "gk": True},
            {"id": "away_02", "team": "away", "x": 60.0, "y": 20.0, "vx": 1.0, "vy": -2.0, "gk": False},
        ],
    }


def _write_lines(path, lines):
    path.write_text("".join((json.dumps(l) if not isinstance(l, str) else l) + "\n" for l in lines))
    return path


def test_read_valid_tracking(tmp_path):
    p = _write_lines(tmp_path / "t.jsonl", [_frame_line(i) for i in range(3)])
    rejects = []
    t = read_tracking(p, rejects)
    assert len(t) == 3 and rejects == []
    assert t[1].player("away_02").velocity == (1.0, -2.0)
    assert t.player_ids == ["home_01", "away_02"]


def test_nan_line_rejected_and_logged(tmp_path, caplog):
    lines = [json.dumps(_frame_line(i)) for i in range(30)]
    lines[5] = lines[5].replace('"x": 10.0', '"x": NaN')
    p = _write_lines(tmp_path / "t.jsonl", lines)
    rejects = []
    with caplog.at_level(logging.WARNING):
        t = read_tracking(p, rejects)
    assert len(t) == 29
    assert [r.line for r in rejects] == [6]
    assert "rejected 1 of 30" in caplog.text


def test_too_many_rejects_is_corrupt(tmp_path):
    lines = [json.dumps(_frame_line(i)) for i in range(10)] + ["{not json"]
    with pytest.raises(CorruptInputError):
        read_tracking(_write_lines(tmp_path / "t.jsonl", lines))


def test_empty_file_warns(tmp_path, caplog):
    p = tmp_path / "t.jsonl"
    p.write_text("")
    with caplog.at_level(logging.WARNING):
        assert len(read_tracking(p)) == 0
    assert "empty" in caplog.text


def test_missing_file(tmp_path):
    with pytest.raises(MissingInputError):
        read_tracking(tmp_path / "nope.jsonl")


def test_implausible_speed_rejected(tmp_path):
    lines = [_frame_line(i) for i in range(40)]
    lines[3]["players"][1]["vx"] = 20.0
    rejects = []
    t = read_tracking(_write_lines(tmp_path / "t.jsonl", lines), rejects)
    assert len(t) == 39 and rejects[0].line == 4 and "speed" in rejects[0].reason


def test_duplicate_player_rejected(tmp_path):
    lines = [_frame_line(i) for i in range(40)]
    lines[0]["players"].append(dict(lines[0]["players"][0]))
    rejects = []
    read_tracking(_write_lines(tmp_path / "t.jsonl", lines), rejects)
    assert rejects and rejects[0].line == 1


def test_frames_sorted(tmp_path):
    lines = [_frame_line(2, period=2), _frame_line(5), _frame_line(1)]
    t = read_tracking(_write_lines(tmp_path / "t.jsonl", lines))
    assert list(zip(t.period, t.frame_id)) == [(1, 1), (1, 5), (2, 2)]


def _event_line(eid, ts, kind="pass", period=1):
    return {"event_id": eid, "period": period, "timestamp_ms": ts, "kind": kind, "team": "home",
            "player": "home_02", "x": 1.0, "y": 2.0, "outcome": None}


def test_read_events_sorted(tmp_path):
    lines = [_event_line(f"e{i}", (10 - i) * 100) for i in range(10)]
    ev = read_events(_write_lines(tmp_path / "e.jsonl", lines))
    assert len(ev) == 10
    assert [e.timestamp_ms for e in ev] == sorted(e.timestamp_ms for e in ev)


def test_unknown_kind_maps_to_other(tmp_path, caplog):
    with caplog.at_level(logging.WARNING):
        ev = read_events(_write_lines(tmp_path / "e.jsonl", [_event_line("e1", 0, kind="dribble")]))
    assert ev[0].kind is EventKind.OTHER
    assert "dribble" in caplog.text


def test_restart_kinds():
    assert {k for k in EventKind if k.is_restart()} == {
        EventKind.THROW_IN, EventKind.OFFSIDE, EventKind.FOUL, EventKind.OTHER_RESTART
    }


def test_roundtrip_byte_identical(tmp_path, small_match):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    sub = small_match.tracking[:200]
    write_tracking(sub, a)
    write_tracking(read_tracking(a), b)
    assert a.read_bytes() == b.read_bytes()
    ea, eb = tmp_path / "ea.jsonl", tmp_path / "eb.jsonl"
    write_events(small_match.events, ea)
    write_events(read_events(ea), eb)
    assert ea.read_bytes() == eb.read_bytes()


def test_frames_and_tracking_agree(small_match):
    sub = small_match.tracking[:50]
    again = Tracking.from_frames(list(sub))
    np.testing.assert_array_equal(again.pos, sub.pos)
    assert again.player_ids == sub.player_ids
    assert again.carrier == sub.carrier


@settings(max_examples=200, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(st.binary(max_size=400))
def test_parser_never_panics(tmp_path, data):
    p = tmp_path / "fuzz.jsonl"
    p.write_bytes(data)
    rejects = []
    try:
        read_tracking(p, rejects)
        read_events(p, [])
    except CorruptInputError:
        pass
    assert all(r.line >= 1 or r.line == -1 for r in rejects)
    assert all(r.reason for r in rejects)


def test_validate_complete_fixture():
    frames = [make_frame(i, home=[(10, 10)]) for i in range(5)]
    ev = [make_event("e1", 0, "pass", "home", "home_02")]
    s = validate_match(frames, ev)
    assert s.n_gaps == 0 and not s.excluded


def test_validate_missing_period_two():
    frames = [make_frame(i, home=[(10, 10)]) for i in range(5)]
    ev = [make_event("e1", 0, "pass", "home", "home_02"), make_event("e2", 0, "pass", "home", "home_02", period=2)]
    s = validate_match(frames, ev)
    assert s.excluded and "period 2" in s.reasons[0]


def test_validate_player_histogram_and_gaps():
    frames = [make_frame(i, home=[(10, 10)] * 10, away=[(50, 10)] * 10) for i in range(3)]
    frames.append(make_frame(10, home=[(10, 10)] * 10, away=[(50, 10)] * 10))
    s = validate_match(frames, [])
    assert s.players_per_frame == {20: 4}
    assert s.n_gaps == 1 and s.gaps[0][1:3] == (2, 10)


def test_infer_directions_from_goalkeepers():
    f1 = make_frame(0, home=[(30, 30)], away=[(70, 30)], gk={"home": (3, 34), "away": (100, 34)})
    f2 = make_frame(1, home=[(30, 30)], away=[(70, 30)], gk={"home": (101, 34), "away": (4, 34)}, period=2)
    d = infer_directions(Tracking.from_frames([f1, f2]))
    assert d == {1: {"home": True, "away": False}, 2: {"home": False, "away": True}}


def test_infer_carrier():
    f = make_frame(home=[(50, 30), (51.5, 30)], away=[(50.5, 30)], ball=(51, 30))
    assert infer_carrier(f, "home") == "home_03"
    assert infer_carrier(f, "away") == "away_02"
    assert infer_carrier(make_frame(home=[(10, 10)], ball=(51, 30)), "home") is None
    assert infer_carrier(make_frame(home=[(10, 10)], carrier="x"), "home") == "x"
