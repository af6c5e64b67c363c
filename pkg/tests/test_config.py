import json
from dataclasses import replace

import pytest

from backline.config import PipelineConfig, load_config, team_label, validate_json
from backline.errors import MissingInputError, ValidationError
from backline.indicators import IndicatorConfig
from backline.synthgen import SynthConfig


def test_default_roundtrip():
    cfg = PipelineConfig(synth=SynthConfig(n_turnovers=5))
    d = cfg.to_dict()
    validate_json(d, "config")
    back = PipelineConfig.from_dict(json.loads(json.dumps(d)))
    assert back.to_dict() == d
    assert back.digest() == cfg.digest()


def test_partial_config_fills_defaults():
    cfg = PipelineConfig.from_dict({"seed": 7, "indicators": {"lam": 0.25}})
    assert cfg.seed == 7 and cfg.indicators.lam == 0.25
    assert cfg.indicators.pressure_radius_m == 3.0
    assert cfg.transitions == PipelineConfig().transitions


@pytest.mark.parametrize("bad", [
    {"seeds": 1},
    {"indicators": {"lambda": 0.5}},
    {"synth": {"n_matches": 2}},
    {"models": {"svm": {}}},
])
def test_unknown_keys_rejected(bad):
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict(bad)


@pytest.mark.parametrize("bad", [
    {"indicators": {"lam": 1.5}},
    {"stats": {"alpha": 0.0}},
    {"stats": {"bonferroni_divisor": 0}},
    {"ml": {"test_fraction": 1.0}},
    {"seed": "x"},
    {"version": 2},
    {"ml": {"algorithms": []}},
])
def test_ranges_checked(bad):
    with pytest.raises(ValidationError):
        PipelineConfig.from_dict(bad)


def test_error_message_names_the_key():
    with pytest.raises(ValidationError, match="n_matches"):
        PipelineConfig.from_dict({"synth": {"n_matches": 2}})


def test_digest_tracks_results_not_locations():
    base = PipelineConfig()
    assert replace(base, out_dir="elsewhere").digest() == base.digest()
    assert replace(base, indicators=IndicatorConfig(lam=0.4)).digest() != base.digest()
    assert base.with_seed(43).digest() != base.digest()


def test_with_seed_reaches_synth_and_models():
    cfg = PipelineConfig(synth=SynthConfig()).with_seed(9)
    assert cfg.synth.seed == 9 and cfg.model_config("gbdt").seed == 9


def test_load_config_paths(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps({"inputs": [{"match_id": "m1", "tracking": "t.jsonl", "events": "e.jsonl"}]}))
    cfg = load_config(p)
    assert cfg.inputs[0].tracking == str(tmp_path / "t.jsonl")


def test_load_config_errors(tmp_path):
    with pytest.raises(MissingInputError):
        load_config(tmp_path / "missing.json")
    p = tmp_path / "bad.json"
    p.write_text("{nope")
    with pytest.raises(ValidationError):
        load_config(p)
    p.write_text(json.dumps({"inputs": [{"match_id": "m", "tracking": "a", "events": "b"}] * 2}))
    with pytest.raises(ValidationError):
        load_config(p)


def test_team_labels():
    assert team_label("home") == "A" and team_label("away") == "B"
    with pytest.raises(ValidationError):
        team_label("neutral")
