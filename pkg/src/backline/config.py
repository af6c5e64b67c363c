"""Pipeline configuration: one JSON document, schema-checked, unknown keys rejected."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import jsonschema
from referencing import Registry, Resource

from backline.errors import MissingInputError, ValidationError
from backline.geometry import Pitch, ZoneKind, ZoneScheme
from backline.indicators import IndicatorConfig
from backline.ml.models import ModelConfig
from backline.sync import SyncConfig
from backline.synthgen import SynthConfig
from backline.transitions import TransitionConfig

CONFIG_VERSION = 1
ALGORITHMS = ("gbdt", "random_forest")
TEAM_LABELS = {"home": "A", "away": "B"}


def team_label(losing_team: str) -> str:
    """Team factor level for a sequence: the defending (losing) side, home -> A, away -> B."""
    if losing_team not in TEAM_LABELS:
        raise ValidationError(f"unknown team {losing_team!r}")
    return TEAM_LABELS[losing_team]


SCHEMA_NAMES = ("config", "report", "anova", "descriptives", "eval", "attribution", "model", "truth")


def load_schema(name: str) -> dict:
    text = resources.files("backline").joinpath("schemas", f"{name}.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@lru_cache(maxsize=None)
def _validator(name: str) -> jsonschema.Draft202012Validator:
    registry = Registry().with_resources(
        (f"backline/{n}.schema.json", Resource.from_contents(load_schema(n))) for n in SCHEMA_NAMES
    )
    return jsonschema.Draft202012Validator(load_schema(name), registry=registry)


def validate_json(obj, name: str) -> None:
    """Validate ``obj`` against the shipped schema ``name``; raises ValidationError."""
    e = jsonschema.exceptions.best_match(_validator(name).iter_errors(obj))
    if e is not None:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ValidationError(f"{name}: {where}: {e.message}")


@dataclass(frozen=True)
class StatsConfig:
    alpha: float = 0.05
    bonferroni_divisor: int = 4
    equal_var: bool = False
    z_threshold: float = 3.0
    iqr_k: float = 1.5


@dataclass(frozen=True)
class MLConfig:
    algorithms: tuple = ALGORITHMS
    test_fraction: float = 0.2
    cv_folds: int = 5
    background_size: int = 100
    threshold: float = 0.5
    tune_scale_pos_weight: bool = False


@dataclass(frozen=True)
class MatchInput:
    match_id: str
    tracking: str
    events: str
    truth: Optional[str] = None


def _default_models() -> dict:
    return {a: ModelConfig(algorithm=a) for a in ALGORITHMS}


@dataclass(frozen=True)
class PipelineConfig:
    seed: int = 42
    out_dir: str = "out"
    inputs: tuple = ()
    synth: Optional[SynthConfig] = None
    pitch: Pitch = Pitch()
    indicators: IndicatorConfig = IndicatorConfig()
    sync: SyncConfig = SyncConfig()
    transitions: TransitionConfig = TransitionConfig()
    stats: StatsConfig = StatsConfig()
    ml: MLConfig = MLConfig()
    models: dict = field(default_factory=_default_models)

    def model_config(self, algorithm: str) -> ModelConfig:
        return replace(self.models[algorithm], seed=self.seed)

    def with_seed(self, seed: int) -> "PipelineConfig":
        synth = None if self.synth is None else replace(self.synth, seed=seed)
        return replace(self, seed=seed, synth=synth)

    def to_dict(self) -> dict:
        ind = self.indicators
        return {
            "version": CONFIG_VERSION,
            "seed": self.seed,
            "out_dir": self.out_dir,
            "inputs": [asdict(m) for m in self.inputs],
            "synth": None if self.synth is None else self.synth.to_dict(),
            "pitch": asdict(self.pitch),
            "indicators": {
                "lam": ind.lam,
                "pressure_radius_m": ind.pressure_radius_m,
                "epsilon": ind.epsilon,
                "top_attackers": ind.top_attackers,
                "zone_weights": {k.value: w for k, w in ind.zones.weights.items()},
            },
            "sync": asdict(self.sync),
            "transitions": asdict(self.transitions),
            "stats": asdict(self.stats),
            "ml": {**asdict(self.ml), "algorithms": list(self.ml.algorithms)},
            "models": {a: {k: v for k, v in m.to_dict().items() if k not in ("algorithm", "seed")} for a, m in self.models.items()},
        }

    def digest(self) -> str:
        """Hash of everything that shapes results; output location and input paths are left out."""
        d = self.to_dict()
        del d["out_dir"]
        d["inputs"] = [m["match_id"] for m in d["inputs"]]
        return hashlib.sha256(json.dumps(d, sort_keys=True, separators=(",", ":")).encode()).hexdigest()

    @classmethod
    def from_dict(cls, d: dict, base_dir: Optional[Path] = None) -> "PipelineConfig":
        validate_json(d, "config")
        if d.get("version", CONFIG_VERSION) != CONFIG_VERSION:
            raise ValidationError(f"unsupported config version {d['version']}")
        try:
            kw: dict = {}
            for key in ("seed", "out_dir"):
                if key in d:
                    kw[key] = d[key]
            if "inputs" in d:
                kw["inputs"] = tuple(_input(m, base_dir) for m in d["inputs"])
            if d.get("synth") is not None:
                kw["synth"] = SynthConfig.from_dict(d["synth"])
            if "pitch" in d:
                kw["pitch"] = Pitch(**d["pitch"])
            if "indicators" in d:
                ind = dict(d["indicators"])
                weights = ind.pop("zone_weights", None)
                if weights is not None:
                    ind["zones"] = ZoneScheme({ZoneKind(k): float(v) for k, v in weights.items()})
                kw["indicators"] = IndicatorConfig(**ind)
            if "sync" in d:
                kw["sync"] = SyncConfig(**d["sync"])
            if "transitions" in d:
                kw["transitions"] = TransitionConfig(**d["transitions"])
            if "stats" in d:
                kw["stats"] = StatsConfig(**d["stats"])
            if "ml" in d:
                ml = dict(d["ml"])
                if "algorithms" in ml:
                    ml["algorithms"] = tuple(ml["algorithms"])
                kw["ml"] = MLConfig(**ml)
            models = _default_models()
            for algo, params in d.get("models", {}).items():
                models[algo] = ModelConfig(algorithm=algo, **params)
            kw["models"] = models
            cfg = cls(**kw)
        except (TypeError, ValueError) as e:
            raise ValidationError(f"config: {e}") from None
        _cross_checks(cfg)
        return cfg


def _input(m: dict, base_dir: Optional[Path]) -> MatchInput:
    def resolve(p):
        if p is None or base_dir is None or Path(p).is_absolute():
            return p
        return str(base_dir / p)

    return MatchInput(m["match_id"], resolve(m["tracking"]), resolve(m["events"]), resolve(m.get("truth")))


def _cross_checks(cfg: PipelineConfig) -> None:
    if cfg.stats.bonferroni_divisor < 1:
        raise ValidationError("bonferroni_divisor must be at least 1")
    if len({m.match_id for m in cfg.inputs}) != len(cfg.inputs):
        raise ValidationError("duplicate match_id in inputs")
    if not set(cfg.ml.algorithms) <= set(ALGORITHMS) or not cfg.ml.algorithms:
        raise ValidationError(f"ml.algorithms must be a non-empty subset of {ALGORITHMS}")


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise MissingInputError(f"config file not found: {path}") from None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"config {path}: invalid JSON ({e})") from None
    return PipelineConfig.from_dict(d, base_dir=path.parent)
