"""End-to-end orchestration: sync -> extract -> features -> aggregate -> stats -> train -> attribute.

Each stage has a plain function usable on its own (the CLI subcommands call
them) and :func:`run_pipeline` chains them, writing every intermediate artifact
under the output directory. Failures are re-raised as :class:`StageError`
tagged with the stage name; the wrapped error keeps its exit code.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from backline import __version__
from backline.aggregate import (
    aggregate_means,
    correlation_matrix,
    descriptives,
    feature_table,
    outlier_report,
    standardize,
)
from backline.config import MatchInput, PipelineConfig, team_label, validate_json
from backline.errors import BacklineError, MissingInputError, NumericalError, StageError, ValidationError
from backline.indicators import INDICATORS, FrameIndicators, compute_sequence_indicators
from backline.inference import alpha_star, anova_table, posthoc
from backline.ingest import infer_directions, read_events, read_tracking
from backline.ml.metrics import EvalReport, evaluate
from backline.ml.models import GradientBoostedTrees, train
from backline.ml.selection import cross_validate, stratified_split, tune_scale_pos_weight
from backline.ml.shapley import importance_comparison, shapley_values
from backline.report import render_frame_svg, render_interaction_plot, render_zones_svg
from backline.sync import estimate_offset, sync_events, write_synced
from backline.synthgen import generate_dataset, ground_truth_check
from backline.transitions import Extraction, TransitionSequence, extract_all, extraction_records, write_sequences

log = logging.getLogger(__name__)

STAGES = ("synth", "sync", "extract", "features", "aggregate", "stats", "train", "attribute", "report")
FRAME_FEATURE_COLUMNS = ("seq_id", "frame_id", "team", "outcome", *INDICATORS, "degraded")
REPORT_VERSION = 1


@contextmanager
def stage(name: str):
    """Tag any failure inside the block with the stage name."""
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except BacklineError as e:
        raise StageError(name, e) from e
    except (FloatingPointError, ZeroDivisionError, np.linalg.LinAlgError) as e:
        raise StageError(name, NumericalError(str(e))) from e


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def clean_json(obj):
    """Recursively turn numpy scalars into Python ones and non-finite floats into None."""
    if isinstance(obj, dict):
        return {str(k): clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return clean_json(obj.tolist())
    return obj


def write_json(obj, path, schema: Optional[str] = None) -> dict:
    """Write deterministic JSON (sorted keys); validates against a shipped schema first."""
    data = clean_json(obj)
    if schema is not None:
        validate_json(data, schema)
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(data, sort_keys=True, indent=1, allow_nan=False) + "\n", encoding="utf-8")
    return data


# --- stage functions -----------------------------------------------------


@dataclass
class MatchResult:
    match_id: str
    offsets: dict
    extractions: list
    sequences: list = field(default_factory=list)
    truth_diff: Optional[dict] = None


def sync_match(tracking, events, cfg: PipelineConfig):
    offsets = estimate_offset(tracking, events, cfg.sync)
    return sync_events(tracking, events, cfg.sync, offsets=offsets), offsets


def extract_match(synced, tracking, cfg: PipelineConfig) -> list[Extraction]:
    return extract_all(synced, tracking, infer_directions(tracking, cfg.pitch.length), cfg.pitch, cfg.transitions)


def write_rejects(rows: Sequence[dict], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["match_id", "turnover_id", "reason"])
        for r in rows:
            w.writerow([r["match_id"], r["turnover_id"], r["reason"]])


def frame_features(sequences: Sequence[TransitionSequence], cfg: PipelineConfig) -> pd.DataFrame:
    """Long table: one row per (sequence, frame) with the five indicators."""
    rows = []
    for seq in sequences:
        team = team_label(seq.losing_team)
        for fi in compute_sequence_indicators(seq, cfg.indicators, cfg.pitch):
            rows.append(
                (seq.seq_id, fi.frame_id, team, seq.label.value, fi.stretch_index, fi.pressure_index,
                 fi.space_score, fi.line_height_abs, fi.line_height_rel, fi.degraded)
            )
    return pd.DataFrame(rows, columns=list(FRAME_FEATURE_COLUMNS))


def read_frame_features(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype={"seq_id": str, "team": str})
    except FileNotFoundError:
        raise MissingInputError(f"frame features file not found: {path}") from None
    missing = set(FRAME_FEATURE_COLUMNS) - set(df.columns)
    if missing:
        raise ValidationError(f"{path}: missing columns {sorted(missing)}")
    return df


def read_features(path) -> pd.DataFrame:
    try:
        df = pd.read_csv(path, dtype={"seq_id": str, "team": str})
    except FileNotFoundError:
        raise MissingInputError(f"features file not found: {path}") from None
    missing = {"seq_id", "team", "outcome", *INDICATORS} - set(df.columns)
    if missing:
        raise ValidationError(f"{path}: missing columns {sorted(missing)}")
    return df


def aggregate_frame_features(ff: pd.DataFrame) -> tuple[pd.DataFrame, dict]:
    """Per-sequence means, then standardization (aggregation always comes first)."""
    vectors = []
    for seq_id, g in ff.groupby("seq_id", sort=True):
        frames = [
            FrameIndicators(int(r.frame_id), r.stretch_index, int(r.pressure_index), r.space_score,
                            r.line_height_abs, r.line_height_rel)
            for r in g.itertuples(index=False)
        ]
        vectors.append(aggregate_means(frames, str(seq_id), str(g["team"].iloc[0]), int(g["outcome"].iloc[0])))
    table = feature_table(vectors)
    table, fit = standardize(table)
    return table, fit.to_dict()


def features_from_matches(matches, cfg: PipelineConfig) -> pd.DataFrame:
    """In-memory sync, extract, features and aggregate for objects with
    ``match_id``, ``tracking`` and ``events`` (e.g. synthetic matches)."""
    parts = []
    for m in matches:
        synced, _ = sync_match(m.tracking, m.events, cfg)
        seqs = []
        for x in extract_match(synced, m.tracking, cfg):
            if x.sequence is not None:
                x.sequence.seq_id = f"{m.match_id}:{x.sequence.seq_id}"
                seqs.append(x.sequence)
        parts.append(frame_features(seqs, cfg))
    features, _ = aggregate_frame_features(pd.concat(parts, ignore_index=True))
    return features


def descriptives_report(features: pd.DataFrame, cfg: PipelineConfig) -> dict:
    return {
        "n": int(len(features)),
        "descriptives": descriptives(features).to_dict(orient="index"),
        "outliers": outlier_report(features, z_threshold=cfg.stats.z_threshold, k=cfg.stats.iqr_k),
        "correlation": correlation_matrix(features).to_dict(orient="index"),
    }


def run_stats(features: pd.DataFrame, cfg: PipelineConfig) -> dict:
    """Two-way ANOVA on the standardized features, then Bonferroni-corrected post-hoc tests."""
    z = features[["team", "outcome"]].copy()
    for f in INDICATORS:
        z[f] = features[f"z_{f}"] if f"z_{f}" in features else features[f]
    anova = anova_table(z, INDICATORS)
    rows = posthoc(
        z, anova, INDICATORS, cfg.stats.alpha, cfg.stats.bonferroni_divisor, equal_var=cfg.stats.equal_var
    )
    return {
        "alpha": cfg.stats.alpha,
        "bonferroni_divisor": cfg.stats.bonferroni_divisor,
        "alpha_star": alpha_star(cfg.stats.alpha, cfg.stats.bonferroni_divisor),
        "anova": anova.to_dict(orient="records"),
        "posthoc": [r.to_dict() for r in rows],
    }


@dataclass
class TeamModel:
    team: str
    algorithm: str
    model: object
    report: EvalReport
    train_idx: np.ndarray
    test_idx: np.ndarray


def train_team(features: pd.DataFrame, team: str, algorithm: str, cfg: PipelineConfig) -> TeamModel:
    """Fit one model for one team: stratified split, 5-fold CV on train, evaluation on test."""
    sub = features[features["team"] == team].sort_values("seq_id").reset_index(drop=True)
    X = sub[list(INDICATORS)].to_numpy(dtype=float)
    y = sub["outcome"].to_numpy(dtype=int)
    if len(np.unique(y)) < 2:
        raise ValidationError(f"team {team}: need both outcomes to train")
    tr, te = stratified_split(y, cfg.ml.test_fraction, cfg.seed)
    mcfg = cfg.model_config(algorithm)
    if algorithm == "gbdt" and cfg.ml.tune_scale_pos_weight:
        spw = tune_scale_pos_weight(X[tr], y[tr], mcfg, k=cfg.ml.cv_folds)
        model = GradientBoostedTrees(
            mcfg.n_estimators, mcfg.learning_rate, mcfg.max_depth, mcfg.reg_lambda, mcfg.min_child_weight, spw
        ).fit(X[tr], y[tr])
    else:
        model = train(X[tr], y[tr], mcfg)
    report = evaluate(model, X[te], y[te], cfg.ml.threshold)
    cv = cross_validate(X[tr], y[tr], mcfg, k=cfg.ml.cv_folds, threshold=cfg.ml.threshold)
    report.cv_mean, report.cv_std = cv.auc_mean, cv.auc_std
    return TeamModel(team, algorithm, model, report, sub["seq_id"].to_numpy()[tr], sub["seq_id"].to_numpy()[te])


def attribute_team(tm: TeamModel, features: pd.DataFrame, cfg: PipelineConfig) -> dict:
    """Exact Shapley values on the test rows against a seeded background drawn from train."""
    by_id = features.set_index("seq_id")
    X_tr = by_id.loc[tm.train_idx, list(INDICATORS)].to_numpy(dtype=float)
    X_te = by_id.loc[tm.test_idx, list(INDICATORS)].to_numpy(dtype=float)
    rng = np.random.default_rng(cfg.seed)
    k = min(cfg.ml.background_size, len(X_tr))
    background = X_tr[np.sort(rng.choice(len(X_tr), k, replace=False))]
    attr = shapley_values(tm.model.decision_function, X_te, background, INDICATORS)
    table, rho = importance_comparison(tm.model, attr)
    return {
        "team": tm.team,
        "algorithm": tm.algorithm,
        "baseline": attr.baseline,
        "n_instances": int(len(X_te)),
        "n_background": int(k),
        "spearman_rho": rho,
        "table": table.to_dict(orient="records"),
        "phi": attr.phi,
    }


# --- orchestration -------------------------------------------------------


def _synthesize(cfg: PipelineConfig, out: Path) -> tuple[MatchInput, ...]:
    fixtures = out / "fixtures"
    inputs = []
    for m in generate_dataset(cfg.synth):
        paths = m.write(fixtures)
        inputs.append(MatchInput(m.match_id, str(paths["tracking"]), str(paths["events"]), str(paths["truth"])))
    return tuple(inputs)


def run_pipeline(cfg: PipelineConfig, out_dir=None) -> dict:
    """Run every stage and return the analysis report (also written to ``report.json``)."""
    out = Path(out_dir if out_dir is not None else cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    inputs = cfg.inputs
    if not inputs:
        if cfg.synth is None:
            raise StageError("sync", MissingInputError("no inputs configured and no synth block to generate them"))
        with stage("synth"):
            inputs = _synthesize(cfg, out)

    results: list[MatchResult] = []
    provenance_inputs = []
    for mi in inputs:
        with stage("sync"):
            tracking = read_tracking(mi.tracking)
            events = read_events(mi.events)
            synced, offsets = sync_match(tracking, events, cfg)
            write_synced(synced, _mkdir(out / "synced") / f"{mi.match_id}.jsonl")
        provenance_inputs.append(
            {"match_id": mi.match_id, "tracking_sha256": sha256_file(mi.tracking), "events_sha256": sha256_file(mi.events)}
        )
        with stage("extract"):
            ex = extract_match(synced, tracking, cfg)
            res = MatchResult(mi.match_id, {str(k): int(v) for k, v in sorted(offsets.items())}, ex)
            for x in ex:
                if x.sequence is not None:
                    x.sequence.seq_id = f"{mi.match_id}:{x.sequence.seq_id}"
                    res.sequences.append(x.sequence)
            write_sequences(res.sequences, _mkdir(out / "sequences") / f"{mi.match_id}.jsonl")
            if mi.truth is not None:
                truth = _read_truth(mi.truth)
                res.truth_diff = ground_truth_check(extraction_records(ex), truth).to_dict()
        results.append(res)

    records = []
    for res in results:
        for r in extraction_records(res.extractions):
            records.append({"match_id": res.match_id, **r})
    with stage("extract"):
        write_rejects([r for r in records if r["status"] == "rejected"], out / "rejects.csv")
        sequences = [s for res in results for s in res.sequences]
        if not sequences:
            raise ValidationError("no valid transition sequences extracted")

    with stage("features"):
        ff = frame_features(sequences, cfg)
        ff.to_csv(out / "frame_features.csv", index=False)

    with stage("aggregate"):
        features, scaler = aggregate_frame_features(ff)
        features.to_csv(out / "features.csv", index=False)
        desc = descriptives_report(features, cfg)
        write_json({**desc, "standardizer": scaler}, out / "descriptives.json", "descriptives")

    with stage("stats"):
        stats = run_stats(features, cfg)
        write_json(stats, out / "anova.json", "anova")

    teams = sorted(features["team"].unique().tolist())
    fitted: list[TeamModel] = []
    with stage("train"):
        for team in teams:
            for algo in cfg.ml.algorithms:
                tm = train_team(features, team, algo, cfg)
                write_json(tm.model.to_dict(), _mkdir(out / "models") / f"{team}_{algo}.json", "model")
                fitted.append(tm)
        evals = {tm.team: {} for tm in fitted}
        for tm in fitted:
            evals[tm.team][tm.algorithm] = tm.report.to_dict()
        write_json(evals, out / "eval.json", "eval")

    with stage("attribute"):
        attributions = {tm.team: {} for tm in fitted}
        for tm in fitted:
            attributions[tm.team][tm.algorithm] = attribute_team(tm, features, cfg)
        write_json(attributions, out / "attribution.json", "attribution")

    with stage("report"):
        figures = _mkdir(out / "figures")
        (figures / "zones.svg").write_text(render_zones_svg(cfg.pitch, cfg.indicators.zones), encoding="utf-8")
        (figures / "interaction.svg").write_text(render_interaction_plot(features), encoding="utf-8")
        first = min(sequences, key=lambda s: s.seq_id)
        (figures / "frame.svg").write_text(turnover_frame_svg(first, cfg), encoding="utf-8")
        report = _assemble(cfg, results, records, sequences, desc, stats, evals, attributions, provenance_inputs)
        report = write_json(report, out / "report.json", "report")
    return report


def turnover_frame_svg(seq: TransitionSequence, cfg: PipelineConfig) -> str:
    """Annotated snapshot of ``seq`` at its turnover frame."""
    k = int(np.flatnonzero(seq.frames.frame_id == seq.turnover_event.frame_id)[0])
    fi = compute_sequence_indicators(seq, cfg.indicators, cfg.pitch)[k]
    return render_frame_svg(seq.frames[k], seq.back_four[k], fi, seq.losing_team, cfg.pitch)


def _assemble(cfg, results, records, sequences, desc, stats, evals, attributions, provenance_inputs) -> dict:
    reasons: dict = {}
    for r in records:
        if r["status"] == "rejected":
            reasons[r["reason"]] = reasons.get(r["reason"], 0) + 1
    labels = np.array([s.label.value for s in sequences])
    per_team: dict = {}
    for s in sequences:
        t = per_team.setdefault(team_label(s.losing_team), {"n": 0, "n_success": 0})
        t["n"] += 1
        t["n_success"] += s.label.value
    truth = [r.truth_diff for r in results if r.truth_diff is not None]
    ground_truth = None
    if truth:
        ground_truth = {
            "n_planted": sum(t["n_planted"] for t in truth),
            "n_planted_valid": sum(t["n_planted_valid"] for t in truth),
            "n_recovered_valid": sum(t["n_recovered_valid"] for t in truth),
            "n_label_agree": sum(t["n_label_agree"] for t in truth),
            "mismatches": [m for t in truth for m in t["mismatches"]],
            "ok": all(t["ok"] for t in truth),
        }
    return {
        "report_version": REPORT_VERSION,
        "provenance": {
            "package_version": __version__,
            "config_digest": cfg.digest(),
            "seed": cfg.seed,
            "inputs": provenance_inputs,
        },
        "data": {
            "n_matches": len(results),
            "n_turnovers": len(records),
            "n_sequences": len(sequences),
            "n_rejected": len(records) - len(sequences),
            "rejects_by_reason": dict(sorted(reasons.items())),
            "success_rate": float(labels.mean()),
            "per_team": per_team,
            "sync_offsets_ms": {r.match_id: r.offsets for r in results},
        },
        "ground_truth": ground_truth,
        "descriptives": desc["descriptives"],
        "outliers": desc["outliers"],
        "correlation": desc["correlation"],
        "stats": stats,
        "models": evals,
        "attribution": {
            team: {algo: {k: v for k, v in a.items() if k != "phi"} for algo, a in per.items()}
            for team, per in attributions.items()
        },
    }


def _mkdir(p: Path) -> Path:
    p.mkdir(parents=True, exist_ok=True)
    return p


def _read_truth(path) -> dict:
    try:
        truth = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise MissingInputError(f"truth file not found: {path}") from None
    validate_json(truth, "truth")
    return truth
