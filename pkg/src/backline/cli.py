"""``backline`` command line: one subcommand per pipeline stage plus ``run``.

Exit codes: 0 success, 1 validation failure, 2 missing input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from backline import __version__
from backline.config import PipelineConfig, load_config, validate_json
from backline.errors import BacklineError, MissingInputError, NumericalError, ValidationError
from backline.ingest import read_events, read_tracking
from backline.ml.models import ModelConfig
from backline.pipeline import (
    aggregate_frame_features,
    attribute_team,
    descriptives_report,
    extract_match,
    frame_features,
    read_features,
    read_frame_features,
    run_pipeline,
    run_stats,
    stage,
    sync_match,
    train_team,
    turnover_frame_svg,
    write_json,
    write_rejects,
)
from backline.report import render_interaction_plot, render_zones_svg
from backline.sync import read_synced, write_synced
from backline.synthgen import SynthConfig, generate_dataset
from backline.transitions import extraction_records, read_sequences, write_sequences

log = logging.getLogger("backline")


def _pipeline_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out_dir is not None:
        cfg = replace(cfg, out_dir=args.out_dir)
    return cfg


def _out(args, name: str, explicit: Optional[str]) -> Path:
    """Explicit path, else ``name`` inside --out-dir (or the working directory)."""
    if explicit:
        path = Path(explicit)
    else:
        path = Path(args.out_dir or ".") / name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def cmd_synth(args) -> int:
    cfg = SynthConfig()
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MissingInputError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as e:
            raise ValidationError(f"{args.config}: invalid JSON ({e})") from None
        if "synth" in d:  # a full pipeline config
            d = d["synth"] or {}
        validate_json({"synth": d}, "config")
        try:
            cfg = SynthConfig.from_dict(d)
        except ValueError as e:
            raise ValidationError(str(e)) from None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.n_turnovers is not None:
        cfg = replace(cfg, n_turnovers=args.n_turnovers)
    out = Path(args.out_dir or "fixtures")
    inputs = []
    with stage("synth"):
        for m in generate_dataset(cfg):
            paths = m.write(out)
            inputs.append({k: p.name for k, p in paths.items()} | {"match_id": m.match_id})
            log.info("wrote %s (%d frames, %d events)", m.match_id, len(m.tracking), len(m.events))
    # a ready-to-run pipeline config next to the fixtures
    pipeline = {"version": 1, "seed": cfg.seed, "inputs": inputs}
    (out / "pipeline.json").write_text(json.dumps(pipeline, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    print(f"{len(inputs)} match(es) written to {out}")
    return 0


def cmd_sync(args) -> int:
    cfg = _pipeline_config(args)
    with stage("sync"):
        tracking = read_tracking(args.tracking)
        events = read_events(args.events)
        synced, offsets = sync_match(tracking, events, cfg)
        path = _out(args, "synced.jsonl", args.out)
        write_synced(synced, path)
    print(f"synced {len(synced)}/{len(events)} events; offsets (ms) {dict(sorted(offsets.items()))} -> {path}")
    return 0


def cmd_extract(args) -> int:
    cfg = _pipeline_config(args)
    with stage("extract"):
        tracking = read_tracking(args.tracking)
        synced = read_synced(args.synced)
        ex = extract_match(synced, tracking, cfg)
        seqs = [x.sequence for x in ex if x.sequence is not None]
        path = _out(args, "sequences.jsonl", args.out)
        write_sequences(seqs, path)
        rejects = args.rejects or str(path.with_name(path.stem + "_rejects.csv"))
        match_id = args.match_id or Path(args.tracking).stem
        rows = [{"match_id": match_id, **r} for r in extraction_records(ex) if r["status"] == "rejected"]
        write_rejects(rows, rejects)
    print(f"{len(seqs)} sequences, {len(rows)} rejected turnovers -> {path}, {rejects}")
    return 0


def cmd_features(args) -> int:
    cfg = _pipeline_config(args)
    with stage("features"):
        seqs = read_sequences(args.sequences)
        ff = frame_features(seqs, cfg)
        path = _out(args, "frame_features.csv", args.out)
        ff.to_csv(path, index=False)
    print(f"{len(ff)} frame rows from {len(seqs)} sequences -> {path}")
    return 0


def cmd_aggregate(args) -> int:
    cfg = _pipeline_config(args)
    with stage("aggregate"):
        ff = read_frame_features(args.frame_features)
        features, scaler = aggregate_frame_features(ff)
        path = _out(args, "features.csv", args.out)
        features.to_csv(path, index=False)
        report = _out(args, "descriptives.json", args.report)
        write_json({**descriptives_report(features, cfg), "standardizer": scaler}, report, "descriptives")
    print(f"{len(features)} sequences -> {path}, {report}")
    return 0


def cmd_stats(args) -> int:
    cfg = _pipeline_config(args)
    with stage("stats"):
        features = read_features(args.features)
        stats = run_stats(features, cfg)
        path = _out(args, "anova.json", args.out)
        write_json(stats, path, "anova")
    for r in stats["anova"]:
        print(f"{r['feature']:<16} {r['source']:<13} F={r['F']:9.3f} p={r['p_unc']:.3g} eta2p={r['partial_eta_sq']:.3f}")
    return 0


def cmd_train(args) -> int:
    cfg = _pipeline_config(args)
    if args.algo not in cfg.models:
        cfg = replace(cfg, models={**cfg.models, args.algo: ModelConfig(algorithm=args.algo)})
    with stage("train"):
        features = read_features(args.features)
        if args.team not in set(features["team"]):
            raise ValidationError(f"team {args.team!r} not in features (have {sorted(set(features['team']))})")
        tm = train_team(features, args.team, args.algo, cfg)
        model_path = _out(args, f"{args.team}_{args.algo}.json", args.out)
        write_json(tm.model.to_dict(), model_path, "model")
        report_path = _out(args, "eval.json", args.report)
        write_json({args.team: {args.algo: tm.report.to_dict()}}, report_path, "eval")
    with stage("attribute"):
        if args.attribution:
            attr = attribute_team(tm, features, cfg)
            write_json({args.team: {args.algo: attr}}, args.attribution, "attribution")
    r = tm.report
    print(f"team {args.team} {args.algo}: test AUC {r.roc_auc:.3f}, CV AUC {r.cv_mean:.3f} +/- {r.cv_std:.3f} -> {model_path}")
    return 0


def cmd_report(args) -> int:
    cfg = _pipeline_config(args)
    out = Path(args.out_dir or "figures")
    out.mkdir(parents=True, exist_ok=True)
    with stage("report"):
        (out / "zones.svg").write_text(render_zones_svg(cfg.pitch, cfg.indicators.zones), encoding="utf-8")
        written = ["zones.svg"]
        if args.features:
            features = read_features(args.features)
            (out / "interaction.svg").write_text(render_interaction_plot(features), encoding="utf-8")
            written.append("interaction.svg")
        if args.sequences:
            seqs = read_sequences(args.sequences)
            if seqs:
                (out / "frame.svg").write_text(turnover_frame_svg(seqs[0], cfg), encoding="utf-8")
                written.append("frame.svg")
    print(f"wrote {', '.join(written)} to {out}")
    return 0


def cmd_run(args) -> int:
    cfg = _pipeline_config(args)
    report = run_pipeline(cfg)
    gt = report["ground_truth"]
    print(f"{report['data']['n_sequences']} sequences, {report['data']['n_rejected']} rejected -> {cfg.out_dir}/report.json")
    if gt is not None:
        print(
            f"ground truth: {gt['n_recovered_valid']}/{gt['n_planted_valid']} valid recovered, "
            f"{gt['n_label_agree']} labels agree, {len(gt['mismatches'])} mismatches"
        )
        if not gt["ok"]:
            return ValidationError.exit_code
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="override every seed in the configuration")
    common.add_argument("--out-dir", help="directory for outputs")
    common.add_argument("--log-level", default="WARNING", choices=["DEBUG", "INFO", "WARNING", "ERROR"])

    p = argparse.ArgumentParser(prog="backline", description=__doc__, parents=[common])
    p.add_argument("--version", action="version", version=f"backline {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="generate synthetic fixtures")
    s.add_argument("--n-turnovers", type=int)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("sync", parents=[common], help="align events to tracking frames")
    s.add_argument("--tracking", required=True)
    s.add_argument("--events", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sync)

    s = sub.add_parser("extract", parents=[common], help="detect turnovers and extract sequences")
    s.add_argument("--synced", required=True)
    s.add_argument("--tracking", required=True)
    s.add_argument("--out")
    s.add_argument("--rejects")
    s.add_argument("--match-id")
    s.set_defaults(func=cmd_extract)

    s = sub.add_parser("features", parents=[common], help="per-frame indicators")
    s.add_argument("--sequences", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("aggregate", parents=[common], help="per-sequence means, standardization, descriptives")
    s.add_argument("--frame-features", required=True)
    s.add_argument("--out")
    s.add_argument("--report")
    s.set_defaults(func=cmd_aggregate)

    s = sub.add_parser("stats", parents=[common], help="two-way ANOVA and post-hoc tests")
    s.add_argument("--features", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("train", parents=[common], help="fit one team model")
    s.add_argument("--features", required=True)
    s.add_argument("--team", required=True)
    s.add_argument("--algo", default="gbdt", choices=["gbdt", "random_forest"])
    s.add_argument("--out")
    s.add_argument("--report")
    s.add_argument("--attribution", help="also write Shapley attributions here")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("report", parents=[common], help="render SVG figures")
    s.add_argument("--features")
    s.add_argument("--sequences")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("run", parents=[common], help="run the whole pipeline")
    s.set_defaults(func=cmd_run)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BacklineError as e:
        print(f"error: {e}", file=sys.stderr)
        return e.exit_code
    except (FloatingPointError, ZeroDivisionError) as e:
        print(f"error: numerical failure: {e}", file=sys.stderr)
        return NumericalError.exit_code


if __name__ == "__main__":
    sys.exit(main())
