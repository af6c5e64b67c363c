"""The five indicators on one turnover frame, plus the zone and frame figures.

    python demos/frame_tour.py
"""

from pathlib import Path

from backline.geometry import zone_membership
from backline.indicators import compute_sequence_indicators
from backline.ingest import infer_directions
from backline.report import render_frame_svg, render_zones_svg
from backline.sync import sync_events
from backline.synthgen import SynthConfig, generate_match
from backline.transitions import extract_all


def main() -> None:
    m = generate_match(SynthConfig(n_turnovers=4, seed=3))
    ex = extract_all(sync_events(m.tracking, m.events), m.tracking, infer_directions(m.tracking))
    seq = next(x.sequence for x in ex if x.sequence is not None)
    print(f"sequence {seq.seq_id}: {len(seq.frames)} frames, label {seq.label.value} ({seq.label.reason.value})")

    indicators = compute_sequence_indicators(seq)
    k = len(seq.frames) // 2
    frame, fi = seq.frames[k], indicators[k]
    print(f"frame {fi.frame_id}: stretch {fi.stretch_index:.2f}  pressure {fi.pressure_index}  "
          f"space {fi.space_score:+.3f}  L {fi.line_height_abs:.2f} m  R {fi.line_height_rel:.2f} m")

    for p in frame.outfield(seq.losing_team):
        z = zone_membership(p.position, frame.ball)
        print(f"  {p.player_id}  ({p.position.x:5.1f}, {p.position.y:5.1f})  {z.kind.value if z else '-'}")

    out = Path("demo_figures")
    out.mkdir(exist_ok=True)
    (out / "zones.svg").write_text(render_zones_svg())
    (out / "frame.svg").write_text(render_frame_svg(frame, seq.back_four[k], fi, seq.losing_team))
    print(f"figures written to {out}/")


if __name__ == "__main__":
    main()
