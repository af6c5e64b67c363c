"""SVG renderings: zone map, single-frame back-four view, team x outcome interaction plot.

Everything is built with ElementTree and drawn in canonical coordinates (the
defending team's goal at x = 0), one SVG unit per ``scale`` pixels.
"""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from backline.geometry import DEFAULT_ZONES, Pitch, ZoneKind, ZoneScheme, convex_hull
from backline.indicators import INDICATORS, FrameIndicators
from backline.ingest import Frame, other_team

SVG_NS = "http://www.w3.org/2000/svg"
ZONE_COLORS = {
    ZoneKind.CENTRAL_FINAL_THIRD: "#d62728",
    ZoneKind.PENALTY_BOX_PROXIMITY: "#ff7f0e",
    ZoneKind.WING_POCKETS: "#2ca02c",
    ZoneKind.BALL_CARRIER_RADIUS: "#1f77b4",
}
ZONE_TITLES = {
    ZoneKind.CENTRAL_FINAL_THIRD: "Central final third",
    ZoneKind.PENALTY_BOX_PROXIMITY: "Penalty box proximity",
    ZoneKind.WING_POCKETS: "Wing pockets",
    ZoneKind.BALL_CARRIER_RADIUS: "Ball carrier radius",
}
TEAM_COLORS = {"A": "#1f77b4", "B": "#d62728"}


def _f(v: float) -> str:
    return f"{v:.2f}"


def _svg(width: float, height: float, title: str) -> ET.Element:
    root = ET.Element(
        "svg", {"xmlns": SVG_NS, "width": _f(width), "height": _f(height), "viewBox": f"0 0 {_f(width)} {_f(height)}"}
    )
    ET.SubElement(root, "title").text = title
    return root


def _tostring(root: ET.Element) -> str:
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def _sub(parent: ET.Element, tag: str, **attrs) -> ET.Element:
    return ET.SubElement(parent, tag, {k.rstrip("_").replace("_", "-"): str(v) for k, v in attrs.items()})


def _pitch_outline(root: ET.Element, pitch: Pitch, s: float, m: float) -> None:
    g = _sub(root, "g", class_="pitch")
    _sub(g, "rect", x=_f(m), y=_f(m), width=_f(pitch.length * s), height=_f(pitch.width * s), fill="#f4f8f0", stroke="#555")
    box_y = (pitch.width - pitch.penalty_box_width) / 2
    _sub(
        g, "rect", x=_f(m), y=_f(m + box_y * s), width=_f(pitch.penalty_box_depth * s),
        height=_f(pitch.penalty_box_width * s), fill="none", stroke="#555",
    )
    _sub(g, "line", x1=_f(m + pitch.length / 2 * s), y1=_f(m), x2=_f(m + pitch.length / 2 * s), y2=_f(m + pitch.width * s), stroke="#555")


def zone_shapes(kind: ZoneKind, pitch: Pitch, ball=None) -> list[tuple]:
    """Shapes of a zone in pitch meters: ("rect", x, y, w, h) or ("circle", cx, cy, r)."""
    cy = pitch.width / 2
    half = pitch.penalty_box_width / 2
    if kind is ZoneKind.CENTRAL_FINAL_THIRD:
        return [("rect", pitch.penalty_box_depth, cy - half, pitch.final_third_depth - pitch.penalty_box_depth, 2 * half)]
    if kind is ZoneKind.PENALTY_BOX_PROXIMITY:
        h = half + pitch.proximity_buffer
        return [("rect", 0.0, cy - h, pitch.penalty_box_depth + pitch.proximity_buffer, 2 * h)]
    if kind is ZoneKind.WING_POCKETS:
        return [
            ("rect", 0.0, 0.0, pitch.final_third_depth, cy - half),
            ("rect", 0.0, cy + half, pitch.final_third_depth, pitch.width - cy - half),
        ]
    if kind is ZoneKind.BALL_CARRIER_RADIUS:
        bx, by = ball if ball is not None else (pitch.final_third_depth + 2 * pitch.ball_radius_zone, cy)
        return [("circle", bx, by, pitch.ball_radius_zone)]
    raise ValueError(kind)


def render_zones_svg(pitch: Pitch = Pitch(), scheme: ZoneScheme = DEFAULT_ZONES, scale: float = 8.0) -> str:
    """The four tactical zones, color coded, with a legend giving each weight.

    Zones are drawn lowest priority first so overlaps show the zone that wins.
    The ball-carrier zone is drawn around an example ball position.
    """
    m = 20.0
    legend_h = 24.0 * (len(scheme.zones) + 1)
    root = _svg(pitch.length * scale + 2 * m, pitch.width * scale + 2 * m + legend_h, "Tactical zones")
    _pitch_outline(root, pitch, scale, m)
    for zone in reversed(scheme.zones):
        g = _sub(
            root, "g", class_="zone", id=f"zone-{zone.kind.value}", data_zone=zone.kind.value,
            data_weight=repr(zone.weight), fill=ZONE_COLORS[zone.kind], fill_opacity="0.35",
        )
        for shape in zone_shapes(zone.kind, pitch):
            if shape[0] == "rect":
                _, x, y, w, h = shape
                _sub(g, "rect", x=_f(m + x * scale), y=_f(m + y * scale), width=_f(w * scale), height=_f(h * scale))
            else:
                _, cx, cy, r = shape
                _sub(g, "circle", cx=_f(m + cx * scale), cy=_f(m + cy * scale), r=_f(r * scale))
    legend = _sub(root, "g", class_="legend")
    y0 = pitch.width * scale + 2 * m
    for k, zone in enumerate(scheme.zones):
        y = y0 + 20.0 * k + 10.0
        _sub(legend, "rect", x=_f(m), y=_f(y), width="14", height="14", fill=ZONE_COLORS[zone.kind], fill_opacity="0.6")
        t = _sub(legend, "text", x=_f(m + 20), y=_f(y + 12), font_size="13", data_zone=zone.kind.value)
        t.text = f"{ZONE_TITLES[zone.kind]} (w = {zone.weight:.2f})"
    return _tostring(root)


def render_frame_svg(
    frame: Frame,
    back_four: Sequence[str],
    indicators: FrameIndicators,
    losing_team: str,
    pitch: Pitch = Pitch(),
    top_k: int = 3,
    scale: float = 8.0,
) -> str:
    """One canonical frame: back four with its hull, top attackers, ball, line-height guide and values."""
    m = 20.0
    root = _svg(pitch.length * scale + 2 * m, pitch.width * scale + 2 * m + 40.0, f"Frame {frame.frame_id}")
    _pitch_outline(root, pitch, scale, m)

    def px(p) -> tuple[str, str]:
        return _f(m + p[0] * scale), _f(m + p[1] * scale)

    bf = set(back_four)
    defenders = [p for p in frame.players if p.player_id in bf]
    attackers = sorted(frame.outfield(other_team(losing_team)), key=lambda p: (p.position.x, p.player_id))[:top_k]
    shown = bf | {p.player_id for p in attackers}

    others = _sub(root, "g", class_="others", fill="#bbb")
    for p in frame.players:
        if p.player_id not in shown:
            cx, cy = px(p.position)
            _sub(others, "circle", cx=cx, cy=cy, r="4", data_player=p.player_id)

    hull = convex_hull([p.position for p in defenders])
    if len(hull) >= 3:
        pts = " ".join(",".join(px(v)) for v in hull)
        _sub(root, "polygon", class_="hull", points=pts, fill="#1f77b4", fill_opacity="0.2", stroke="#1f77b4")

    line_x = m + indicators.line_height_abs * scale
    _sub(
        root, "line", class_="line-height", x1=_f(line_x), y1=_f(m), x2=_f(line_x), y2=_f(m + pitch.width * scale),
        stroke="#1f77b4", stroke_dasharray="6,4",
    )
    g = _sub(root, "g", class_="defenders", fill="#1f77b4")
    for p in defenders:
        cx, cy = px(p.position)
        _sub(g, "circle", cx=cx, cy=cy, r="6", data_player=p.player_id)
    g = _sub(root, "g", class_="attackers", fill="#d62728")
    for p in attackers:
        cx, cy = px(p.position)
        _sub(g, "circle", cx=cx, cy=cy, r="6", data_player=p.player_id)
        if defenders:
            near = min(defenders, key=lambda d: math.dist(d.position, p.position))
            x2, y2 = px(near.position)
            _sub(g, "line", x1=cx, y1=cy, x2=x2, y2=y2, stroke="#d62728", stroke_width="1")
    bx, by = px(frame.ball)
    _sub(root, "circle", class_="ball", cx=bx, cy=by, r="4", fill="#000")

    notes = _sub(root, "g", class_="annotations", font_size="13")
    y = m + pitch.width * scale + 28.0
    text = (
        f"stretch {indicators.stretch_index:.2f}   pressure {indicators.pressure_index}   "
        f"space {indicators.space_score:.3f}   L {indicators.line_height_abs:.2f} m   R {indicators.line_height_rel:.2f} m"
    )
    _sub(notes, "text", x=_f(m), y=_f(y)).text = text
    return _tostring(root)


def interaction_means(
    df: pd.DataFrame, feature: str, team_col: str = "team", outcome_col: str = "outcome"
) -> pd.DataFrame:
    """Mean, standard error and count per (team, outcome) cell."""
    g = df.groupby([team_col, outcome_col])[feature]
    out = pd.DataFrame({"mean": g.mean(), "sd": g.std(ddof=1), "n": g.size()})
    out["se"] = out["sd"] / np.sqrt(out["n"])
    return out.reset_index()


def render_interaction_plot(
    df: pd.DataFrame,
    features: Sequence[str] = INDICATORS,
    team_col: str = "team",
    outcome_col: str = "outcome",
    panel: float = 220.0,
) -> str:
    """One panel per feature: a line per team joining its failure and success means, with SE bars."""
    m, top = 40.0, 30.0
    root = _svg(panel * len(features) + m, panel + top + 60.0, "Team x outcome interaction")
    teams = sorted(df[team_col].unique().tolist())
    for k, feat in enumerate(features):
        cells = interaction_means(df, feat, team_col, outcome_col)
        lo = float(np.nanmin(cells["mean"] - cells["se"].fillna(0)))
        hi = float(np.nanmax(cells["mean"] + cells["se"].fillna(0)))
        if not hi > lo:
            lo, hi = lo - 1.0, hi + 1.0
        x0 = m + k * panel
        h = panel - 40.0

        def sy(v: float) -> float:
            return top + h * (hi - v) / (hi - lo)

        g = _sub(root, "g", class_="panel", data_feature=feat)
        _sub(g, "rect", x=_f(x0), y=_f(top), width=_f(panel - 30), height=_f(h), fill="none", stroke="#999")
        _sub(g, "text", x=_f(x0), y=_f(top - 10), font_size="12").text = feat
        for val, label in ((lo, lo), (hi, hi)):
            _sub(g, "text", x=_f(x0 - 4), y=_f(sy(val)), font_size="9", text_anchor="end").text = f"{label:.3g}"
        xs = {0: x0 + 0.25 * (panel - 30), 1: x0 + 0.75 * (panel - 30)}
        for o, name in ((0, "failure"), (1, "success")):
            _sub(g, "text", x=_f(xs[o]), y=_f(top + h + 15), font_size="10", text_anchor="middle").text = name
        for team in teams:
            color = TEAM_COLORS.get(team, "#555")
            rows = cells[cells[team_col] == team].set_index(outcome_col)
            tg = _sub(g, "g", class_="series", data_team=str(team), stroke=color, fill=color)
            pts = [(xs[o], sy(float(rows.loc[o, "mean"]))) for o in (0, 1) if o in rows.index]
            if len(pts) == 2:
                _sub(tg, "polyline", points=" ".join(f"{_f(x)},{_f(y)}" for x, y in pts), fill="none")
            for o in (0, 1):
                if o not in rows.index:
                    continue
                mu, se = float(rows.loc[o, "mean"]), float(np.nan_to_num(rows.loc[o, "se"]))
                _sub(tg, "line", class_="errorbar", x1=_f(xs[o]), y1=_f(sy(mu - se)), x2=_f(xs[o]), y2=_f(sy(mu + se)))
                _sub(tg, "circle", cx=_f(xs[o]), cy=_f(sy(mu)), r="3", data_mean=repr(mu), data_se=repr(se))
    legend = _sub(root, "g", class_="legend", font_size="11")
    for j, team in enumerate(teams):
        y = top + panel - 5 + 14 * j
        _sub(legend, "text", x=_f(m), y=_f(y), fill=TEAM_COLORS.get(team, "#555")).text = f"Team {team}"
    return _tostring(root)


def parse_svg(text: str) -> ET.Element:
    """Parse an emitted SVG (raises ``ET.ParseError`` if it is not well-formed)."""
    return ET.fromstring(text.encode("utf-8"))


def svg_find_all(root: ET.Element, tag: str, cls: Optional[str] = None) -> list:
    found = root.iter(f"{{{SVG_NS}}}{tag}")
    return [e for e in found if cls is None or e.get("class") == cls]
