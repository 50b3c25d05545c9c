"""Minimal SVG rendering of monitoring charts.

Presentational only: points for daily values, dashed control-limit or
threshold lines, filled markers on flagged days. Output is not covered by any
bit-exactness guarantee.
"""
from __future__ import annotations

from .charts import ChartRow

_W, _H, _PAD = 760, 360, 48


def _scale(vals: list[float], lo: float, hi: float, out_lo: float, out_hi: float) -> list[float]:
    span = (hi - lo) or 1.0
    return [out_lo + (v - lo) / span * (out_hi - out_lo) for v in vals]


def _polyline(xs: list[float], ys: list[float], color: str, dash: str = "") -> str:
    pts = " ".join(f"{x:.1f},{y:.1f}" for x, y in zip(xs, ys))
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash_attr} points="{pts}"/>'


def render_chart_svg(rows: list[ChartRow], title: str = "") -> str:
    """Render 3-sigma (value + limit band) or CUSUM (both sums + thresholds)."""
    days = [r.day for r in rows]
    is_cusum = rows and rows[0].s_plus is not None
    series: list[tuple[str, list[float], str]] = []
    guides: list[float] = []
    if is_cusum:
        series.append(("#3366cc", [r.s_plus for r in rows], ""))
        series.append(("#33a02c", [r.s_minus for r in rows], ""))
        flag_y = [r.s_plus if (r.side is None or r.side.value == "high") else r.s_minus
                  for r in rows]
    else:
        series.append(("#3366cc", [r.value for r in rows], ""))
        guides = [rows[0].lower, rows[0].upper] if rows else []
        flag_y = [r.value for r in rows]

    all_vals = [v for _, vs, _ in series for v in vs] + guides
    lo, hi = (min(all_vals), max(all_vals)) if all_vals else (0.0, 1.0)
    margin = 0.05 * ((hi - lo) or 1.0)
    lo, hi = lo - margin, hi + margin
    xs = _scale([float(d) for d in days], float(min(days, default=0)),
                float(max(days, default=1)), _PAD, _W - _PAD)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
             f'viewBox="0 0 {_W} {_H}">',
             f'<rect width="{_W}" height="{_H}" fill="white"/>']
    if title:
        parts.append(f'<text x="{_W / 2}" y="20" text-anchor="middle" '
                     f'font-family="sans-serif" font-size="14">{title}</text>')
    for g in guides:
        y = _scale([g], lo, hi, _H - _PAD, _PAD)[0]
        parts.append(_polyline([_PAD, _W - _PAD], [y, y], "#444444", dash="6,4"))
    for color, vs, dash in series:
        parts.append(_polyline(xs, _scale(vs, lo, hi, _H - _PAD, _PAD), color, dash))
        for x, y in zip(xs, _scale(vs, lo, hi, _H - _PAD, _PAD)):
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2" fill="{color}"/>')
    for r, x, fy in zip(rows, xs, flag_y):
        if r.flag:
            y = _scale([fy], lo, hi, _H - _PAD, _PAD)[0]
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="5" fill="black"/>')
    axis_y = _H - _PAD
    parts.append(_polyline([_PAD, _W - _PAD], [axis_y, axis_y], "#000000"))
    parts.append(_polyline([_PAD, _PAD], [axis_y, _PAD], "#000000"))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
