"""Self-contained SVG log-log line charts from CSV files."""
from __future__ import annotations

import csv
import math
import os
from collections import OrderedDict
from typing import Dict, Optional, Sequence
from xml.sax.saxutils import escape

WIDTH, HEIGHT = 640, 420
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 70, 150, 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


class PlotError(ValueError):
    pass


class MissingColumnError(PlotError):
    def __init__(self, column: str):
        super().__init__(f"column {column!r} not found in CSV header")
        self.column = column


def _read(csv_path: str, needed: Sequence[str], where: Optional[Dict[str, str]]):
    with open(csv_path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in list(needed) + list(where or {}):
            if col not in header:
                raise MissingColumnError(col)
        rows = list(reader)
    if not rows:
        raise PlotError(f"{csv_path} has no data rows")
    if where:
        rows = [r for r in rows if all(r[k] == v for k, v in where.items())]
        if not rows:
            raise PlotError(f"no rows match {where}")
    return rows


def _series(rows, x_col, y_col, group_cols):
    """Group rows; repeated x values within a group are averaged.  Non-positive points are dropped."""
    groups: "OrderedDict[str, Dict[float, list]]" = OrderedDict()
    for r in rows:
        label = ",".join(r[c] for c in group_cols) if group_cols else y_col
        try:
            x, y = float(r[x_col]), float(r[y_col])
        except ValueError:
            raise PlotError(f"non-numeric value in row {r}") from None
        bucket = groups.setdefault(label, {})
        if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y):
            bucket.setdefault(x, []).append(y)
    series = OrderedDict()
    for label, pts in groups.items():
        if pts:
            series[label] = [(x, sum(ys) / len(ys)) for x, ys in sorted(pts.items())]
    if not series:
        raise PlotError("no positive points to draw on log axes")
    return series


def _log_range(values):
    lo, hi = math.log10(min(values)), math.log10(max(values))
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float):
    decades = list(range(math.ceil(lo), math.floor(hi) + 1))
    if len(decades) >= 2:
        return decades
    return [lo + (hi - lo) * f for f in (0.1, 0.5, 0.9)]


def _fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def render_svg(series, x_label: str, y_label: str, title: str = "") -> str:
    xs = [x for pts in series.values() for x, _ in pts]
    ys = [y for pts in series.values() for _, y in pts]
    x_lo, x_hi = _log_range(xs)
    y_lo, y_hi = _log_range(ys)
    pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x):
        return MARGIN_LEFT + (math.log10(x) - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return MARGIN_TOP + (y_hi - math.log10(y)) / (y_hi - y_lo) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" '
        'fill="none" stroke="black"/>',
    ]
    if title:
        out.append(f'<text x="{MARGIN_LEFT + pw / 2:.2f}" y="{MARGIN_TOP - 10}" '
                   f'text-anchor="middle">{escape(title)}</text>')
    for t in _ticks(x_lo, x_hi):
        x = MARGIN_LEFT + (t - x_lo) / (x_hi - x_lo) * pw
        out.append(f'<line x1="{x:.2f}" y1="{MARGIN_TOP + ph}" x2="{x:.2f}" '
                   f'y2="{MARGIN_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{x:.2f}" y="{MARGIN_TOP + ph + 18}" text-anchor="middle">'
                   f'{escape(_tick_label(t))}</text>')
    for t in _ticks(y_lo, y_hi):
        y = MARGIN_TOP + (y_hi - t) / (y_hi - y_lo) * ph
        out.append(f'<line x1="{MARGIN_LEFT - 5}" y1="{y:.2f}" x2="{MARGIN_LEFT}" '
                   f'y2="{y:.2f}" stroke="black"/>')
        out.append(f'<text x="{MARGIN_LEFT - 8}" y="{y + 4:.2f}" text-anchor="end">'
                   f'{escape(_tick_label(t))}</text>')
    out.append(f'<text x="{MARGIN_LEFT + pw / 2:.2f}" y="{HEIGHT - 10}" '
               f'text-anchor="middle">{escape(x_label)}</text>')
    out.append(f'<text x="15" y="{MARGIN_TOP + ph / 2:.2f}" text-anchor="middle" '
               f'transform="rotate(-90 15 {MARGIN_TOP + ph / 2:.2f})">{escape(y_label)}</text>')
    for i, (label, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        for x, y in pts:
            out.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="2.5" fill="{color}"/>')
        ly = MARGIN_TOP + 10 + 18 * i
        lx = MARGIN_LEFT + pw + 12
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" '
                   f'stroke="{color}" stroke-width="1.5"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _tick_label(t: float) -> str:
    if abs(t - round(t)) < 1e-9:
        return f"1e{int(round(t))}"
    return _fmt(10 ** t)


def emit_svg(
    csv_path: str,
    x_col: str,
    y_col: str,
    group_cols: Sequence[str] = (),
    out_path: str = "plot.svg",
    where: Optional[Dict[str, str]] = None,
    title: str = "",
) -> str:
    """Draw ``y_col`` against ``x_col`` on log-log axes, one line per ``group_cols`` value.

    ``where`` keeps only rows whose columns equal the given strings.  Nothing is
    written if the CSV has no usable rows.
    """
    rows = _read(csv_path, [x_col, y_col, *group_cols], where)
    text = render_svg(_series(rows, x_col, y_col, list(group_cols)), x_col, y_col, title)
    parent = os.path.dirname(out_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return out_path
