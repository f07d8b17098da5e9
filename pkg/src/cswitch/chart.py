"""Grouped horizontal bar charts as standalone SVG."""

from __future__ import annotations

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

from .analysis import CountTable, render_table, table_stem
from .errors import BadShape

COLORS = ("#4c72b0", "#dd8452")
LABEL_W = 250
PLOT_W = 420
BAR_H = 10
GROUP_GAP = 8
TOP = 40
BOTTOM = 50


@dataclass(frozen=True)
class ChartData:
    stem: str
    svg: str
    csv: str


def _nice_max(v: int) -> int:
    if v <= 0:
        return 1
    mag = 10 ** int(math.floor(math.log10(v)))
    for step in (1, 2, 2.5, 5, 10):
        if v <= step * mag:
            return int(math.ceil(step * mag))
    return 10 * mag


def _attr(v: str) -> str:
    return escape(v, {'"': "&quot;"})


def emit_chart_data(t: CountTable, allow_empty: bool = False) -> ChartData:
    if len(t.col_labels) != 2:
        raise BadShape(f"grouped bars need exactly 2 columns, got {len(t.col_labels)}")
    if not t.row_labels and not allow_empty:
        raise BadShape("table has no rows")

    n = len(t.row_labels)
    group_h = 2 * BAR_H + GROUP_GAP
    height = TOP + n * group_h + BOTTOM
    width = LABEL_W + PLOT_W + 40
    top = _nice_max(max((v for row in t.cells for v in row), default=0))
    scale = PLOT_W / top

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
        f'<title>{escape(t.row_axis)} by {escape(t.col_axis)}</title>',
        '<rect width="100%" height="100%" fill="#ffffff"/>',
    ]
    # legend
    for j, label in enumerate(t.col_labels):
        x = LABEL_W + j * 160
        out.append(f'<rect class="legend" x="{x}" y="12" width="12" height="12" fill="{COLORS[j]}"/>')
        out.append(f'<text x="{x + 16}" y="22">{escape(label)}</text>')

    # grid and ticks
    axis_y = TOP + n * group_h
    for k in range(5):
        value = top * k / 4
        x = LABEL_W + value * scale
        out.append(f'<line x1="{x:.2f}" y1="{TOP}" x2="{x:.2f}" y2="{axis_y}" stroke="#dddddd"/>')
        out.append(f'<text x="{x:.2f}" y="{axis_y + 14}" text-anchor="middle">{value:g}</text>')

    for i, (label, row) in enumerate(zip(t.row_labels, t.cells)):
        y0 = TOP + i * group_h
        out.append(
            f'<text x="{LABEL_W - 6}" y="{y0 + BAR_H + 4}" text-anchor="end">{escape(label)}</text>'
        )
        for j, v in enumerate(row):
            out.append(
                f'<rect class="bar" data-row="{_attr(label)}" data-col="{_attr(t.col_labels[j])}" '
                f'x="{LABEL_W}" y="{y0 + j * BAR_H}" width="{v * scale:.2f}" height="{BAR_H}" '
                f'fill="{COLORS[j]}"/>'
            )

    out.append(f'<line x1="{LABEL_W}" y1="{TOP}" x2="{LABEL_W}" y2="{axis_y}" stroke="#333333"/>')
    out.append(
        f'<text x="{LABEL_W + PLOT_W / 2:.0f}" y="{axis_y + 34}" text-anchor="middle">'
        f'sentences ({escape(t.col_axis)})</text>'
    )
    out.append(
        f'<text x="14" y="{TOP + n * group_h / 2:.0f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {TOP + n * group_h / 2:.0f})">{escape(t.row_axis)}</text>'
    )
    out.append("</svg>")
    return ChartData(table_stem(t), "\n".join(out) + "\n", render_table(t, "csv"))
