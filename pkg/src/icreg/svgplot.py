"""Minimal deterministic SVG 1.1 line charts for curve CSVs.

No plotting dependency: the chart is assembled as text with fixed
2-decimal coordinates, so the same input always produces byte-identical
output. Two CSV layouts are accepted: wide (x column followed by one
numeric column per series) and long (x column, a category column naming
the series, then the value column).
"""

from __future__ import annotations

import csv
import hashlib
import io
from pathlib import Path

from .errors import DataError
from .ioutil import atomic_write_text

WIDTH = 800
HEIGHT = 500
MARGIN_L = 70
MARGIN_R = 160
MARGIN_T = 40
MARGIN_B = 50
N_TICKS = 5

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _num(s: str) -> float | None:
    try:
        return float(s)
    except ValueError:
        return None


def read_curve_csv(path: str | Path) -> tuple[list[str], dict[str, list[tuple[float, float]]]]:
    """Parse a curve CSV into named series of (x, y) points.

    Returns (manifest comment lines, series). Raises DataError on a missing
    header, no data rows, or a malformed cell (reported with its line number).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    comments: list[str] = []
    table: list[tuple[int, list[str]]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            if stripped.startswith("#"):
                comments.append(stripped.lstrip("# "))
                continue
            table.append((lineno, next(csv.reader(io.StringIO(line)))))
    if not table:
        raise DataError(f"{path}: no header row")
    _, header = table[0]
    data = table[1:]
    if not data:
        raise DataError(f"{path}: no data rows")
    if len(header) < 2:
        raise DataError(f"{path}: need at least an x column and one value column")

    # a column is categorical if any data cell fails to parse as a number
    numeric = [True] * len(header)
    for lineno, row in data:
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        for j, cell in enumerate(row):
            if cell != "" and _num(cell) is None:
                numeric[j] = False
    if not numeric[0]:
        raise DataError(f"{path}: first column ({header[0]!r}) must be numeric")

    series: dict[str, list[tuple[float, float]]] = {}
    group_col = next((j for j in range(1, len(header)) if not numeric[j]), None)
    if group_col is None:
        for j in range(1, len(header)):
            series[header[j]] = []
        for lineno, row in data:
            x = _num(row[0])
            for j in range(1, len(header)):
                if row[j] != "":
                    series[header[j]].append((x, _num(row[j])))
    else:
        value_col = next((j for j in range(group_col + 1, len(header)) if numeric[j]), None)
        if value_col is None:
            raise DataError(f"{path}: no numeric value column after {header[group_col]!r}")
        for lineno, row in data:
            if row[value_col] == "":
                continue
            series.setdefault(row[group_col], []).append((_num(row[0]), _num(row[value_col])))
    series = {name: pts for name, pts in series.items() if pts}
    if not series:
        raise DataError(f"{path}: no plottable values")
    return comments, series


def render_line_chart(
    series: dict[str, list[tuple[float, float]]],
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    comments: list[str] | None = None,
) -> str:
    """Render named (x, y) series as a self-contained SVG 1.1 document."""
    if not series:
        raise DataError("nothing to plot")
    xs = [p[0] for pts in series.values() for p in pts]
    ys = [p[1] for pts in series.values() for p in pts]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B

    def px(x: float) -> float:
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w

    def py(y: float) -> float:
        return MARGIN_T + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
    ]
    for comment in comments or []:
        out.append(f"<!-- {comment} -->")
    out.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
    if title:
        out.append(
            f'<text x="{WIDTH / 2:.2f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="16">{_esc(title)}</text>'
        )
    ax = f'{MARGIN_L:.2f}'
    out.append(
        f'<line x1="{ax}" y1="{MARGIN_T:.2f}" x2="{ax}" y2="{MARGIN_T + plot_h:.2f}" '
        'stroke="black" stroke-width="1"/>'
    )
    out.append(
        f'<line x1="{ax}" y1="{MARGIN_T + plot_h:.2f}" x2="{MARGIN_L + plot_w:.2f}" '
        f'y2="{MARGIN_T + plot_h:.2f}" stroke="black" stroke-width="1"/>'
    )
    for t in range(N_TICKS + 1):
        fx = x_lo + (x_hi - x_lo) * t / N_TICKS
        fy = y_lo + (y_hi - y_lo) * t / N_TICKS
        out.append(
            f'<text x="{px(fx):.2f}" y="{MARGIN_T + plot_h + 20:.2f}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{fx:.4g}</text>'
        )
        out.append(
            f'<text x="{MARGIN_L - 8:.2f}" y="{py(fy) + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{fy:.4g}</text>'
        )
    if x_label:
        out.append(
            f'<text x="{MARGIN_L + plot_w / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{_esc(x_label)}</text>'
        )
    if y_label:
        cx, cy = 18, MARGIN_T + plot_h / 2
        out.append(
            f'<text x="{cx}" y="{cy:.2f}" text-anchor="middle" font-family="sans-serif" '
            f'font-size="13" transform="rotate(-90 {cx} {cy:.2f})">{_esc(y_label)}</text>'
        )
    for idx, (name, pts) in enumerate(series.items()):
        color = PALETTE[idx % len(PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{coords}"/>'
        )
        ly = MARGIN_T + 14 + idx * 18
        lx = MARGIN_L + plot_w + 14
        out.append(
            f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 22}" y2="{ly - 4}" '
            f'stroke="{color}" stroke-width="2"/>'
        )
        out.append(
            f'<text x="{lx + 28}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{_esc(name)}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def plot_csv(input_path: str | Path, output_path: str | Path) -> Path:
    """Chart a curve CSV into an SVG file; manifest comments carry over."""
    input_path = Path(input_path)
    comments, series = read_curve_csv(input_path)
    with open(input_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()[:12]
    comments = comments + [f"source={input_path.name} sha256={digest}"]
    svg = render_line_chart(series, title=input_path.stem, comments=comments)
    return atomic_write_text(output_path, svg)
