"""Deterministic SVG chart regeneration from extracted data tables.

The canvas is fixed at 640x480 with a 60-unit margin on every side; data
coordinates map affinely from the axis ranges onto the plot rectangle.
Coordinates are written with ``repr`` so the emitted bytes are identical for
identical inputs and geometry survives a parse round trip exactly.
"""

from __future__ import annotations

import re
from xml.sax.saxutils import escape

from ..descriptor import ValueKind
from ..errors import EmptyTable, MissingChartMeta, NonNumericAxis
from ..tables import Axis, ChartKind, DataTable, validate_table

CANVAS_W = 640.0
CANVAS_H = 480.0
MARGIN = 60.0
PLOT_LEFT = MARGIN
PLOT_RIGHT = CANVAS_W - MARGIN
PLOT_TOP = MARGIN
PLOT_BOTTOM = CANVAS_H - MARGIN
PLOT_W = PLOT_RIGHT - PLOT_LEFT
PLOT_H = PLOT_BOTTOM - PLOT_TOP


def _fmt(v: float) -> str:
    return repr(float(v))


def x_to_px(x: float, axis: Axis) -> float:
    return PLOT_LEFT + (x - axis.min) / axis.span * PLOT_W


def y_to_px(y: float, axis: Axis) -> float:
    return PLOT_BOTTOM - (y - axis.min) / axis.span * PLOT_H


def px_to_x(px: float, axis: Axis) -> float:
    return axis.min + (px - PLOT_LEFT) / PLOT_W * axis.span


def px_to_y(py: float, axis: Axis) -> float:
    return axis.min + (PLOT_BOTTOM - py) / PLOT_H * axis.span


def _require_numeric_axes(t: DataTable) -> None:
    meta = t.chart_meta
    if not meta.x_axis.numeric or not meta.y_axis.numeric:
        raise NonNumericAxis("line/scatter charts need numeric x and y axis ranges")
    kinds = [c.value_kind for c in t.columns[:2]]
    if kinds != [ValueKind.NUMERIC, ValueKind.NUMERIC]:
        raise NonNumericAxis(f"first two columns must be numeric, got {[k.value for k in kinds]}")


def regenerate_chart(t: DataTable) -> bytes:
    """Redraw the chart encoded by ``t`` for side-by-side comparison with the
    original image. Byte-identical output for identical input."""
    if not t.rows:
        raise EmptyTable("cannot regenerate a chart from an empty table")
    if t.chart_meta is None:
        raise MissingChartMeta("table carries no chart metadata")
    problems = validate_table(t)
    if problems:
        raise NonNumericAxis("; ".join(problems))
    if len(t.columns) < 2:
        raise NonNumericAxis("chart tables need x and y columns")

    meta = t.chart_meta
    body: list[str]
    if meta.chart_kind is ChartKind.BAR:
        body = _bar_elements(t)
    else:
        body = _point_elements(t)

    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(CANVAS_W)}" height="{int(CANVAS_H)}" '
        f'viewBox="0 0 {int(CANVAS_W)} {int(CANVAS_H)}">',
        f'<rect x="0" y="0" width="{int(CANVAS_W)}" height="{int(CANVAS_H)}" fill="#ffffff"/>',
    ]
    if meta.title:
        lines.append(
            f'<text x="{_fmt(CANVAS_W / 2)}" y="30" text-anchor="middle" font-size="16" '
            f'font-family="sans-serif">{escape(meta.title)}</text>'
        )
    lines.append(
        f'<line x1="{_fmt(PLOT_LEFT)}" y1="{_fmt(PLOT_BOTTOM)}" x2="{_fmt(PLOT_RIGHT)}" '
        f'y2="{_fmt(PLOT_BOTTOM)}" stroke="#000000" stroke-width="1"/>'
    )
    lines.append(
        f'<line x1="{_fmt(PLOT_LEFT)}" y1="{_fmt(PLOT_TOP)}" x2="{_fmt(PLOT_LEFT)}" '
        f'y2="{_fmt(PLOT_BOTTOM)}" stroke="#000000" stroke-width="1"/>'
    )
    if meta.x_axis.label:
        lines.append(
            f'<text x="{_fmt((PLOT_LEFT + PLOT_RIGHT) / 2)}" y="{_fmt(CANVAS_H - 20)}" '
            f'text-anchor="middle" font-size="12" font-family="sans-serif">{escape(meta.x_axis.label)}</text>'
        )
    if meta.y_axis.label:
        mid = _fmt((PLOT_TOP + PLOT_BOTTOM) / 2)
        lines.append(
            f'<text x="20" y="{mid}" text-anchor="middle" font-size="12" font-family="sans-serif" '
            f'transform="rotate(-90 20 {mid})">{escape(meta.y_axis.label)}</text>'
        )
    lines.extend(body)
    lines.append("</svg>")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _point_elements(t: DataTable) -> list[str]:
    _require_numeric_axes(t)
    meta = t.chart_meta
    points = [(float(r[0]), float(r[1])) for r in t.rows]
    if meta.chart_kind is ChartKind.LINE:
        points = sorted(points, key=lambda p: p[0])
    px_points = [(x_to_px(x, meta.x_axis), y_to_px(y, meta.y_axis)) for x, y in points]

    out = []
    if meta.chart_kind is ChartKind.LINE and len(px_points) > 1:
        path = " ".join(f"{_fmt(px)},{_fmt(py)}" for px, py in px_points)
        out.append(f'<polyline class="series" fill="none" stroke="#1f77b4" stroke-width="2" points="{path}"/>')
    for px, py in px_points:
        out.append(f'<circle class="pt" cx="{_fmt(px)}" cy="{_fmt(py)}" r="3" fill="#1f77b4"/>')
    return out


def _bar_elements(t: DataTable) -> list[str]:
    meta = t.chart_meta
    if meta.x_axis.categories is None:
        raise NonNumericAxis("bar charts need a categorical x axis")
    if not meta.y_axis.numeric:
        raise NonNumericAxis("bar charts need a numeric y axis range")
    if t.columns[1].value_kind is not ValueKind.NUMERIC:
        raise NonNumericAxis("bar charts need a numeric y column")

    categories = meta.x_axis.categories
    index = {c: i for i, c in enumerate(categories)}
    slot = PLOT_W / max(1, len(categories))
    width = slot * 0.6
    out = []
    for row in t.rows:
        label = str(row[0])
        if label not in index:
            raise NonNumericAxis(f"row category {label!r} not on the x axis")
        value = float(row[1])
        cx = PLOT_LEFT + (index[label] + 0.5) * slot
        top = y_to_px(value, meta.y_axis)
        height = max(0.0, PLOT_BOTTOM - top)
        out.append(
            f'<rect class="bar" x="{_fmt(cx - width / 2)}" y="{_fmt(top)}" '
            f'width="{_fmt(width)}" height="{_fmt(height)}" fill="#1f77b4"/>'
        )
    return out


_CIRCLE_RE = re.compile(r'<circle class="pt" cx="([^"]+)" cy="([^"]+)"')
_BAR_RE = re.compile(r'<rect class="bar" x="([^"]+)" y="([^"]+)" width="([^"]+)" height="([^"]+)"')


def extract_point_pixels(svg: bytes | str) -> list[tuple[float, float]]:
    """Pixel centers of the data-point markers, in document order."""
    text = svg.decode("utf-8") if isinstance(svg, bytes) else svg
    return [(float(m.group(1)), float(m.group(2))) for m in _CIRCLE_RE.finditer(text)]


def extract_bar_rects(svg: bytes | str) -> list[tuple[float, float, float, float]]:
    text = svg.decode("utf-8") if isinstance(svg, bytes) else svg
    return [
        (float(m.group(1)), float(m.group(2)), float(m.group(3)), float(m.group(4)))
        for m in _BAR_RE.finditer(text)
    ]


def invert_points(pixels: list[tuple[float, float]], meta) -> list[tuple[float, float]]:
    """Map marker pixels back to data coordinates using the chart's axes."""
    return [(px_to_x(px, meta.x_axis), px_to_y(py, meta.y_axis)) for px, py in pixels]
