"""Chart regeneration: affine mapping oracle, inversion round trip, determinism.

Oracle, computed by hand before the implementation: the canvas is 640x480
with 60-unit margins, so the plot rectangle is x in [60, 580] (520 wide) and
y in [60, 420] (360 tall, y down). A point (x, y) with axis ranges
[x0, x1] x [y0, y1] lands at

    px = 60 + (x - x0) / (x1 - x0) * 520
    py = 420 - (y - y0) / (y1 - y0) * 360
"""

import random

import pytest

from evalsynth.errors import EmptyTable, MissingChartMeta, NonNumericAxis
from evalsynth.runtime.charts import (
    extract_bar_rects,
    extract_point_pixels,
    invert_points,
    regenerate_chart,
)
from evalsynth.tables import Axis, ChartKind, ChartMeta, DataTable, make_table, xy_table
from evalsynth.descriptor import ValueKind


def oracle_px(x, x0, x1):
    return 60 + (x - x0) / (x1 - x0) * 520


def oracle_py(y, y0, y1):
    return 420 - (y - y0) / (y1 - y0) * 360


def test_line_chart_vertices_match_hand_computed_affine():
    t = xy_table([(0, 0), (1, 1), (2, 4)], x_range=(0, 2), y_range=(0, 4))
    svg = regenerate_chart(t)
    pixels = extract_point_pixels(svg)
    # hand-computed: (0,0)->(60,420); (1,1)->(320,330); (2,4)->(580,60)
    assert pixels == [(60.0, 420.0), (320.0, 330.0), (580.0, 60.0)]
    expected = [
        (oracle_px(x, 0, 2), oracle_py(y, 0, 4)) for x, y in [(0, 0), (1, 1), (2, 4)]
    ]
    assert pixels == expected


def test_empty_table_rejected():
    t = xy_table([(0, 0)], x_range=(0, 1), y_range=(0, 1))
    empty = DataTable(columns=t.columns, rows=(), chart_meta=t.chart_meta)
    with pytest.raises(EmptyTable):
        regenerate_chart(empty)


def test_missing_chart_meta_rejected():
    t = xy_table([(0, 0), (1, 1)])
    bare = DataTable(columns=t.columns, rows=t.rows, chart_meta=None)
    with pytest.raises(MissingChartMeta):
        regenerate_chart(bare)


def test_non_numeric_axis_rejected():
    meta = ChartMeta(
        chart_kind=ChartKind.LINE,
        x_axis=Axis(label="x", categories=("a", "b")),
        y_axis=Axis(label="y", min=0.0, max=1.0),
    )
    t = make_table(
        [("x", ValueKind.NUMERIC), ("y", ValueKind.NUMERIC)],
        [(0.0, 0.5), (1.0, 0.6)],
        chart_meta=meta,
    )
    with pytest.raises(NonNumericAxis):
        regenerate_chart(t)


def test_bar_chart_has_one_bar_per_row():
    meta = ChartMeta(
        chart_kind=ChartKind.BAR,
        x_axis=Axis(label="phase", categories=("alpha", "beta", "gamma", "delta")),
        y_axis=Axis(label="count", min=0.0, max=10.0),
    )
    t = make_table(
        [("phase", ValueKind.CATEGORICAL), ("count", ValueKind.NUMERIC)],
        [("alpha", 2.0), ("beta", 4.0), ("gamma", 8.0), ("delta", 1.0)],
        chart_meta=meta,
    )
    svg = regenerate_chart(t)
    assert len(extract_bar_rects(svg)) == 4


def test_bar_heights_invert_to_values():
    meta = ChartMeta(
        chart_kind=ChartKind.BAR,
        x_axis=Axis(label="phase", categories=("a", "b")),
        y_axis=Axis(label="v", min=0.0, max=10.0),
    )
    t = make_table(
        [("phase", ValueKind.CATEGORICAL), ("v", ValueKind.NUMERIC)],
        [("a", 2.5), ("b", 7.5)],
        chart_meta=meta,
    )
    rects = extract_bar_rects(regenerate_chart(t))
    for (x, y, w, h), expected in zip(rects, (2.5, 7.5)):
        recovered = (420.0 - y) / 360.0 * 10.0
        assert recovered == pytest.approx(expected, abs=1e-12)


def test_byte_identical_for_identical_input():
    t = xy_table([(0, 3), (1, 1), (2, 7)], x_range=(0, 2), y_range=(0, 10), title="demo")
    assert regenerate_chart(t) == regenerate_chart(t)


def test_line_chart_connects_points_in_x_order():
    t = xy_table([(2, 4), (0, 0), (1, 1)], x_range=(0, 2), y_range=(0, 4))
    pixels = extract_point_pixels(regenerate_chart(t))
    xs = [p[0] for p in pixels]
    assert xs == sorted(xs)


def _relative_error(a: float, b: float, scale: float) -> float:
    return abs(a - b) / max(scale, 1e-12)


@pytest.mark.parametrize("kind", [ChartKind.LINE, ChartKind.SCATTER])
def test_inversion_round_trip_recovers_points(kind):
    rng = random.Random(42)
    for _ in range(20):
        n = rng.randint(3, 12)
        x0 = rng.uniform(-100, 100)
        x1 = x0 + rng.uniform(1, 1000)
        y0 = rng.uniform(-50, 50)
        y1 = y0 + rng.uniform(1, 500)
        points = [
            (rng.uniform(x0, x1), rng.uniform(y0, y1))
            for _ in range(n)
        ]
        t = xy_table(points, chart_kind=kind, x_range=(x0, x1), y_range=(y0, y1))
        svg = regenerate_chart(t)
        recovered = invert_points(extract_point_pixels(svg), t.chart_meta)
        expected = sorted(points) if kind is ChartKind.LINE else points
        assert len(recovered) == len(expected)
        for (rx, ry), (ex, ey) in zip(recovered, expected):
            assert _relative_error(rx, ex, x1 - x0) < 1e-9
            assert _relative_error(ry, ey, y1 - y0) < 1e-9
