"""Tabular values exchanged between extraction outputs, references and evals."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .descriptor import ColumnSpec, ValueKind

Cell = float | str


class ChartKind(str, enum.Enum):
    LINE = "line"
    SCATTER = "scatter"
    BAR = "bar"


@dataclass(frozen=True)
class Axis:
    label: str = ""
    min: float | None = None
    max: float | None = None
    categories: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.categories is not None:
            object.__setattr__(self, "categories", tuple(self.categories))

    @property
    def numeric(self) -> bool:
        return self.min is not None and self.max is not None

    @property
    def span(self) -> float:
        if not self.numeric:
            raise ValueError("axis has no numeric range")
        return self.max - self.min


@dataclass(frozen=True)
class ChartMeta:
    chart_kind: ChartKind
    x_axis: Axis
    y_axis: Axis
    title: str = ""


@dataclass(frozen=True)
class DataTable:
    columns: tuple[ColumnSpec, ...]
    rows: tuple[tuple[Cell, ...], ...]
    chart_meta: ChartMeta | None = None

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "rows", tuple(tuple(r) for r in self.rows))

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column_index(self, name: str) -> int | None:
        for i, col in enumerate(self.columns):
            if col.name == name:
                return i
        return None

    def column_values(self, index: int) -> list[Cell]:
        return [row[index] for row in self.rows]


def make_table(
    columns: list[tuple[str, ValueKind]],
    rows: list[tuple[Cell, ...]],
    chart_meta: ChartMeta | None = None,
) -> DataTable:
    return DataTable(
        columns=tuple(ColumnSpec(name, kind) for name, kind in columns),
        rows=tuple(tuple(r) for r in rows),
        chart_meta=chart_meta,
    )


def xy_table(
    points: list[tuple[float, float]],
    chart_kind: ChartKind = ChartKind.LINE,
    x_range: tuple[float, float] | None = None,
    y_range: tuple[float, float] | None = None,
    title: str = "",
) -> DataTable:
    """Two-column numeric table with chart metadata, axis ranges defaulting to
    the data extent."""
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    if x_range is None:
        x_range = (min(xs), max(xs)) if xs else (0.0, 1.0)
    if y_range is None:
        y_range = (min(ys), max(ys)) if ys else (0.0, 1.0)
    meta = ChartMeta(
        chart_kind=chart_kind,
        x_axis=Axis(label="x", min=float(x_range[0]), max=float(x_range[1])),
        y_axis=Axis(label="y", min=float(y_range[0]), max=float(y_range[1])),
        title=title,
    )
    return make_table(
        [("x", ValueKind.NUMERIC), ("y", ValueKind.NUMERIC)],
        [(float(x), float(y)) for x, y in points],
        chart_meta=meta,
    )


def validate_table(t: DataTable) -> list[str]:
    problems: list[str] = []
    width = len(t.columns)
    for i, row in enumerate(t.rows):
        if len(row) != width:
            problems.append(f"row {i} has {len(row)} cells, expected {width}")
            continue
        for j, col in enumerate(t.columns):
            if col.value_kind is ValueKind.NUMERIC:
                v = row[j]
                if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                    problems.append(f"row {i} column {col.name!r} must be a finite number, got {v!r}")
    meta = t.chart_meta
    if meta is not None:
        for name, axis in (("x", meta.x_axis), ("y", meta.y_axis)):
            if axis.numeric and axis.min >= axis.max:
                problems.append(f"{name} axis range must have min < max")
    return problems
