"""Classify extraction errors by comparing an extracted table to a reference.

Rows are keyed by the x column: numeric x matches the nearest reference row
within a relative window, categorical x matches by exact label. Matched rows
whose y difference stays within tolerance are correct; larger differences are
incorrect values; unmatched extracted rows are spurious; unmatched reference
rows are missing. Both tolerance boundaries are inclusive.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..descriptor import ValueKind
from ..errors import InvalidTolerance, SchemaMismatch
from ..tables import DataTable


@dataclass(frozen=True)
class Tolerance:
    x_rel: float = 0.02
    y_rel: float = 0.02


@dataclass(frozen=True)
class IncorrectCell:
    row_index: int  # extracted row
    column: str
    extracted: float
    reference: float


@dataclass(frozen=True)
class UnmatchedRow:
    row_index: int
    cells: tuple


@dataclass(frozen=True)
class ErrorReport:
    incorrect: tuple[IncorrectCell, ...] = ()
    spurious: tuple[UnmatchedRow, ...] = ()
    missing: tuple[UnmatchedRow, ...] = ()
    correct: int = 0

    @property
    def counts(self) -> dict[str, int]:
        return {
            "incorrect": len(self.incorrect),
            "spurious": len(self.spurious),
            "missing": len(self.missing),
        }

    @property
    def clean(self) -> bool:
        return not (self.incorrect or self.spurious or self.missing)


def _column_range(values: list[float], axis_min: float | None, axis_max: float | None) -> float:
    if axis_min is not None and axis_max is not None:
        return axis_max - axis_min
    if not values:
        return 0.0
    return max(values) - min(values)


def compare_tables(extracted: DataTable, reference: DataTable, tol: Tolerance | None = None) -> ErrorReport:
    tol = tol or Tolerance()
    if not (0.0 < tol.x_rel < 1.0) or not (0.0 < tol.y_rel < 1.0):
        raise InvalidTolerance(f"tolerances must be in (0, 1), got x_rel={tol.x_rel}, y_rel={tol.y_rel}")
    if len(extracted.columns) < 2 or len(reference.columns) < 2:
        raise SchemaMismatch("comparison needs an x column and a y column")
    ext_kinds = [c.value_kind for c in extracted.columns]
    ref_kinds = [c.value_kind for c in reference.columns]
    if ext_kinds != ref_kinds:
        raise SchemaMismatch(
            f"column kinds differ: {[k.value for k in ext_kinds]} vs {[k.value for k in ref_kinds]}"
        )

    x_kind = ref_kinds[0]
    y_name = reference.columns[1].name
    ext_rows = list(extracted.rows)
    ref_rows = list(reference.rows)

    if x_kind is ValueKind.NUMERIC:
        matches = _match_numeric(ext_rows, ref_rows, reference, tol)
    else:
        matches = _match_categorical(ext_rows, ref_rows)

    ref_ys = [float(r[1]) for r in ref_rows]
    meta = reference.chart_meta
    y_axis = meta.y_axis if meta is not None else None
    y_window = tol.y_rel * _column_range(
        ref_ys,
        y_axis.min if y_axis is not None and y_axis.numeric else None,
        y_axis.max if y_axis is not None and y_axis.numeric else None,
    )

    incorrect: list[IncorrectCell] = []
    correct = 0
    matched_ext = set()
    matched_ref = set()
    for ei, rj in matches:
        matched_ext.add(ei)
        matched_ref.add(rj)
        y_ext = float(ext_rows[ei][1])
        y_ref = float(ref_rows[rj][1])
        if abs(y_ext - y_ref) <= y_window:
            correct += 1
        else:
            incorrect.append(IncorrectCell(row_index=ei, column=y_name, extracted=y_ext, reference=y_ref))

    spurious = tuple(
        UnmatchedRow(row_index=i, cells=tuple(row)) for i, row in enumerate(ext_rows) if i not in matched_ext
    )
    missing = tuple(
        UnmatchedRow(row_index=j, cells=tuple(row)) for j, row in enumerate(ref_rows) if j not in matched_ref
    )
    return ErrorReport(
        incorrect=tuple(incorrect),
        spurious=spurious,
        missing=missing,
        correct=correct,
    )


def _match_numeric(ext_rows, ref_rows, reference: DataTable, tol: Tolerance) -> list[tuple[int, int]]:
    ref_xs = [float(r[0]) for r in ref_rows]
    meta = reference.chart_meta
    x_axis = meta.x_axis if meta is not None else None
    x_window = tol.x_rel * _column_range(
        ref_xs,
        x_axis.min if x_axis is not None and x_axis.numeric else None,
        x_axis.max if x_axis is not None and x_axis.numeric else None,
    )

    candidates = []
    for ei, row in enumerate(ext_rows):
        x = float(row[0])
        for rj, rx in enumerate(ref_xs):
            dx = abs(x - rx)
            if dx <= x_window:
                candidates.append((dx, rj, ei))
    # Greedy nearest-x: smallest gap first, ties toward the earlier reference
    # row, then the earlier extracted row.
    candidates.sort()
    matches: list[tuple[int, int]] = []
    used_ext: set[int] = set()
    used_ref: set[int] = set()
    for dx, rj, ei in candidates:
        if ei in used_ext or rj in used_ref:
            continue
        used_ext.add(ei)
        used_ref.add(rj)
        matches.append((ei, rj))
    return matches


def _match_categorical(ext_rows, ref_rows) -> list[tuple[int, int]]:
    matches: list[tuple[int, int]] = []
    used_ref: set[int] = set()
    for ei, row in enumerate(ext_rows):
        label = str(row[0])
        for rj, ref_row in enumerate(ref_rows):
            if rj in used_ref:
                continue
            if str(ref_row[0]) == label:
                matches.append((ei, rj))
                used_ref.add(rj)
                break
    return matches
