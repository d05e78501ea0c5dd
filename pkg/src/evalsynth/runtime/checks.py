"""Reference-free constraint checking over structured outputs."""

from __future__ import annotations

from dataclasses import dataclass

from ..descriptor import Constraint, ConstraintKind, ValueKind
from ..tables import DataTable


@dataclass(frozen=True)
class Violation:
    constraint_index: int
    path: str
    observed: str
    message: str


def _target_values(output, target: str):
    """Values addressed by a constraint target within the output."""
    if isinstance(output, DataTable):
        if not target:
            return [(f"rows[{i}]", row) for i, row in enumerate(output.rows)]
        idx = output.column_index(target)
        if idx is None:
            return None
        return [(f"{target}[{i}]", row[idx]) for i, row in enumerate(output.rows)]
    if isinstance(output, dict):
        if not target:
            return [("", output)]
        if target not in output:
            return None
        return [(target, output[target])]
    return [("", output)]


def check_constraints(output, constraints: list[Constraint] | tuple[Constraint, ...]) -> list[Violation]:
    violations: list[Violation] = []
    for idx, constraint in enumerate(constraints):
        violations.extend(_check_one(output, idx, constraint))
    return violations


def _check_one(output, idx: int, c: Constraint) -> list[Violation]:
    if c.kind is ConstraintKind.SCHEMA:
        return _check_schema(output, idx, c)

    values = _target_values(output, c.target)
    if values is None:
        return [
            Violation(
                constraint_index=idx,
                path=c.target,
                observed="<absent>",
                message=f"target {c.target!r} not present in output",
            )
        ]

    if c.kind is ConstraintKind.RANGE:
        lo, hi = c.param("min"), c.param("max")
        out = []
        for path, v in values:
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                out.append(Violation(idx, path, repr(v), "range constraint applies to numbers"))
            elif not (lo <= v <= hi):
                out.append(Violation(idx, path, repr(float(v)), f"value outside [{lo}, {hi}]"))
        return out

    if c.kind is ConstraintKind.ENUMERATION:
        allowed = set(str(c.param("values", "")).split("|"))
        return [
            Violation(idx, path, str(v), f"value not in {{{', '.join(sorted(allowed))}}}")
            for path, v in values
            if str(v) not in allowed
        ]

    if c.kind is ConstraintKind.UNIT:
        unit = str(c.param("unit", ""))
        return [
            Violation(idx, path, str(v), f"value does not end with unit {unit!r}")
            for path, v in values
            if not str(v).strip().endswith(unit)
        ]

    if c.kind is ConstraintKind.MONOTONIC:
        direction = str(c.param("direction", "increasing"))
        seq = [v for _, v in values if isinstance(v, (int, float)) and not isinstance(v, bool)]
        out = []
        for i in range(len(seq) - 1):
            ok = seq[i] <= seq[i + 1] if direction == "increasing" else seq[i] >= seq[i + 1]
            if not ok:
                out.append(
                    Violation(
                        idx,
                        f"{c.target}[{i}..{i + 1}]",
                        f"{seq[i]!r} -> {seq[i + 1]!r}",
                        f"sequence is not {direction}",
                    )
                )
        return out

    return []  # pragma: no cover - enum is closed


def _check_schema(output, idx: int, c: Constraint) -> list[Violation]:
    spec = str(c.param("columns", ""))
    required: list[tuple[str, str | None]] = []
    for part in spec.split("|"):
        if not part:
            continue
        if ":" in part:
            name, _, kind = part.rpartition(":")
            required.append((name, kind))
        else:
            required.append((part, None))

    if not isinstance(output, DataTable):
        return [Violation(idx, c.target, type(output).__name__, "schema constraint applies to tables")]

    out = []
    by_name = {col.name: col for col in output.columns}
    for name, kind in required:
        col = by_name.get(name)
        if col is None:
            out.append(Violation(idx, name, "<absent>", f"required column {name!r} missing"))
        elif kind is not None and col.value_kind is not ValueKind(kind):
            out.append(
                Violation(idx, name, col.value_kind.value, f"column {name!r} must have kind {kind}")
            )
    return out
