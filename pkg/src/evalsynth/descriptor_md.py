"""Markdown serialization for task descriptors (`.task.md`).

The format doubles as the protocol payload syntax, so it has to stay readable
by people and strictly parseable by machines. The grammar is flat:

* an optional ``# <title>`` line plus ``- key: value`` bullets before the
  first section carry identity fields;
* ``## <section>`` headers introduce sections; the canonical ones are
  ``task type``, ``io``, ``grounding``, ``constraints``, ``objectives``,
  ``potential errors`` and ``proposed strategies``;
* list sections hold one ``- <label>: key=value ...`` bullet per item, with
  values quoted when they contain spaces or would read as numbers;
* unknown sections are preserved verbatim so third parties can extend the
  format without breaking round-trips.

``parse_descriptor(render_descriptor(d)) == d`` holds for every descriptor
with zero hard validation issues, and rendering equal descriptors is
byte-identical.
"""

from __future__ import annotations

import math

from .descriptor import (
    MODALITY_ORDER,
    TEMPLATE_CATEGORY,
    AnswerMultiplicity,
    ColumnSpec,
    Constraint,
    ConstraintKind,
    FailureMode,
    FailureModeOrigin,
    Grounding,
    IOSpec,
    Modality,
    Objective,
    ParamValue,
    ReasoningMode,
    ReasoningSpec,
    ReferenceKind,
    ReferenceSource,
    Severity,
    Status,
    StrategyBinding,
    StrategyCategory,
    StrategyTemplate,
    TaskDescriptor,
    TaskType,
    ValueKind,
    hard_issues,
)
from .errors import InvalidDescriptor, MalformedField, MissingSection

SECTION_TASK_TYPE = "task type"
SECTION_IO = "io"
SECTION_GROUNDING = "grounding"
SECTION_CONSTRAINTS = "constraints"
SECTION_OBJECTIVES = "objectives"
SECTION_ERRORS = "potential errors"
SECTION_STRATEGIES = "proposed strategies"

CANONICAL_SECTIONS = (
    SECTION_TASK_TYPE,
    SECTION_IO,
    SECTION_GROUNDING,
    SECTION_CONSTRAINTS,
    SECTION_OBJECTIVES,
    SECTION_ERRORS,
    SECTION_STRATEGIES,
)

REQUIRED_SECTIONS = (SECTION_TASK_TYPE, SECTION_IO)


# --- attribute token grammar -------------------------------------------------

_BARE_SAFE = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-./:|+%@#()[]{}?!,;'~*&^$")


def _is_bool_token(s: str) -> bool:
    return s in ("true", "false")


def _is_number_token(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def _format_float(v: float) -> str:
    if not math.isfinite(v):
        raise MalformedField("params", f"non-finite number cannot be serialized: {v}")
    return repr(v)


def format_attr_value(v: ParamValue) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return _format_float(v)
    needs_quotes = (
        v == ""
        or any(ch not in _BARE_SAFE for ch in v)
        or _is_bool_token(v)
        or _is_number_token(v)
    )
    if not needs_quotes:
        return v
    escaped = (
        v.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
        .replace("\t", "\\t")
    )
    return f'"{escaped}"'


def format_attrs(pairs: list[tuple[str, ParamValue]]) -> str:
    return " ".join(f"{k}={format_attr_value(v)}" for k, v in pairs)


_UNESCAPE = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def tokenize_attrs(text: str, path: str) -> list[tuple[str, ParamValue]]:
    """Parse ``key=value`` tokens; quoted values stay strings, bare values
    are typed as bool/int/float when they read as one."""
    pairs: list[tuple[str, ParamValue]] = []
    i, n = 0, len(text)
    while i < n:
        while i < n and text[i] == " ":
            i += 1
        if i >= n:
            break
        eq = text.find("=", i)
        if eq < 0:
            raise MalformedField(path, f"expected key=value, got {text[i:]!r}")
        key = text[i:eq]
        if not key or " " in key:
            raise MalformedField(path, f"bad attribute key {key!r}")
        i = eq + 1
        if i < n and text[i] == '"':
            i += 1
            out: list[str] = []
            while i < n and text[i] != '"':
                ch = text[i]
                if ch == "\\":
                    if i + 1 >= n or text[i + 1] not in _UNESCAPE:
                        raise MalformedField(path, "bad escape sequence in quoted value")
                    out.append(_UNESCAPE[text[i + 1]])
                    i += 2
                else:
                    out.append(ch)
                    i += 1
            if i >= n:
                raise MalformedField(path, "unterminated quoted value")
            i += 1
            pairs.append((key, "".join(out)))
        else:
            j = i
            while j < n and text[j] != " ":
                j += 1
            raw = text[i:j]
            i = j
            pairs.append((key, _type_bare(raw)))
    return pairs


def _type_bare(raw: str) -> ParamValue:
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        f = float(raw)
        if math.isfinite(f):
            return f
    except ValueError:
        pass
    return raw


def _attr_map(pairs, path, allowed=None):
    seen = {}
    for k, v in pairs:
        if k in seen:
            raise MalformedField(path, f"duplicate attribute {k!r}")
        if allowed is not None and k not in allowed:
            raise MalformedField(path, f"unknown attribute {k!r}")
        seen[k] = v
    return seen


def _enum(enum_cls, raw, path):
    try:
        return enum_cls(str(raw))
    except ValueError:
        valid = ", ".join(e.value for e in enum_cls)
        raise MalformedField(path, f"unknown value {raw!r} (expected one of: {valid})") from None


def _float(raw, path):
    if isinstance(raw, bool) or isinstance(raw, str):
        raise MalformedField(path, f"expected a number, got {raw!r}")
    return float(raw)


# --- document splitting --------------------------------------------------------


def _split_sections(doc: str):
    """Return (title, header_bullets, [(section_name, body_lines)])."""
    title = ""
    header_bullets: list[tuple[str, str]] = []
    sections: list[tuple[str, list[str]]] = []
    current: list[str] | None = None
    for lineno, line in enumerate(doc.split("\n"), start=1):
        if line.startswith("## "):
            name = line[3:].strip()
            sections.append((name, []))
            current = sections[-1][1]
            continue
        if current is not None:
            current.append(line)
            continue
        stripped = line.strip()
        if not stripped:
            continue
        if line.startswith("# "):
            title = line[2:].strip()
        elif line.startswith("- "):
            header_bullets.append(_split_bullet(line, f"line {lineno}"))
        else:
            raise MalformedField(f"line {lineno}", f"unexpected content outside sections: {line!r}")
    return title, header_bullets, sections


def _split_bullet(line: str, path: str) -> tuple[str, str]:
    body = line[2:]
    colon = body.find(":")
    if colon < 0:
        raise MalformedField(path, f"bullet without ':' separator: {line!r}")
    label = body[:colon]
    rest = body[colon + 1 :]
    if rest.startswith(" "):
        rest = rest[1:]
    return label, rest


def _bullets(body_lines: list[str], section: str) -> list[tuple[str, str]]:
    out = []
    for line in body_lines:
        if not line.strip():
            continue
        if not line.startswith("- "):
            raise MalformedField(section, f"expected '- key: value' bullet, got {line!r}")
        out.append(_split_bullet(line, section))
    return out


# --- parsing -------------------------------------------------------------------


def parse_descriptor(doc: str) -> TaskDescriptor:
    title, header_bullets, raw_sections = _split_sections(doc)

    task_id = ""
    status = Status.DRAFT
    description = ""
    for key, value in header_bullets:
        if key == "id":
            task_id = value
        elif key == "status":
            status = _enum(Status, value, "header.status")
        elif key == "description":
            description = value
        else:
            raise MalformedField(f"header.{key}", "unknown header field")

    sections: dict[str, list[str]] = {}
    extras: list[tuple[str, str]] = []
    for name, body in raw_sections:
        canonical = name.lower()
        if canonical in CANONICAL_SECTIONS:
            if canonical in sections:
                raise MalformedField(canonical, "duplicate section")
            sections[canonical] = body
        else:
            extras.append((name, "\n".join(body).strip("\n")))

    for required in REQUIRED_SECTIONS:
        if required not in sections:
            raise MissingSection(required)

    task_type, reasoning = _parse_task_type(sections[SECTION_TASK_TYPE])
    io_spec = _parse_io(sections[SECTION_IO])
    grounding, sources = _parse_grounding(sections.get(SECTION_GROUNDING, []))
    constraints = _parse_constraints(sections.get(SECTION_CONSTRAINTS, []))
    objectives = _parse_objectives(sections.get(SECTION_OBJECTIVES, []))
    failure_modes = _parse_failure_modes(sections.get(SECTION_ERRORS, []))
    bindings = _parse_bindings(sections.get(SECTION_STRATEGIES, []))

    return TaskDescriptor(
        task_id=task_id,
        title=title,
        description=description,
        task_type=task_type,
        io_spec=io_spec,
        grounding=grounding,
        constraints=constraints,
        reasoning=reasoning,
        objectives=objectives,
        reference_sources=sources,
        failure_modes=failure_modes,
        strategy_bindings=bindings,
        status=status,
        extras=tuple(extras),
    )


def _parse_task_type(body):
    task_type = TaskType.OTHER
    mode = ReasoningMode.DIRECT
    multiplicity = AnswerMultiplicity.SINGLE
    for key, value in _bullets(body, SECTION_TASK_TYPE):
        if key == "type":
            task_type = _enum(TaskType, value, "task type.type")
        elif key == "reasoning.mode":
            mode = _enum(ReasoningMode, value, "task type.reasoning.mode")
        elif key == "reasoning.multiplicity":
            multiplicity = _enum(AnswerMultiplicity, value, "task type.reasoning.multiplicity")
        else:
            raise MalformedField(f"task type.{key}", "unknown field")
    return task_type, ReasoningSpec(mode=mode, answer_multiplicity=multiplicity)


def _parse_io(body) -> IOSpec:
    modalities: frozenset[Modality] = frozenset()
    input_format = ""
    output_modality = Modality.TEXT
    output_format = ""
    schema: tuple[ColumnSpec, ...] | None = None
    for key, value in _bullets(body, SECTION_IO):
        if key == "input.modalities":
            parts = [p for p in value.split("|") if p]
            modalities = frozenset(_enum(Modality, p, "io.input.modalities") for p in parts)
        elif key == "input.format":
            input_format = value
        elif key == "output.modality":
            output_modality = _enum(Modality, value, "io.output.modality")
        elif key == "output.format":
            output_format = value
        elif key == "output.schema":
            cols = []
            for part in value.split("|"):
                if ":" not in part:
                    raise MalformedField("io.output.schema", f"expected name:kind, got {part!r}")
                name, _, kind = part.rpartition(":")
                cols.append(ColumnSpec(name=name, value_kind=_enum(ValueKind, kind, "io.output.schema")))
            schema = tuple(cols)
        else:
            raise MalformedField(f"io.{key}", "unknown field")
    return IOSpec(
        input_modalities=modalities,
        input_format=input_format,
        output_modality=output_modality,
        output_format=output_format,
        output_schema=schema,
    )


def _parse_grounding(body):
    grounding = Grounding.NONE
    sources: list[ReferenceSource] = []
    for key, value in _bullets(body, SECTION_GROUNDING):
        if key == "mode":
            grounding = _enum(Grounding, value, "grounding.mode")
        elif key == "source":
            attrs = _attr_map(tokenize_attrs(value, "grounding.source"), "grounding.source", {"kind", "locator"})
            sources.append(
                ReferenceSource(
                    kind=_enum(ReferenceKind, attrs.get("kind", ""), "grounding.source.kind"),
                    locator=str(attrs.get("locator", "")),
                )
            )
        else:
            raise MalformedField(f"grounding.{key}", "unknown field")
    return grounding, tuple(sources)


def _parse_constraints(body):
    constraints = []
    for label, value in _bullets(body, SECTION_CONSTRAINTS):
        path = f"constraints[{label}]"
        kind = _enum(ConstraintKind, label, path)
        pairs = tokenize_attrs(value, path)
        target = ""
        params = []
        for k, v in pairs:
            if k == "target":
                target = str(v)
            else:
                params.append((k, v))
        constraints.append(Constraint(kind=kind, target=target, params=tuple(sorted(params))))
    return tuple(constraints)


def _parse_objectives(body):
    objectives = []
    for label, value in _bullets(body, SECTION_OBJECTIVES):
        path = f"objectives[{label}]"
        attrs = _attr_map(tokenize_attrs(value, path), path, {"threshold", "description"})
        threshold = attrs.get("threshold")
        if threshold is not None:
            threshold = _float(threshold, f"{path}.threshold")
        objectives.append(
            Objective(name=label, description=str(attrs.get("description", "")), threshold=threshold)
        )
    return tuple(objectives)


def _parse_failure_modes(body):
    modes = []
    for label, value in _bullets(body, SECTION_ERRORS):
        path = f"potential errors[{label}]"
        attrs = _attr_map(
            tokenize_attrs(value, path), path, {"name", "severity", "origin", "description"}
        )
        modes.append(
            FailureMode(
                id=label,
                name=str(attrs.get("name", "")),
                description=str(attrs.get("description", "")),
                severity=_enum(Severity, attrs.get("severity", "medium"), f"{path}.severity"),
                origin=_enum(FailureModeOrigin, attrs.get("origin", "inferred"), f"{path}.origin"),
            )
        )
    return tuple(modes)


def _parse_bindings(body):
    bindings = []
    for label, value in _bullets(body, SECTION_STRATEGIES):
        path = f"proposed strategies[{label}]"
        template = _enum(StrategyTemplate, label, path)
        pairs = tokenize_attrs(value, path)
        category = None
        failure_mode = ""
        params = []
        for k, v in pairs:
            if k == "category":
                category = _enum(StrategyCategory, v, f"{path}.category")
            elif k == "failure_mode":
                failure_mode = str(v)
            else:
                params.append((k, v))
        if category is None:
            category = TEMPLATE_CATEGORY[template]
        bindings.append(
            StrategyBinding(
                failure_mode_id=failure_mode,
                category=category,
                template_id=template,
                params=tuple(sorted(params)),
            )
        )
    return tuple(bindings)


# --- rendering -------------------------------------------------------------------


def render_descriptor(d: TaskDescriptor) -> str:
    """Render the canonical document. Refuses descriptors with hard issues so
    that everything written to disk or the wire parses back unambiguously."""
    issues = hard_issues(d)
    if issues:
        raise InvalidDescriptor(issues)
    return render_descriptor_unchecked(d)


def render_descriptor_unchecked(d: TaskDescriptor) -> str:
    lines: list[str] = []
    if d.title:
        lines.append(f"# {d.title}")
    lines.append(f"- id: {d.task_id}")
    lines.append(f"- status: {d.status.value}")
    if d.description:
        lines.append(f"- description: {d.description}")

    lines.append("")
    lines.append(f"## {SECTION_TASK_TYPE}")
    lines.append(f"- type: {d.task_type.value}")
    lines.append(f"- reasoning.mode: {d.reasoning.mode.value}")
    lines.append(f"- reasoning.multiplicity: {d.reasoning.answer_multiplicity.value}")

    lines.append("")
    lines.append(f"## {SECTION_IO}")
    modalities = [m.value for m in MODALITY_ORDER if m in d.io_spec.input_modalities]
    lines.append(f"- input.modalities: {'|'.join(modalities)}")
    if d.io_spec.input_format:
        lines.append(f"- input.format: {d.io_spec.input_format}")
    lines.append(f"- output.modality: {d.io_spec.output_modality.value}")
    if d.io_spec.output_format:
        lines.append(f"- output.format: {d.io_spec.output_format}")
    if d.io_spec.output_schema:
        cols = "|".join(f"{c.name}:{c.value_kind.value}" for c in d.io_spec.output_schema)
        lines.append(f"- output.schema: {cols}")

    lines.append("")
    lines.append(f"## {SECTION_GROUNDING}")
    lines.append(f"- mode: {d.grounding.value}")
    for src in d.reference_sources:
        pairs: list[tuple[str, ParamValue]] = [("kind", src.kind.value)]
        if src.locator:
            pairs.append(("locator", src.locator))
        lines.append(f"- source: {format_attrs(pairs)}")

    if d.constraints:
        lines.append("")
        lines.append(f"## {SECTION_CONSTRAINTS}")
        for c in d.constraints:
            pairs = [("target", c.target)] + list(c.params)
            lines.append(f"- {c.kind.value}: {format_attrs(pairs)}")

    if d.objectives:
        lines.append("")
        lines.append(f"## {SECTION_OBJECTIVES}")
        for o in d.objectives:
            pairs = []
            if o.threshold is not None:
                pairs.append(("threshold", o.threshold))
            if o.description:
                pairs.append(("description", o.description))
            suffix = f" {format_attrs(pairs)}" if pairs else ""
            lines.append(f"- {o.name}:{suffix}")

    if d.failure_modes:
        lines.append("")
        lines.append(f"## {SECTION_ERRORS}")
        for m in d.failure_modes:
            pairs = []
            if m.name:
                pairs.append(("name", m.name))
            pairs.append(("severity", m.severity.value))
            pairs.append(("origin", m.origin.value))
            if m.description:
                pairs.append(("description", m.description))
            lines.append(f"- {m.id}: {format_attrs(pairs)}")

    if d.strategy_bindings:
        lines.append("")
        lines.append(f"## {SECTION_STRATEGIES}")
        for b in d.strategy_bindings:
            pairs = [("category", b.category.value)]
            if b.failure_mode_id:
                pairs.append(("failure_mode", b.failure_mode_id))
            pairs.extend(b.params)
            lines.append(f"- {b.template_id.value}: {format_attrs(pairs)}")

    for name, text in sorted(d.extras):
        lines.append("")
        lines.append(f"## {name}")
        if text:
            lines.append(text)

    return "\n".join(lines) + "\n"
