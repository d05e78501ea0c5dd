"""Markdown encoding of protocol messages.

A message document reuses the descriptor dialect: a header block carries the
envelope (session, seq, kind, verdict, note), the payload lives in a section
matching the message kind, and amendments (or ProvideFeedback edits) are
``- <op>: target=<t> ...`` bullets.
"""

from __future__ import annotations

from .descriptor import Constraint, ConstraintKind, FailureMode, Objective, StrategyBinding
from .descriptor_md import (
    _bullets,
    _parse_bindings,
    _parse_failure_modes,
    _parse_objectives,
    _split_sections,
    format_attr_value,
    format_attrs,
    tokenize_attrs,
)
from .errors import MalformedField
from .protocol import (
    EditAction,
    EditOp,
    EditTarget,
    MessageKind,
    ProtocolMessage,
    ProtocolResponse,
    Verdict,
)

SECTION_FOR_KIND = {
    MessageKind.VALIDATE_ERRORS: "potential errors",
    MessageKind.PROPOSE_STRATEGIES: "proposed strategies",
    MessageKind.UPDATE_EVALUATION_OBJECTIVE: "objectives",
    MessageKind.PROVIDE_FEEDBACK: "edits",
}

_SECTION_PARSERS = {
    MessageKind.VALIDATE_ERRORS: _parse_failure_modes,
    MessageKind.PROPOSE_STRATEGIES: _parse_bindings,
    MessageKind.UPDATE_EVALUATION_OBJECTIVE: _parse_objectives,
}


def parse_message_doc(doc: str) -> tuple[ProtocolMessage, ProtocolResponse]:
    _, header_bullets, raw_sections = _split_sections(doc)
    fields = {}
    for key, value in header_bullets:
        if key in fields:
            raise MalformedField(f"header.{key}", "duplicate header field")
        fields[key] = value

    try:
        kind = MessageKind(fields.get("kind", ""))
    except ValueError:
        raise MalformedField("header.kind", f"unknown message kind {fields.get('kind')!r}") from None
    try:
        verdict = Verdict(fields.get("verdict", "approve"))
    except ValueError:
        raise MalformedField("header.verdict", f"unknown verdict {fields.get('verdict')!r}") from None
    try:
        seq = int(fields.get("seq", ""))
    except ValueError:
        raise MalformedField("header.seq", "seq must be an integer") from None

    sections = {name.lower(): body for name, body in raw_sections}

    if kind is MessageKind.RUN_EVALUATION:
        payload: tuple | str = fields.get("dataset", "stored")
    elif kind is MessageKind.APPROVE_PLAN:
        payload = fields.get("plan_hash", "")
    elif kind is MessageKind.PROVIDE_FEEDBACK:
        payload = tuple(_parse_edit_ops(sections.get("edits", []), "edits"))
    else:
        body = sections.get(SECTION_FOR_KIND[kind], [])
        payload = tuple(_SECTION_PARSERS[kind](body))

    amendments = tuple(_parse_edit_ops(sections.get("amendments", []), "amendments"))
    message = ProtocolMessage(
        kind=kind,
        session_id=fields.get("session", ""),
        seq=seq,
        payload=payload,
    )
    response = ProtocolResponse(verdict=verdict, amendments=amendments, note=fields.get("note", ""))
    return message, response


def _parse_edit_ops(body: list[str], section: str) -> list[EditOp]:
    ops = []
    for label, value in _bullets(body, section):
        path = f"{section}[{label}]"
        try:
            action = EditAction(label)
        except ValueError:
            raise MalformedField(path, f"unknown edit action {label!r}") from None
        attrs = dict(tokenize_attrs(value, path))
        target_raw = attrs.pop("target", "")
        try:
            target = EditTarget(str(target_raw))
        except ValueError:
            raise MalformedField(path, f"unknown edit target {target_raw!r}") from None
        ops.append(_build_edit_op(action, target, attrs, path))
    return ops


def _build_edit_op(action: EditAction, target: EditTarget, attrs: dict, path: str) -> EditOp:
    if target is EditTarget.FAILURE_MODE:
        identity = str(attrs.pop("id", ""))
        if action is EditAction.DELETE:
            return EditOp(op=action, target=target, target_id=identity)
        value = FailureMode(
            id=identity,
            name=str(attrs.pop("name", "")),
            description=str(attrs.pop("description", "")),
            severity=_enum_attr(attrs, "severity", "medium", path),
            origin=_enum_attr(attrs, "origin", "human_added", path, origin=True),
        )
        target_id = identity if action is EditAction.EDIT else ""
        return EditOp(op=action, target=target, target_id=target_id, value=value)

    if target is EditTarget.OBJECTIVE:
        identity = str(attrs.pop("name", ""))
        if action is EditAction.DELETE:
            return EditOp(op=action, target=target, target_id=identity)
        threshold = attrs.pop("threshold", None)
        value = Objective(
            name=identity,
            description=str(attrs.pop("description", "")),
            threshold=float(threshold) if threshold is not None else None,
        )
        target_id = identity if action is EditAction.EDIT else ""
        return EditOp(op=action, target=target, target_id=target_id, value=value)

    if target is EditTarget.STRATEGY_BINDING:
        from .descriptor import TEMPLATE_CATEGORY, StrategyCategory, StrategyTemplate

        identity = str(attrs.pop("template", ""))
        if action is EditAction.DELETE:
            return EditOp(op=action, target=target, target_id=identity)
        try:
            template = StrategyTemplate(identity)
        except ValueError:
            raise MalformedField(path, f"unknown strategy template {identity!r}") from None
        category_raw = attrs.pop("category", "")
        category = StrategyCategory(str(category_raw)) if category_raw else TEMPLATE_CATEGORY[template]
        failure_mode = str(attrs.pop("failure_mode", ""))
        value = StrategyBinding(
            failure_mode_id=failure_mode,
            category=category,
            template_id=template,
            params=tuple(sorted(attrs.items())),
        )
        target_id = identity if action is EditAction.EDIT else ""
        return EditOp(op=action, target=target, target_id=target_id, value=value)

    # constraint: addressed by list index
    index = str(attrs.pop("index", ""))
    if action is EditAction.DELETE:
        return EditOp(op=action, target=target, target_id=index)
    kind_raw = str(attrs.pop("kind", ""))
    try:
        kind = ConstraintKind(kind_raw)
    except ValueError:
        raise MalformedField(path, f"unknown constraint kind {kind_raw!r}") from None
    value = Constraint(kind=kind, target=str(attrs.pop("path", "")), params=tuple(sorted(attrs.items())))
    return EditOp(op=action, target=target, target_id=index, value=value)


def _enum_attr(attrs: dict, key: str, default: str, path: str, origin: bool = False):
    from .descriptor import FailureModeOrigin, Severity

    raw = str(attrs.pop(key, default))
    enum_cls = FailureModeOrigin if origin else Severity
    try:
        return enum_cls(raw)
    except ValueError:
        raise MalformedField(f"{path}.{key}", f"unknown value {raw!r}") from None


# --- rendering ----------------------------------------------------------------------


def render_message_doc(message: ProtocolMessage, response: ProtocolResponse) -> str:
    lines = ["# protocol message"]
    lines.append(f"- session: {message.session_id}")
    lines.append(f"- seq: {message.seq}")
    lines.append(f"- kind: {message.kind.value}")
    lines.append(f"- verdict: {response.verdict.value}")
    if response.note:
        lines.append(f"- note: {response.note}")

    if message.kind is MessageKind.RUN_EVALUATION:
        lines.append(f"- dataset: {message.payload}")
    elif message.kind is MessageKind.APPROVE_PLAN:
        lines.append(f"- plan_hash: {message.payload}")
    elif message.kind is MessageKind.PROVIDE_FEEDBACK:
        if message.payload:
            lines.append("")
            lines.append("## edits")
            lines.extend(_render_edit_op(op) for op in message.payload)
    else:
        lines.append("")
        lines.append(f"## {SECTION_FOR_KIND[message.kind]}")
        lines.extend(_render_payload_item(message.kind, item) for item in message.payload)

    if response.amendments:
        lines.append("")
        lines.append("## amendments")
        lines.extend(_render_edit_op(op) for op in response.amendments)
    return "\n".join(lines) + "\n"


def _render_payload_item(kind: MessageKind, item) -> str:
    if kind is MessageKind.VALIDATE_ERRORS:
        pairs = []
        if item.name:
            pairs.append(("name", item.name))
        pairs.append(("severity", item.severity.value))
        pairs.append(("origin", item.origin.value))
        if item.description:
            pairs.append(("description", item.description))
        return f"- {item.id}: {format_attrs(pairs)}"
    if kind is MessageKind.PROPOSE_STRATEGIES:
        pairs = [("category", item.category.value)]
        if item.failure_mode_id:
            pairs.append(("failure_mode", item.failure_mode_id))
        pairs.extend(item.params)
        return f"- {item.template_id.value}: {format_attrs(pairs)}"
    pairs = []
    if item.threshold is not None:
        pairs.append(("threshold", item.threshold))
    if item.description:
        pairs.append(("description", item.description))
    suffix = f" {format_attrs(pairs)}" if pairs else ""
    return f"- {item.name}:{suffix}"


def _render_edit_op(op: EditOp) -> str:
    pairs: list[tuple[str, object]] = [("target", op.target.value)]
    v = op.value
    if op.target is EditTarget.FAILURE_MODE:
        identity = v.id if v is not None else op.target_id
        pairs.append(("id", identity))
        if v is not None:
            if v.name:
                pairs.append(("name", v.name))
            pairs.append(("severity", v.severity.value))
            pairs.append(("origin", v.origin.value))
            if v.description:
                pairs.append(("description", v.description))
    elif op.target is EditTarget.OBJECTIVE:
        identity = v.name if v is not None else op.target_id
        pairs.append(("name", identity))
        if v is not None:
            if v.threshold is not None:
                pairs.append(("threshold", v.threshold))
            if v.description:
                pairs.append(("description", v.description))
    elif op.target is EditTarget.STRATEGY_BINDING:
        identity = v.template_id.value if v is not None else op.target_id
        pairs.append(("template", identity))
        if v is not None:
            pairs.append(("category", v.category.value))
            if v.failure_mode_id:
                pairs.append(("failure_mode", v.failure_mode_id))
            pairs.extend(v.params)
    else:
        if op.target_id:
            pairs.append(("index", op.target_id))
        if v is not None:
            pairs.append(("kind", v.kind.value))
            if v.target:
                pairs.append(("path", v.target))
            pairs.extend(v.params)
    rendered = " ".join(
        f"{k}={format_attr_value(val)}" for k, val in pairs
    )
    return f"- {op.op.value}: {rendered}"
