"""JSON-able dict conversions for every wire- and store-facing type.

The markdown dialect is the human-facing format; these dicts are the
machine-facing one (HTTP bodies, JSONL records). Conversions are lossless and
deterministic: round-tripping through ``*_to_dict`` / ``*_from_dict`` yields
an equal value, and dict keys are emitted in a fixed order.
"""

from __future__ import annotations

from .descriptor import (
    ColumnSpec,
    Constraint,
    ConstraintKind,
    FailureMode,
    FailureModeOrigin,
    Modality,
    Objective,
    Severity,
    StrategyBinding,
    StrategyCategory,
    StrategyTemplate,
    TaskDescriptor,
    ValueKind,
)
from .descriptor_md import parse_descriptor, render_descriptor_unchecked
from .errors import MalformedField
from .protocol import (
    EditAction,
    EditOp,
    EditTarget,
    LogEntry,
    MessageKind,
    ProtocolMessage,
    ProtocolResponse,
    Verdict,
)
from .records import (
    BinaryApproval,
    CellEdit,
    ExampleRecord,
    FmOutput,
    FreeTextNote,
    InputRef,
    LabelRecord,
    Reference,
)
from .runtime.compare import ErrorReport, IncorrectCell, UnmatchedRow
from .runtime.checks import Violation
from .runtime.runner import Artifact, EvalOutput, EvalResult, RunVerdict
from .runtime.spans import Span
from .synthesis import (
    ChannelKind,
    ComponentKind,
    EvalInstance,
    EvalPlan,
    LabelChannel,
    LabelSpec,
    Layout,
    UIComponent,
    UISpec,
)
from .tables import Axis, ChartKind, ChartMeta, DataTable


def _enum_value(v):
    return v.value if hasattr(v, "value") else v


def _require(d: dict, key: str, path: str):
    if key not in d:
        raise MalformedField(f"{path}.{key}", "missing field")
    return d[key]


# --- tables ---------------------------------------------------------------------


def axis_to_dict(a: Axis) -> dict:
    out: dict = {"label": a.label}
    if a.numeric:
        out["min"] = a.min
        out["max"] = a.max
    if a.categories is not None:
        out["categories"] = list(a.categories)
    return out


def axis_from_dict(d: dict) -> Axis:
    return Axis(
        label=d.get("label", ""),
        min=d.get("min"),
        max=d.get("max"),
        categories=tuple(d["categories"]) if d.get("categories") is not None else None,
    )


def table_to_dict(t: DataTable) -> dict:
    out: dict = {
        "columns": [[c.name, c.value_kind.value] for c in t.columns],
        "rows": [list(r) for r in t.rows],
    }
    if t.chart_meta is not None:
        out["chart_meta"] = {
            "chart_kind": t.chart_meta.chart_kind.value,
            "x_axis": axis_to_dict(t.chart_meta.x_axis),
            "y_axis": axis_to_dict(t.chart_meta.y_axis),
            "title": t.chart_meta.title,
        }
    return out


def table_from_dict(d: dict) -> DataTable:
    meta = None
    if d.get("chart_meta"):
        m = d["chart_meta"]
        meta = ChartMeta(
            chart_kind=ChartKind(m["chart_kind"]),
            x_axis=axis_from_dict(m.get("x_axis", {})),
            y_axis=axis_from_dict(m.get("y_axis", {})),
            title=m.get("title", ""),
        )
    return DataTable(
        columns=tuple(ColumnSpec(name, ValueKind(kind)) for name, kind in _require(d, "columns", "table")),
        rows=tuple(tuple(r) for r in _require(d, "rows", "table")),
        chart_meta=meta,
    )


# --- descriptor pieces ---------------------------------------------------------------


def failure_mode_to_dict(m: FailureMode) -> dict:
    return {
        "id": m.id,
        "name": m.name,
        "description": m.description,
        "severity": m.severity.value,
        "origin": m.origin.value,
    }


def failure_mode_from_dict(d: dict) -> FailureMode:
    return FailureMode(
        id=str(_require(d, "id", "failure_mode")),
        name=str(d.get("name", "")),
        description=str(d.get("description", "")),
        severity=Severity(d.get("severity", "medium")),
        origin=FailureModeOrigin(d.get("origin", "inferred")),
    )


def objective_to_dict(o: Objective) -> dict:
    out: dict = {"name": o.name, "description": o.description}
    if o.threshold is not None:
        out["threshold"] = o.threshold
    return out


def objective_from_dict(d: dict) -> Objective:
    threshold = d.get("threshold")
    return Objective(
        name=str(_require(d, "name", "objective")),
        description=str(d.get("description", "")),
        threshold=float(threshold) if threshold is not None else None,
    )


def constraint_to_dict(c: Constraint) -> dict:
    return {"kind": c.kind.value, "target": c.target, "params": {k: v for k, v in c.params}}


def constraint_from_dict(d: dict) -> Constraint:
    return Constraint(
        kind=ConstraintKind(_require(d, "kind", "constraint")),
        target=str(d.get("target", "")),
        params=tuple(sorted(d.get("params", {}).items())),
    )


def binding_to_dict(b: StrategyBinding) -> dict:
    return {
        "failure_mode_id": b.failure_mode_id,
        "category": b.category.value,
        "template_id": b.template_id.value,
        "params": {k: v for k, v in b.params},
    }


def binding_from_dict(d: dict) -> StrategyBinding:
    template = StrategyTemplate(_require(d, "template_id", "binding"))
    category = StrategyCategory(d["category"]) if "category" in d else None
    from .descriptor import TEMPLATE_CATEGORY

    return StrategyBinding(
        failure_mode_id=str(d.get("failure_mode_id", "")),
        category=category or TEMPLATE_CATEGORY[template],
        template_id=template,
        params=tuple(sorted(d.get("params", {}).items())),
    )


def descriptor_to_dict(d: TaskDescriptor) -> dict:
    """Structured descriptor view; the markdown rendering rides along so
    clients can show or re-post the canonical document."""
    return {
        "task_id": d.task_id,
        "title": d.title,
        "description": d.description,
        "task_type": d.task_type.value,
        "io_spec": {
            "input_modalities": sorted(m.value for m in d.io_spec.input_modalities),
            "input_format": d.io_spec.input_format,
            "output_modality": d.io_spec.output_modality.value,
            "output_format": d.io_spec.output_format,
            "output_schema": (
                [[c.name, c.value_kind.value] for c in d.io_spec.output_schema]
                if d.io_spec.output_schema
                else None
            ),
        },
        "grounding": d.grounding.value,
        "constraints": [constraint_to_dict(c) for c in d.constraints],
        "reasoning": {
            "mode": d.reasoning.mode.value,
            "answer_multiplicity": d.reasoning.answer_multiplicity.value,
        },
        "objectives": [objective_to_dict(o) for o in d.objectives],
        "reference_sources": [{"kind": r.kind.value, "locator": r.locator} for r in d.reference_sources],
        "failure_modes": [failure_mode_to_dict(m) for m in d.failure_modes],
        "strategy_bindings": [binding_to_dict(b) for b in d.strategy_bindings],
        "status": d.status.value,
        "markdown": render_descriptor_unchecked(d),
    }


# --- protocol -----------------------------------------------------------------------


_EDIT_VALUE_CODECS = {
    EditTarget.FAILURE_MODE: (failure_mode_to_dict, failure_mode_from_dict),
    EditTarget.OBJECTIVE: (objective_to_dict, objective_from_dict),
    EditTarget.STRATEGY_BINDING: (binding_to_dict, binding_from_dict),
    EditTarget.CONSTRAINT: (constraint_to_dict, constraint_from_dict),
}


def edit_op_to_dict(op: EditOp) -> dict:
    out: dict = {"op": op.op.value, "target": op.target.value}
    if op.target_id:
        out["target_id"] = op.target_id
    if op.value is not None:
        out["value"] = _EDIT_VALUE_CODECS[op.target][0](op.value)
    return out


def edit_op_from_dict(d: dict) -> EditOp:
    target = EditTarget(_require(d, "target", "edit_op"))
    value = None
    if d.get("value") is not None:
        value = _EDIT_VALUE_CODECS[target][1](d["value"])
    return EditOp(
        op=EditAction(_require(d, "op", "edit_op")),
        target=target,
        target_id=str(d.get("target_id", "")),
        value=value,
    )


_PAYLOAD_CODECS = {
    MessageKind.VALIDATE_ERRORS: (failure_mode_to_dict, failure_mode_from_dict),
    MessageKind.PROPOSE_STRATEGIES: (binding_to_dict, binding_from_dict),
    MessageKind.UPDATE_EVALUATION_OBJECTIVE: (objective_to_dict, objective_from_dict),
    MessageKind.PROVIDE_FEEDBACK: (edit_op_to_dict, edit_op_from_dict),
}


def message_to_dict(m: ProtocolMessage) -> dict:
    if m.kind in (MessageKind.RUN_EVALUATION, MessageKind.APPROVE_PLAN):
        payload = m.payload
    else:
        encode = _PAYLOAD_CODECS[m.kind][0]
        payload = [encode(item) for item in m.payload]
    return {"kind": m.kind.value, "session_id": m.session_id, "seq": m.seq, "payload": payload}


def message_from_dict(d: dict) -> ProtocolMessage:
    kind = MessageKind(_require(d, "kind", "message"))
    raw = d.get("payload", [] if kind not in (MessageKind.RUN_EVALUATION, MessageKind.APPROVE_PLAN) else "")
    if kind in (MessageKind.RUN_EVALUATION, MessageKind.APPROVE_PLAN):
        if not isinstance(raw, str):
            raise MalformedField("message.payload", f"{kind.value} payload must be a string")
        payload = raw
    else:
        if not isinstance(raw, list):
            raise MalformedField("message.payload", f"{kind.value} payload must be a list")
        decode = _PAYLOAD_CODECS[kind][1]
        payload = tuple(decode(item) for item in raw)
    return ProtocolMessage(
        kind=kind,
        session_id=str(d.get("session_id", "")),
        seq=int(_require(d, "seq", "message")),
        payload=payload,
    )


def response_to_dict(r: ProtocolResponse) -> dict:
    out: dict = {"verdict": r.verdict.value}
    if r.amendments:
        out["amendments"] = [edit_op_to_dict(op) for op in r.amendments]
    if r.note:
        out["note"] = r.note
    return out


def response_from_dict(d: dict) -> ProtocolResponse:
    return ProtocolResponse(
        verdict=Verdict(_require(d, "verdict", "response")),
        amendments=tuple(edit_op_from_dict(op) for op in d.get("amendments", [])),
        note=str(d.get("note", "")),
    )


def log_entry_to_dict(entry: LogEntry) -> dict:
    out = {"message": message_to_dict(entry.message), "response": response_to_dict(entry.response)}
    if entry.evaluation is not None:
        out["evaluation"] = entry.evaluation
    return out


def log_entry_from_dict(d: dict) -> LogEntry:
    return LogEntry(
        message=message_from_dict(_require(d, "message", "log_entry")),
        response=response_from_dict(_require(d, "response", "log_entry")),
        evaluation=d.get("evaluation"),
    )


# --- plan ----------------------------------------------------------------------------


def plan_to_dict(p: EvalPlan) -> dict:
    return {
        "plan_id": p.plan_id,
        "version": p.version,
        "plan_hash": p.plan_hash,
        "descriptor_md": render_descriptor_unchecked(p.descriptor_snapshot),
        "evals": [
            {
                "eval_id": e.eval_id,
                "template_id": e.template_id.value,
                "category": e.category.value,
                "failure_mode_id": e.failure_mode_id,
                "params": {k: v for k, v in e.params},
                "requires_reference": e.requires_reference,
            }
            for e in p.evals
        ],
        "ui_spec": {
            "layout": p.ui_spec.layout.value,
            "components": [{"kind": c.kind.value, "source": c.source} for c in p.ui_spec.components],
        },
        "label_spec": {
            "channels": [
                {"channel_id": c.channel_id, "kind": c.kind.value, "target": c.target}
                for c in p.label_spec.channels
            ]
        },
    }


def plan_from_dict(d: dict) -> EvalPlan:
    return EvalPlan(
        plan_id=str(_require(d, "plan_id", "plan")),
        version=int(_require(d, "version", "plan")),
        descriptor_snapshot=parse_descriptor(_require(d, "descriptor_md", "plan")),
        evals=tuple(
            EvalInstance(
                eval_id=str(e["eval_id"]),
                template_id=StrategyTemplate(e["template_id"]),
                category=StrategyCategory(e["category"]),
                failure_mode_id=str(e.get("failure_mode_id", "")),
                params=tuple(sorted(e.get("params", {}).items())),
                requires_reference=bool(e.get("requires_reference", False)),
            )
            for e in d.get("evals", [])
        ),
        ui_spec=UISpec(
            components=tuple(
                UIComponent(kind=ComponentKind(c["kind"]), source=str(c["source"]))
                for c in d.get("ui_spec", {}).get("components", [])
            ),
            layout=Layout(d.get("ui_spec", {}).get("layout", "single_column")),
        ),
        label_spec=LabelSpec(
            channels=tuple(
                LabelChannel(
                    channel_id=str(c["channel_id"]),
                    kind=ChannelKind(c["kind"]),
                    target=str(c.get("target", "")),
                )
                for c in d.get("label_spec", {}).get("channels", [])
            )
        ),
        plan_hash=str(d.get("plan_hash", "")),
    )


# --- records ---------------------------------------------------------------------------


def example_to_dict(r: ExampleRecord) -> dict:
    out: dict = {
        "example_id": r.example_id,
        "task_id": r.task_id,
        "inputs": [
            {
                "modality": i.modality.value,
                "text": i.text,
                "blob_ref": i.blob_ref,
                "media_type": i.media_type,
            }
            for i in r.inputs
        ],
        "fm_output": {},
        "reference": None,
        "created_at": r.created_at,
    }
    if r.fm_output.table is not None:
        out["fm_output"]["table"] = table_to_dict(r.fm_output.table)
    if r.fm_output.text:
        out["fm_output"]["text"] = r.fm_output.text
    if r.reference is not None:
        ref: dict = {}
        if r.reference.table is not None:
            ref["table"] = table_to_dict(r.reference.table)
        if r.reference.answer:
            ref["answer"] = r.reference.answer
        if r.reference.approved_sources:
            ref["approved_sources"] = list(r.reference.approved_sources)
        out["reference"] = ref
    return out


def example_from_dict(d: dict) -> ExampleRecord:
    fm = d.get("fm_output", {})
    ref = d.get("reference")
    return ExampleRecord(
        example_id=str(_require(d, "example_id", "example")),
        task_id=str(_require(d, "task_id", "example")),
        inputs=tuple(
            InputRef(
                modality=Modality(i["modality"]),
                text=str(i.get("text", "")),
                blob_ref=str(i.get("blob_ref", "")),
                media_type=str(i.get("media_type", "")),
            )
            for i in d.get("inputs", [])
        ),
        fm_output=FmOutput(
            table=table_from_dict(fm["table"]) if fm.get("table") else None,
            text=str(fm.get("text", "")),
        ),
        reference=(
            Reference(
                table=table_from_dict(ref["table"]) if ref.get("table") else None,
                answer=str(ref.get("answer", "")),
                approved_sources=tuple(ref.get("approved_sources", [])),
            )
            if ref is not None
            else None
        ),
        created_at=str(d.get("created_at", "")),
    )


def _label_payload_to_dict(label: LabelRecord) -> dict:
    p = label.payload
    if isinstance(p, CellEdit):
        return {"row": p.row, "column": p.column, "old_value": p.old_value, "new_value": p.new_value}
    if isinstance(p, BinaryApproval):
        return {"source_index": p.source_index, "approved": p.approved}
    return {"text": p.text}


def label_to_dict(label: LabelRecord) -> dict:
    return {
        "label_id": label.label_id,
        "example_id": label.example_id,
        "channel_id": label.channel_id,
        "kind": label.kind.value,
        "payload": _label_payload_to_dict(label),
        "labeler": label.labeler,
        "created_at": label.created_at,
    }


def label_payload_from_dict(kind: ChannelKind, d: dict):
    if kind is ChannelKind.CELL_EDIT:
        return CellEdit(
            row=int(_require(d, "row", "cell_edit")),
            column=str(_require(d, "column", "cell_edit")),
            old_value=d.get("old_value", ""),
            new_value=_require(d, "new_value", "cell_edit"),
        )
    if kind is ChannelKind.BINARY_APPROVAL:
        return BinaryApproval(
            source_index=int(_require(d, "source_index", "binary_approval")),
            approved=bool(_require(d, "approved", "binary_approval")),
        )
    return FreeTextNote(text=str(d.get("text", "")))


def label_from_dict(d: dict) -> LabelRecord:
    kind = ChannelKind(_require(d, "kind", "label"))
    return LabelRecord(
        label_id=str(_require(d, "label_id", "label")),
        example_id=str(_require(d, "example_id", "label")),
        channel_id=str(_require(d, "channel_id", "label")),
        kind=kind,
        payload=label_payload_from_dict(kind, d.get("payload", {})),
        labeler=str(d.get("labeler", "")),
        created_at=str(d.get("created_at", "")),
    )


# --- eval results -------------------------------------------------------------------------


def _report_to_dict(r: ErrorReport) -> dict:
    return {
        "incorrect": [
            {"row_index": c.row_index, "column": c.column, "extracted": c.extracted, "reference": c.reference}
            for c in r.incorrect
        ],
        "spurious": [{"row_index": u.row_index, "cells": list(u.cells)} for u in r.spurious],
        "missing": [{"row_index": u.row_index, "cells": list(u.cells)} for u in r.missing],
        "correct": r.correct,
        "counts": r.counts,
    }


def _report_from_dict(d: dict) -> ErrorReport:
    return ErrorReport(
        incorrect=tuple(
            IncorrectCell(
                row_index=int(c["row_index"]),
                column=str(c["column"]),
                extracted=float(c["extracted"]),
                reference=float(c["reference"]),
            )
            for c in d.get("incorrect", [])
        ),
        spurious=tuple(
            UnmatchedRow(row_index=int(u["row_index"]), cells=tuple(u["cells"])) for u in d.get("spurious", [])
        ),
        missing=tuple(
            UnmatchedRow(row_index=int(u["row_index"]), cells=tuple(u["cells"])) for u in d.get("missing", [])
        ),
        correct=int(d.get("correct", 0)),
    )


def eval_output_to_dict(out: EvalOutput) -> dict:
    d: dict = {}
    if out.score is not None:
        d["score"] = out.score
    if out.metrics:
        d["metrics"] = {k: v for k, v in out.metrics}
    if out.stats:
        d["stats"] = {k: v for k, v in out.stats}
    if out.artifacts:
        d["artifacts"] = [
            {"name": a.name, "media_type": a.media_type, "ref": a.content_ref} for a in out.artifacts
        ]
    if out.report is not None:
        d["report"] = _report_to_dict(out.report)
    if out.spans:
        d["spans"] = [
            {"passage_index": s.passage_index, "start_word": s.start_word, "end_word": s.end_word}
            for s in out.spans
        ]
    if out.support_ranking:
        d["support_ranking"] = [list(pair) for pair in out.support_ranking]
    if out.violations:
        d["violations"] = [
            {
                "constraint_index": v.constraint_index,
                "path": v.path,
                "observed": v.observed,
                "message": v.message,
            }
            for v in out.violations
        ]
    if out.rationale:
        d["rationale"] = out.rationale
    if out.error:
        d["error"] = out.error
    if out.skipped_missing_reference:
        d["skipped_missing_reference"] = True
    return d


def eval_output_from_dict(d: dict) -> EvalOutput:
    return EvalOutput(
        score=d.get("score"),
        metrics=tuple(sorted(d.get("metrics", {}).items())),
        stats=tuple(sorted(d.get("stats", {}).items())),
        artifacts=tuple(
            Artifact(name=a["name"], media_type=a.get("media_type", ""), ref=a.get("ref", ""))
            for a in d.get("artifacts", [])
        ),
        report=_report_from_dict(d["report"]) if d.get("report") else None,
        spans=tuple(
            Span(
                passage_index=int(s["passage_index"]),
                start_word=int(s["start_word"]),
                end_word=int(s["end_word"]),
            )
            for s in d.get("spans", [])
        ),
        support_ranking=tuple((int(a), int(b)) for a, b in d.get("support_ranking", [])),
        violations=tuple(
            Violation(
                constraint_index=int(v["constraint_index"]),
                path=str(v["path"]),
                observed=str(v["observed"]),
                message=str(v["message"]),
            )
            for v in d.get("violations", [])
        ),
        rationale=str(d.get("rationale", "")),
        error=str(d.get("error", "")),
        skipped_missing_reference=bool(d.get("skipped_missing_reference", False)),
    )


def result_to_dict(r: EvalResult) -> dict:
    return {
        "example_id": r.example_id,
        "plan_id": r.plan_id,
        "plan_version": r.plan_version,
        "verdict": r.verdict.value,
        "outputs": {eval_id: eval_output_to_dict(out) for eval_id, out in r.outputs},
    }


def result_from_dict(d: dict) -> EvalResult:
    return EvalResult(
        example_id=str(_require(d, "example_id", "result")),
        plan_id=str(d.get("plan_id", "")),
        plan_version=int(d.get("plan_version", 0)),
        outputs=tuple(
            (eval_id, eval_output_from_dict(out)) for eval_id, out in d.get("outputs", {}).items()
        ),
        verdict=RunVerdict(_require(d, "verdict", "result")),
    )
