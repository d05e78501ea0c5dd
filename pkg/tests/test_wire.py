"""Markdown message documents: parse/render round trips."""

import pytest

from evalsynth.descriptor import (
    Constraint,
    ConstraintKind,
    FailureMode,
    FailureModeOrigin,
    Objective,
    Severity,
    StrategyTemplate,
    make_binding,
    seeded_failure_modes,
    TaskType,
)
from evalsynth.errors import MalformedField
from evalsynth.protocol import (
    EditAction,
    EditOp,
    EditTarget,
    MessageKind,
    ProtocolMessage,
    ProtocolResponse,
    Verdict,
)
from evalsynth.wire import parse_message_doc, render_message_doc


def _round_trip(message, response):
    doc = render_message_doc(message, response)
    parsed_message, parsed_response = parse_message_doc(doc)
    assert parsed_message == message
    assert parsed_response == response
    return doc


def test_validate_errors_round_trip():
    message = ProtocolMessage(
        kind=MessageKind.VALIDATE_ERRORS,
        session_id="sess-chart-demo",
        seq=0,
        payload=seeded_failure_modes(TaskType.STRUCTURED_EXTRACTION),
    )
    response = ProtocolResponse(
        verdict=Verdict.AMEND,
        amendments=(
            EditOp(op=EditAction.DELETE, target=EditTarget.FAILURE_MODE, target_id="spurious_value"),
        ),
        note="one class is not applicable here",
    )
    doc = _round_trip(message, response)
    assert doc.splitlines()[0] == "# protocol message"
    assert "## potential errors" in doc
    assert "## amendments" in doc


def test_propose_strategies_round_trip():
    message = ProtocolMessage(
        kind=MessageKind.PROPOSE_STRATEGIES,
        session_id="sess-x",
        seq=1,
        payload=(
            make_binding(StrategyTemplate.CHART_REGENERATION, failure_mode_id="incorrect_value"),
            make_binding(StrategyTemplate.TABLE_DIFF, failure_mode_id="missing_value", x_rel=0.05),
        ),
    )
    _round_trip(message, ProtocolResponse(verdict=Verdict.APPROVE))


def test_objectives_round_trip():
    message = ProtocolMessage(
        kind=MessageKind.UPDATE_EVALUATION_OBJECTIVE,
        session_id="sess-x",
        seq=2,
        payload=(
            Objective(name="accuracy", description="values match the chart", threshold=0.9),
            Objective(name="legibility"),
        ),
    )
    _round_trip(message, ProtocolResponse(verdict=Verdict.APPROVE))


def test_approve_plan_round_trip():
    message = ProtocolMessage(
        kind=MessageKind.APPROVE_PLAN, session_id="sess-x", seq=3, payload="c0ffee" * 10
    )
    doc = _round_trip(message, ProtocolResponse(verdict=Verdict.APPROVE))
    assert f"- plan_hash: {'c0ffee' * 10}" in doc


def test_run_evaluation_round_trip():
    message = ProtocolMessage(
        kind=MessageKind.RUN_EVALUATION, session_id="sess-x", seq=4, payload="stored"
    )
    doc = _round_trip(message, ProtocolResponse(verdict=Verdict.APPROVE))
    assert "- dataset: stored" in doc


def test_provide_feedback_with_edits_round_trip():
    new_mode = FailureMode(
        id="axis_swap",
        name="Axis swap",
        description="x and y are transposed",
        severity=Severity.HIGH,
        origin=FailureModeOrigin.HUMAN_ADDED,
    )
    constraint = Constraint(
        kind=ConstraintKind.RANGE, target="y", params=(("max", 100.0), ("min", 0.0))
    )
    message = ProtocolMessage(
        kind=MessageKind.PROVIDE_FEEDBACK,
        session_id="sess-x",
        seq=5,
        payload=(
            EditOp(op=EditAction.ADD, target=EditTarget.FAILURE_MODE, value=new_mode),
            EditOp(op=EditAction.EDIT, target=EditTarget.OBJECTIVE, target_id="accuracy",
                   value=Objective(name="accuracy", threshold=0.95)),
            EditOp(op=EditAction.ADD, target=EditTarget.CONSTRAINT, value=constraint),
            EditOp(op=EditAction.DELETE, target=EditTarget.STRATEGY_BINDING, target_id="table_diff"),
        ),
    )
    _round_trip(message, ProtocolResponse(verdict=Verdict.APPROVE))


def test_empty_provide_feedback_round_trip():
    message = ProtocolMessage(
        kind=MessageKind.PROVIDE_FEEDBACK, session_id="sess-x", seq=6, payload=()
    )
    _round_trip(message, ProtocolResponse(verdict=Verdict.APPROVE))


def test_parse_rejects_unknown_kind():
    doc = "# protocol message\n- session: s\n- seq: 0\n- kind: Telepathy\n"
    with pytest.raises(MalformedField):
        parse_message_doc(doc)


def test_parse_rejects_bad_seq():
    doc = "# protocol message\n- session: s\n- seq: soon\n- kind: RunEvaluation\n"
    with pytest.raises(MalformedField):
        parse_message_doc(doc)


def test_parse_defaults_verdict_to_approve():
    doc = "# protocol message\n- session: s\n- seq: 0\n- kind: RunEvaluation\n- dataset: stored\n"
    _, response = parse_message_doc(doc)
    assert response.verdict is Verdict.APPROVE
