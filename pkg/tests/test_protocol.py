"""Session state machine: safety matrix, happy path, replay determinism."""

import pytest

from evalsynth.descriptor import (
    FailureMode,
    FailureModeOrigin,
    Objective,
    Severity,
    Status,
)
from evalsynth.errors import (
    AmendWithoutOps,
    IllegalMessage,
    InvalidDescriptor,
    PlanNotApproved,
    SeqMismatch,
    SessionMismatch,
    StalePlan,
)
from evalsynth.protocol import (
    ALLOWED_MESSAGES,
    EditAction,
    EditOp,
    EditTarget,
    MessageKind,
    ProtocolMessage,
    ProtocolResponse,
    Session,
    Stage,
    Verdict,
    allowed_messages,
    finalize_plan,
    handle_message,
    open_session,
    proposed_plan,
    replay_session,
)

APPROVE = ProtocolResponse(verdict=Verdict.APPROVE)


def _msg(session: Session, kind: MessageKind, payload=()):
    if kind is MessageKind.VALIDATE_ERRORS and payload == ():
        payload = session.descriptor.failure_modes
    if kind is MessageKind.PROPOSE_STRATEGIES and payload == ():
        from evalsynth.synthesis import propose_strategies

        payload = tuple(propose_strategies(session.descriptor))
    if kind is MessageKind.APPROVE_PLAN and payload == ():
        payload = proposed_plan(session).plan_hash
    if kind is MessageKind.RUN_EVALUATION and payload == ():
        payload = "stored"
    return ProtocolMessage(kind=kind, session_id=session.session_id, seq=len(session.log), payload=payload)


def _step(session: Session, kind: MessageKind, response=APPROVE, payload=()):
    return handle_message(session, _msg(session, kind, payload), response)


def _session_at(descriptor, stage: Stage) -> Session:
    s = open_session(descriptor)
    if stage is Stage.ELICIT:
        return s
    s = _step(s, MessageKind.VALIDATE_ERRORS)
    if stage is Stage.MAP:
        return s
    s = _step(s, MessageKind.PROPOSE_STRATEGIES)
    s = _step(s, MessageKind.APPROVE_PLAN)
    if stage is Stage.RUN:
        return s
    s = _step(s, MessageKind.RUN_EVALUATION)
    if stage is Stage.REFINE:
        return s
    s = _step(s, MessageKind.PROVIDE_FEEDBACK)
    assert s.stage is Stage.FINALISED
    return s


# --- opening ------------------------------------------------------------------


def test_open_session_initial_state(chart_descriptor):
    s = open_session(chart_descriptor)
    assert s.stage is Stage.ELICIT
    assert s.log == ()
    assert s.plan is None
    assert s.plan_version == 0


def test_open_session_rejects_non_draft(chart_descriptor):
    from dataclasses import replace

    with pytest.raises(InvalidDescriptor):
        open_session(replace(chart_descriptor, status=Status.FINALISED))


def test_open_session_rejects_hard_issues(invalid_range_descriptor):
    with pytest.raises(InvalidDescriptor):
        open_session(invalid_range_descriptor)


# --- allowed messages table ----------------------------------------------------


def test_allowed_messages_table(chart_descriptor):
    expectations = {
        Stage.ELICIT: {MessageKind.VALIDATE_ERRORS},
        Stage.MAP: {
            MessageKind.PROPOSE_STRATEGIES,
            MessageKind.UPDATE_EVALUATION_OBJECTIVE,
            MessageKind.APPROVE_PLAN,
        },
        Stage.RUN: {MessageKind.RUN_EVALUATION},
        Stage.REFINE: {MessageKind.PROVIDE_FEEDBACK},
        Stage.FINALISED: set(),
    }
    for stage, kinds in expectations.items():
        s = _session_at(chart_descriptor, stage)
        assert allowed_messages(s) == frozenset(kinds), stage


def test_safety_matrix_illegal_messages_leave_state_unchanged(chart_descriptor):
    # every stage x kind combination: 5 stages x 6 kinds = 30 cases
    checked = 0
    for stage in Stage:
        for kind in MessageKind:
            s = _session_at(chart_descriptor, stage)
            checked += 1
            if kind in ALLOWED_MESSAGES[stage]:
                continue
            before = s
            payload = "x" if kind in (MessageKind.RUN_EVALUATION, MessageKind.APPROVE_PLAN) else ()
            raw = ProtocolMessage(kind=kind, session_id=s.session_id, seq=len(s.log), payload=payload)
            with pytest.raises(IllegalMessage):
                handle_message(s, raw, APPROVE)
            assert s == before
    assert checked == 30


# --- happy path -----------------------------------------------------------------


@pytest.mark.parametrize("fixture_name", ["chart_descriptor", "qa_descriptor"])
def test_happy_path_reaches_finalised(fixture_name, request):
    descriptor = request.getfixturevalue(fixture_name)
    s = open_session(descriptor)
    s = _step(s, MessageKind.VALIDATE_ERRORS)
    assert s.stage is Stage.MAP
    assert s.descriptor.status is Status.ERRORS_VALIDATED
    s = _step(s, MessageKind.PROPOSE_STRATEGIES)
    assert s.descriptor.status is Status.STRATEGIES_VALIDATED
    s = _step(s, MessageKind.APPROVE_PLAN)
    assert s.stage is Stage.RUN
    assert s.descriptor.status is Status.PLAN_APPROVED
    assert s.plan is not None and s.plan.version == 1
    s = _step(s, MessageKind.RUN_EVALUATION)
    assert s.stage is Stage.REFINE
    s = _step(s, MessageKind.PROVIDE_FEEDBACK)
    assert s.stage is Stage.FINALISED
    assert s.descriptor.status is Status.FINALISED
    assert finalize_plan(s).version == 1


def test_refine_cycle_bumps_plan_version(chart_descriptor):
    s = _session_at(chart_descriptor, Stage.REFINE)
    edit = EditOp(
        op=EditAction.ADD,
        target=EditTarget.OBJECTIVE,
        value=Objective(name="legibility", description="chart is readable", threshold=0.5),
    )
    s = _step(s, MessageKind.PROVIDE_FEEDBACK, payload=(edit,))
    assert s.stage is Stage.MAP
    assert s.plan is None
    assert any(o.name == "legibility" for o in s.descriptor.objectives)
    s = _step(s, MessageKind.APPROVE_PLAN)
    assert s.plan is not None and s.plan.version == 2
    assert finalize_plan(s).version == 2


def test_finalize_before_approval_raises(chart_descriptor):
    s = open_session(chart_descriptor)
    with pytest.raises(PlanNotApproved):
        finalize_plan(s)


# --- elicit amendments ------------------------------------------------------------


def test_validate_errors_amend_delete(chart_descriptor):
    s = open_session(chart_descriptor)
    assert len(s.descriptor.failure_modes) == 3
    amend = ProtocolResponse(
        verdict=Verdict.AMEND,
        amendments=(EditOp(op=EditAction.DELETE, target=EditTarget.FAILURE_MODE, target_id="spurious_value"),),
    )
    s = _step(s, MessageKind.VALIDATE_ERRORS, response=amend)
    assert s.stage is Stage.MAP
    assert len(s.descriptor.failure_modes) == 2
    assert "spurious_value" not in s.descriptor.failure_mode_ids()


def test_validate_errors_reject_stays_in_elicit(chart_descriptor):
    s = open_session(chart_descriptor)
    s2 = _step(s, MessageKind.VALIDATE_ERRORS, response=ProtocolResponse(verdict=Verdict.REJECT))
    assert s2.stage is Stage.ELICIT
    assert s2.descriptor == s.descriptor
    assert len(s2.log) == 1


def test_amend_without_ops_rejected(chart_descriptor):
    s = open_session(chart_descriptor)
    with pytest.raises(AmendWithoutOps):
        _step(s, MessageKind.VALIDATE_ERRORS, response=ProtocolResponse(verdict=Verdict.AMEND))


def test_add_failure_mode_via_amendment(chart_descriptor):
    s = open_session(chart_descriptor)
    new_mode = FailureMode(
        id="axis_swap",
        name="Axis swap",
        description="x and y are transposed",
        severity=Severity.HIGH,
        origin=FailureModeOrigin.HUMAN_ADDED,
    )
    amend = ProtocolResponse(
        verdict=Verdict.AMEND,
        amendments=(EditOp(op=EditAction.ADD, target=EditTarget.FAILURE_MODE, value=new_mode),),
    )
    s = _step(s, MessageKind.VALIDATE_ERRORS, response=amend)
    assert "axis_swap" in s.descriptor.failure_mode_ids()


# --- sequencing & addressing -------------------------------------------------------


def test_seq_mismatch(chart_descriptor):
    s = open_session(chart_descriptor)
    msg = ProtocolMessage(
        kind=MessageKind.VALIDATE_ERRORS,
        session_id=s.session_id,
        seq=5,
        payload=s.descriptor.failure_modes,
    )
    with pytest.raises(SeqMismatch):
        handle_message(s, msg, APPROVE)


def test_session_mismatch(chart_descriptor):
    s = open_session(chart_descriptor)
    msg = ProtocolMessage(
        kind=MessageKind.VALIDATE_ERRORS,
        session_id="sess-other",
        seq=0,
        payload=s.descriptor.failure_modes,
    )
    with pytest.raises(SessionMismatch):
        handle_message(s, msg, APPROVE)


def test_log_is_gapless(chart_descriptor):
    s = _session_at(chart_descriptor, Stage.FINALISED)
    assert [e.message.seq for e in s.log] == list(range(len(s.log)))


# --- stale plan guard ----------------------------------------------------------------


def test_approve_plan_with_stale_hash(chart_descriptor):
    s = _session_at(chart_descriptor, Stage.MAP)
    s = _step(s, MessageKind.PROPOSE_STRATEGIES)
    with pytest.raises(StalePlan):
        _step(s, MessageKind.APPROVE_PLAN, payload="0" * 64)


def test_update_objectives_stays_in_map(chart_descriptor):
    s = _session_at(chart_descriptor, Stage.MAP)
    objectives = (Objective(name="coverage", description="all series extracted", threshold=0.8),)
    s = _step(s, MessageKind.UPDATE_EVALUATION_OBJECTIVE, payload=objectives)
    assert s.stage is Stage.MAP
    assert s.descriptor.objectives == objectives


# --- replay --------------------------------------------------------------------------


def test_replay_reconstructs_final_state(chart_descriptor, qa_descriptor):
    for descriptor in (chart_descriptor, qa_descriptor):
        s = _session_at(descriptor, Stage.FINALISED)
        rebuilt = replay_session(descriptor, s.log)
        assert rebuilt == s


def test_replay_with_refine_cycle(chart_descriptor):
    s = _session_at(chart_descriptor, Stage.REFINE)
    edit = EditOp(
        op=EditAction.DELETE,
        target=EditTarget.FAILURE_MODE,
        target_id="missing_value",
    )
    s = _step(s, MessageKind.PROVIDE_FEEDBACK, payload=(edit,))
    s = _step(s, MessageKind.PROPOSE_STRATEGIES)
    s = _step(s, MessageKind.APPROVE_PLAN)
    rebuilt = replay_session(chart_descriptor, s.log)
    assert rebuilt == s
    assert rebuilt.plan_version == 2
