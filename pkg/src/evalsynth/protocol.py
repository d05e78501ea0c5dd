"""Session state machine for the staged review loop.

A session walks Elicit -> Map -> Run -> Refine and loops until the reviewer
finalises the plan. Every transition is a pure function of
``(session, message, response)``, so persisted logs replay to exactly the
same state. Anything transport-related (markdown or JSON encodings, HTTP)
lives elsewhere; this module only sees typed messages.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Callable

from . import synthesis
from .descriptor import (
    Constraint,
    FailureMode,
    IssueSeverity,
    Objective,
    Status,
    StrategyBinding,
    TaskDescriptor,
    ValidationIssue,
    hard_issues,
)
from .errors import (
    AmendWithoutOps,
    DanglingFailureMode,
    IllegalMessage,
    InvalidDescriptor,
    PayloadMismatch,
    PlanNotApproved,
    SeqMismatch,
    SessionMismatch,
    StalePlan,
)
from .synthesis import EvalPlan


class MessageKind(str, enum.Enum):
    VALIDATE_ERRORS = "ValidateErrors"
    UPDATE_EVALUATION_OBJECTIVE = "UpdateEvaluationObjective"
    PROPOSE_STRATEGIES = "ProposeStrategies"
    APPROVE_PLAN = "ApprovePlan"
    RUN_EVALUATION = "RunEvaluation"
    PROVIDE_FEEDBACK = "ProvideFeedback"


class Stage(str, enum.Enum):
    ELICIT = "Elicit"
    MAP = "Map"
    RUN = "Run"
    REFINE = "Refine"
    FINALISED = "Finalised"


class Verdict(str, enum.Enum):
    APPROVE = "approve"
    REJECT = "reject"
    AMEND = "amend"


class EditTarget(str, enum.Enum):
    FAILURE_MODE = "failure_mode"
    OBJECTIVE = "objective"
    STRATEGY_BINDING = "strategy_binding"
    CONSTRAINT = "constraint"


class EditAction(str, enum.Enum):
    ADD = "add"
    DELETE = "delete"
    EDIT = "edit"


EditValue = FailureMode | Objective | StrategyBinding | Constraint


@dataclass(frozen=True)
class EditOp:
    op: EditAction
    target: EditTarget
    target_id: str = ""
    value: EditValue | None = None


Payload = tuple | str


@dataclass(frozen=True)
class ProtocolMessage:
    kind: MessageKind
    session_id: str
    seq: int
    payload: Payload = ()


@dataclass(frozen=True)
class ProtocolResponse:
    verdict: Verdict
    amendments: tuple[EditOp, ...] = ()
    note: str = ""

    def __post_init__(self):
        object.__setattr__(self, "amendments", tuple(self.amendments))


@dataclass(frozen=True)
class LogEntry:
    message: ProtocolMessage
    response: ProtocolResponse
    # Opaque JSON-able evaluation summary, recorded verbatim so replay never
    # re-runs evals.
    evaluation: dict | None = None


@dataclass(frozen=True)
class Session:
    session_id: str
    descriptor: TaskDescriptor
    stage: Stage = Stage.ELICIT
    log: tuple[LogEntry, ...] = ()
    plan: EvalPlan | None = None
    plan_version: int = 0

    def __post_init__(self):
        object.__setattr__(self, "log", tuple(self.log))


ALLOWED_MESSAGES: dict[Stage, frozenset[MessageKind]] = {
    Stage.ELICIT: frozenset({MessageKind.VALIDATE_ERRORS}),
    Stage.MAP: frozenset(
        {
            MessageKind.PROPOSE_STRATEGIES,
            MessageKind.UPDATE_EVALUATION_OBJECTIVE,
            MessageKind.APPROVE_PLAN,
        }
    ),
    Stage.RUN: frozenset({MessageKind.RUN_EVALUATION}),
    Stage.REFINE: frozenset({MessageKind.PROVIDE_FEEDBACK}),
    Stage.FINALISED: frozenset(),
}

_PAYLOAD_TYPES: dict[MessageKind, type] = {
    MessageKind.VALIDATE_ERRORS: FailureMode,
    MessageKind.PROPOSE_STRATEGIES: StrategyBinding,
    MessageKind.UPDATE_EVALUATION_OBJECTIVE: Objective,
    MessageKind.PROVIDE_FEEDBACK: EditOp,
}


def session_id_for_task(task_id: str) -> str:
    return f"sess-{task_id}"


def open_session(d: TaskDescriptor) -> Session:
    if d.status is not Status.DRAFT:
        raise InvalidDescriptor(
            [
                ValidationIssue(
                    "status",
                    IssueSeverity.HARD,
                    f"session requires a draft descriptor, got {d.status.value}",
                )
            ]
        )
    issues = hard_issues(d)
    if issues:
        raise InvalidDescriptor(issues)
    return Session(session_id=session_id_for_task(d.task_id), descriptor=d)


def allowed_messages(s: Session) -> frozenset[MessageKind]:
    return ALLOWED_MESSAGES[s.stage]


def _check_payload(message: ProtocolMessage) -> None:
    kind = message.kind
    if kind in (MessageKind.RUN_EVALUATION, MessageKind.APPROVE_PLAN):
        if not isinstance(message.payload, str):
            raise PayloadMismatch(f"{kind.value} payload must be a string")
        return
    if not isinstance(message.payload, tuple):
        raise PayloadMismatch(f"{kind.value} payload must be a tuple")
    expected = _PAYLOAD_TYPES[kind]
    for item in message.payload:
        if not isinstance(item, expected):
            raise PayloadMismatch(
                f"{kind.value} payload items must be {expected.__name__}, got {type(item).__name__}"
            )


def handle_message(
    s: Session,
    message: ProtocolMessage,
    response: ProtocolResponse,
    evaluate: Callable[[str], dict] | None = None,
) -> Session:
    """Apply one (message, response) exchange and return the next session.

    Raises without side effects on any rule violation; the caller's session
    object is never mutated.
    """
    if message.session_id != s.session_id:
        raise SessionMismatch(f"message addressed to {message.session_id!r}, session is {s.session_id!r}")
    if message.seq != len(s.log):
        raise SeqMismatch(expected=len(s.log), got=message.seq)
    if message.kind not in allowed_messages(s):
        raise IllegalMessage(message.kind, s.stage)
    if response.verdict is Verdict.AMEND and not response.amendments:
        raise AmendWithoutOps("verdict=amend requires at least one edit operation")
    _check_payload(message)

    entry = LogEntry(message=message, response=response)
    kind, verdict = message.kind, response.verdict

    if kind is MessageKind.VALIDATE_ERRORS:
        if verdict is Verdict.REJECT:
            return _append(s, entry)
        descriptor = replace(s.descriptor, failure_modes=tuple(message.payload))
        descriptor = apply_edit_ops(descriptor, response.amendments)
        descriptor = descriptor.with_status(Status.ERRORS_VALIDATED)
        return _append(replace(s, descriptor=descriptor, stage=Stage.MAP), entry)

    if kind is MessageKind.PROPOSE_STRATEGIES:
        if verdict is Verdict.REJECT:
            return _append(s, entry)
        descriptor = replace(s.descriptor, strategy_bindings=tuple(message.payload))
        descriptor = apply_edit_ops(descriptor, response.amendments)
        known = descriptor.failure_mode_ids()
        for b in descriptor.strategy_bindings:
            if b.failure_mode_id and b.failure_mode_id not in known:
                raise DanglingFailureMode(b.failure_mode_id)
        descriptor = descriptor.with_status(Status.STRATEGIES_VALIDATED)
        return _append(replace(s, descriptor=descriptor), entry)

    if kind is MessageKind.UPDATE_EVALUATION_OBJECTIVE:
        if verdict is Verdict.REJECT:
            return _append(s, entry)
        descriptor = replace(s.descriptor, objectives=tuple(message.payload))
        descriptor = apply_edit_ops(descriptor, response.amendments)
        return _append(replace(s, descriptor=descriptor), entry)

    if kind is MessageKind.APPROVE_PLAN:
        if verdict is not Verdict.APPROVE:
            return _append(s, entry)
        prospective = proposed_plan(s)
        if message.payload != prospective.plan_hash:
            raise StalePlan(
                f"approval hash {message.payload[:12]}... does not match current plan "
                f"{prospective.plan_hash[:12]}..."
            )
        # Approving the plan also ratifies its strategy set.
        descriptor = replace(
            s.descriptor, strategy_bindings=synthesis.resolved_bindings(s.descriptor)
        ).with_status(Status.PLAN_APPROVED)
        return _append(
            replace(
                s,
                descriptor=descriptor,
                stage=Stage.RUN,
                plan=prospective,
                plan_version=prospective.version,
            ),
            entry,
        )

    if kind is MessageKind.RUN_EVALUATION:
        if verdict is Verdict.REJECT:
            return _append(s, entry)
        evaluation = evaluate(message.payload) if evaluate is not None else None
        entry = LogEntry(message=message, response=response, evaluation=evaluation)
        return _append(replace(s, stage=Stage.REFINE), entry)

    # Refine / ProvideFeedback
    if verdict is Verdict.REJECT:
        return _append(s, entry)
    ops = tuple(message.payload) + response.amendments
    if not ops:
        descriptor = s.descriptor.with_status(Status.FINALISED)
        return _append(replace(s, descriptor=descriptor, stage=Stage.FINALISED), entry)
    descriptor = apply_edit_ops(s.descriptor, ops)
    return _append(replace(s, descriptor=descriptor, stage=Stage.MAP, plan=None), entry)


def _append(s: Session, entry: LogEntry) -> Session:
    return replace(s, log=s.log + (entry,))


def proposed_plan(s: Session) -> EvalPlan:
    """The plan the next ApprovePlan would install (version already bumped)."""
    return synthesis.plan_for_descriptor(s.descriptor, version=s.plan_version + 1)


def finalize_plan(s: Session) -> EvalPlan:
    if s.stage in (Stage.RUN, Stage.REFINE, Stage.FINALISED) and s.plan is not None:
        return s.plan
    raise PlanNotApproved(f"no approved plan in stage {s.stage.value}")


# --- descriptor edits -------------------------------------------------------------


def _edit_list(items: tuple, op: EditOp, key: Callable, expected: type, label: str) -> tuple:
    if op.op is EditAction.ADD:
        if op.value is None:
            raise PayloadMismatch(f"add {label} requires a value")
        if not isinstance(op.value, expected):
            raise PayloadMismatch(f"add {label} value must be {expected.__name__}")
        if any(key(item) == key(op.value) for item in items):
            raise PayloadMismatch(f"{label} {key(op.value)!r} already exists")
        return items + (op.value,)
    if not op.target_id:
        raise PayloadMismatch(f"{op.op.value} {label} requires target_id")
    matches = [i for i, item in enumerate(items) if key(item) == op.target_id]
    if not matches:
        raise PayloadMismatch(f"unknown {label}: {op.target_id!r}")
    idx = matches[0]
    if op.op is EditAction.DELETE:
        return items[:idx] + items[idx + 1 :]
    if op.value is None or not isinstance(op.value, expected):
        raise PayloadMismatch(f"edit {label} requires a {expected.__name__} value")
    return items[:idx] + (op.value,) + items[idx + 1 :]


def apply_edit_ops(d: TaskDescriptor, ops: tuple[EditOp, ...]) -> TaskDescriptor:
    for op in ops:
        if op.target is EditTarget.FAILURE_MODE:
            modes = _edit_list(d.failure_modes, op, lambda m: m.id, FailureMode, "failure mode")
            d = replace(d, failure_modes=modes)
        elif op.target is EditTarget.OBJECTIVE:
            objectives = _edit_list(d.objectives, op, lambda o: o.name, Objective, "objective")
            d = replace(d, objectives=objectives)
        elif op.target is EditTarget.STRATEGY_BINDING:
            bindings = _edit_list(
                d.strategy_bindings, op, lambda b: b.template_id.value, StrategyBinding, "strategy binding"
            )
            d = replace(d, strategy_bindings=bindings)
        elif op.target is EditTarget.CONSTRAINT:
            d = replace(d, constraints=_edit_constraints(d.constraints, op))
        else:  # pragma: no cover - enum is closed
            raise PayloadMismatch(f"unknown edit target: {op.target}")
    return d


def _edit_constraints(constraints: tuple[Constraint, ...], op: EditOp) -> tuple[Constraint, ...]:
    # Constraints have no id, so delete/edit address them by list index.
    if op.op is EditAction.ADD:
        if not isinstance(op.value, Constraint):
            raise PayloadMismatch("add constraint requires a Constraint value")
        return constraints + (op.value,)
    try:
        idx = int(op.target_id)
    except ValueError:
        raise PayloadMismatch(f"constraint target_id must be an index, got {op.target_id!r}") from None
    if not (0 <= idx < len(constraints)):
        raise PayloadMismatch(f"constraint index out of range: {idx}")
    if op.op is EditAction.DELETE:
        return constraints[:idx] + constraints[idx + 1 :]
    if not isinstance(op.value, Constraint):
        raise PayloadMismatch("edit constraint requires a Constraint value")
    return constraints[:idx] + (op.value,) + constraints[idx + 1 :]


# --- replay -----------------------------------------------------------------------


def replay_session(initial: TaskDescriptor, entries) -> Session:
    """Rebuild a session from its initial descriptor and persisted log.

    Recorded evaluation payloads are reattached verbatim, so the reconstruction
    never re-runs evals and is fully deterministic.
    """
    s = open_session(initial)
    for entry in entries:
        s = handle_message(
            s,
            entry.message,
            entry.response,
            evaluate=(lambda _ref, _e=entry: _e.evaluation),
        )
    return s
