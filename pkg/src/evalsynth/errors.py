"""Exception hierarchy shared by every subsystem.

Each error carries a stable ``code`` string so the HTTP layer and the CLI can
map failures without matching on class names or message text.
"""

from __future__ import annotations


class EvalSynthError(Exception):
    """Base class for all domain errors."""

    code = "error"


# --- descriptor / meta-model ------------------------------------------------

class MissingDescription(EvalSynthError):
    code = "missing_description"


class UnsupportedModality(EvalSynthError):
    code = "unsupported_modality"


class MissingSection(EvalSynthError):
    code = "missing_section"

    def __init__(self, name: str):
        super().__init__(f"required section missing: {name}")
        self.name = name


class MalformedField(EvalSynthError):
    code = "malformed_field"

    def __init__(self, path: str, reason: str):
        super().__init__(f"{path}: {reason}")
        self.path = path
        self.reason = reason


class InvalidDescriptor(EvalSynthError):
    code = "invalid_descriptor"

    def __init__(self, issues):
        super().__init__(
            "descriptor has hard validation issues: "
            + "; ".join(f"{i.path}: {i.message}" for i in issues)
        )
        self.issues = list(issues)


# --- protocol ----------------------------------------------------------------

class ProtocolError(EvalSynthError):
    code = "protocol_error"


class IllegalMessage(ProtocolError):
    code = "illegal_message"

    def __init__(self, kind, stage):
        super().__init__(f"message {kind.value} not allowed in stage {stage.value}")
        self.kind = kind
        self.stage = stage


class SeqMismatch(ProtocolError):
    code = "seq_mismatch"

    def __init__(self, expected: int, got: int):
        super().__init__(f"expected seq {expected}, got {got}")
        self.expected = expected
        self.got = got


class SessionMismatch(ProtocolError):
    code = "session_mismatch"


class AmendWithoutOps(ProtocolError):
    code = "amend_without_ops"


class PayloadMismatch(ProtocolError):
    code = "payload_mismatch"


class PlanNotApproved(ProtocolError):
    code = "plan_not_approved"


class StalePlan(ProtocolError):
    code = "stale_plan"


# --- synthesiser -------------------------------------------------------------

class DescriptorNotValidated(EvalSynthError):
    code = "descriptor_not_validated"


class EmptyBindings(EvalSynthError):
    code = "empty_bindings"


class DanglingFailureMode(EvalSynthError):
    code = "dangling_failure_mode"

    def __init__(self, failure_mode_id: str):
        super().__init__(f"binding references unknown failure mode: {failure_mode_id}")
        self.failure_mode_id = failure_mode_id


# --- strategy runtime ----------------------------------------------------------

class EmptyTable(EvalSynthError):
    code = "empty_table"


class MissingChartMeta(EvalSynthError):
    code = "missing_chart_meta"


class NonNumericAxis(EvalSynthError):
    code = "non_numeric_axis"


class SchemaMismatch(EvalSynthError):
    code = "schema_mismatch"


class InvalidTolerance(EvalSynthError):
    code = "invalid_tolerance"


class SpanOutOfRange(EvalSynthError):
    code = "span_out_of_range"


class UnparseableJudgeOutput(EvalSynthError):
    code = "unparseable_judge_output"


class ModalityMismatch(EvalSynthError):
    code = "modality_mismatch"


# --- fm client -----------------------------------------------------------------

class FMUnavailable(EvalSynthError):
    code = "fm_unavailable"


class FixtureMiss(FMUnavailable):
    code = "fixture_miss"

    def __init__(self, request_key: str):
        super().__init__(f"no recorded fixture for request {request_key}")
        self.request_key = request_key


class ProviderError(FMUnavailable):
    code = "provider_error"


class ProviderTimeout(ProviderError):
    code = "provider_timeout"


# --- datastore -------------------------------------------------------------------

class StoreError(EvalSynthError):
    code = "store_error"


class UnknownTask(StoreError):
    code = "unknown_task"

    def __init__(self, task_id: str):
        super().__init__(f"unknown task: {task_id}")
        self.task_id = task_id


class DuplicateId(StoreError):
    code = "duplicate_id"


class UnknownExample(StoreError):
    code = "unknown_example"

    def __init__(self, example_id: str):
        super().__init__(f"unknown example: {example_id}")
        self.example_id = example_id


class UnknownChannel(StoreError):
    code = "unknown_channel"

    def __init__(self, channel_id: str):
        super().__init__(f"unknown label channel: {channel_id}")
        self.channel_id = channel_id


class BadCoordinates(StoreError):
    code = "bad_coordinates"


# --- service ------------------------------------------------------------------

class BindFailure(EvalSynthError):
    code = "bind_failure"


class StoreUnavailable(EvalSynthError):
    code = "store_unavailable"


# Errors that the HTTP layer reports as a conflict between the request and the
# current session/plan state.
CONFLICT_ERRORS = (IllegalMessage, SeqMismatch, SessionMismatch, StalePlan, PlanNotApproved)

# Errors caused by ids the caller supplied that do not resolve.
NOT_FOUND_ERRORS = (UnknownTask, UnknownExample, UnknownChannel)
