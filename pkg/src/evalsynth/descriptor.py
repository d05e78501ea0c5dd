"""Task descriptor: the task-agnostic model every other subsystem consumes.

A descriptor captures what an FM task is (io, type, grounding, constraints,
reasoning, objectives, reference sources), which failure modes reviewers worry
about, and which eval strategies are bound to them. Instances are plain
dataclasses; persistence and wire formats live in :mod:`evalsynth.descriptor_md`.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace


class TaskType(str, enum.Enum):
    STRUCTURED_EXTRACTION = "structured_extraction"
    GROUNDED_QA = "grounded_qa"
    GENERATION = "generation"
    CLASSIFICATION = "classification"
    TRANSFORMATION = "transformation"
    OTHER = "other"


class Modality(str, enum.Enum):
    TEXT = "text"
    IMAGE = "image"
    DOCUMENT = "document"
    TABLE = "table"


# Canonical ordering used whenever a set of modalities is rendered.
MODALITY_ORDER = (Modality.TEXT, Modality.IMAGE, Modality.DOCUMENT, Modality.TABLE)


class Grounding(str, enum.Enum):
    NONE = "none"
    SOURCE_DOCUMENT = "source_document"
    EXTERNAL_REFERENCE = "external_reference"


class ValueKind(str, enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TEXT = "text"


class ConstraintKind(str, enum.Enum):
    SCHEMA = "schema"
    UNIT = "unit"
    RANGE = "range"
    ENUMERATION = "enumeration"
    MONOTONIC = "monotonic"


class ReasoningMode(str, enum.Enum):
    DIRECT = "direct"
    MULTI_STEP = "multi_step"


class AnswerMultiplicity(str, enum.Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


class Severity(str, enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


SEVERITY_RANK = {Severity.LOW: 0, Severity.MEDIUM: 1, Severity.HIGH: 2}


class FailureModeOrigin(str, enum.Enum):
    SEEDED = "seeded"
    INFERRED = "inferred"
    HUMAN_ADDED = "human_added"


class ReferenceKind(str, enum.Enum):
    LABELED_DATASET = "labeled_dataset"
    SOURCE_DOCUMENT = "source_document"
    NONE = "none"


class Status(str, enum.Enum):
    DRAFT = "draft"
    ERRORS_VALIDATED = "errors_validated"
    STRATEGIES_VALIDATED = "strategies_validated"
    PLAN_APPROVED = "plan_approved"
    FINALISED = "finalised"


STATUS_ORDER = (
    Status.DRAFT,
    Status.ERRORS_VALIDATED,
    Status.STRATEGIES_VALIDATED,
    Status.PLAN_APPROVED,
    Status.FINALISED,
)


def status_rank(s: Status) -> int:
    return STATUS_ORDER.index(s)


def advance_status(current: Status, target: Status) -> Status:
    """Lifecycle is monotone: moving to an earlier status is a no-op."""
    return target if status_rank(target) > status_rank(current) else current


class StrategyCategory(str, enum.Enum):
    SUMMARIZE = "summarize"
    VISUALIZE = "visualize"
    JUDGE = "judge"
    LOGIC_PROGRAM = "logic_program"


class StrategyTemplate(str, enum.Enum):
    CHART_REGENERATION = "chart_regeneration"
    TABLE_DIFF = "table_diff"
    SPAN_HIGHLIGHTING = "span_highlighting"
    QA_METRICS = "qa_metrics"
    RUBRIC_JUDGE = "rubric_judge"
    CONSTRAINT_CHECKS = "constraint_checks"
    BASIC_STATS = "basic_stats"


# Each template belongs to exactly one category. table_diff aggregates an
# error report, so it counts as summarize; the visual redraw is the visualize
# strategy.
TEMPLATE_CATEGORY = {
    StrategyTemplate.CHART_REGENERATION: StrategyCategory.VISUALIZE,
    StrategyTemplate.SPAN_HIGHLIGHTING: StrategyCategory.VISUALIZE,
    StrategyTemplate.QA_METRICS: StrategyCategory.JUDGE,
    StrategyTemplate.RUBRIC_JUDGE: StrategyCategory.JUDGE,
    StrategyTemplate.CONSTRAINT_CHECKS: StrategyCategory.LOGIC_PROGRAM,
    StrategyTemplate.TABLE_DIFF: StrategyCategory.SUMMARIZE,
    StrategyTemplate.BASIC_STATS: StrategyCategory.SUMMARIZE,
}

ParamValue = str | int | float | bool


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    value_kind: ValueKind


@dataclass(frozen=True)
class IOSpec:
    input_modalities: frozenset[Modality]
    input_format: str = ""
    output_modality: Modality = Modality.TEXT
    output_format: str = ""
    output_schema: tuple[ColumnSpec, ...] | None = None

    def __post_init__(self):
        if not isinstance(self.input_modalities, frozenset):
            object.__setattr__(self, "input_modalities", frozenset(self.input_modalities))
        if self.output_schema is not None:
            schema = tuple(self.output_schema)
            object.__setattr__(self, "output_schema", schema if schema else None)


def _sorted_params(params) -> tuple[tuple[str, ParamValue], ...]:
    return tuple(sorted(params, key=lambda kv: kv[0]))


@dataclass(frozen=True)
class Constraint:
    kind: ConstraintKind
    target: str
    params: tuple[tuple[str, ParamValue], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", _sorted_params(self.params))

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


def make_constraint(kind: ConstraintKind, target: str, **params: ParamValue) -> Constraint:
    return Constraint(kind=kind, target=target, params=tuple(params.items()))


@dataclass(frozen=True)
class ReasoningSpec:
    mode: ReasoningMode = ReasoningMode.DIRECT
    answer_multiplicity: AnswerMultiplicity = AnswerMultiplicity.SINGLE


@dataclass(frozen=True)
class Objective:
    name: str
    description: str = ""
    threshold: float | None = None


@dataclass(frozen=True)
class ReferenceSource:
    kind: ReferenceKind
    locator: str = ""


@dataclass(frozen=True)
class FailureMode:
    id: str
    name: str = ""
    description: str = ""
    severity: Severity = Severity.MEDIUM
    origin: FailureModeOrigin = FailureModeOrigin.INFERRED


@dataclass(frozen=True)
class StrategyBinding:
    failure_mode_id: str
    category: StrategyCategory
    template_id: StrategyTemplate
    params: tuple[tuple[str, ParamValue], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "params", _sorted_params(self.params))

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


def make_binding(
    template: StrategyTemplate, failure_mode_id: str = "", **params: ParamValue
) -> StrategyBinding:
    return StrategyBinding(
        failure_mode_id=failure_mode_id,
        category=TEMPLATE_CATEGORY[template],
        template_id=template,
        params=tuple(params.items()),
    )


@dataclass(frozen=True)
class TaskDescriptor:
    task_id: str
    title: str = ""
    description: str = ""
    task_type: TaskType = TaskType.OTHER
    io_spec: IOSpec = field(default_factory=lambda: IOSpec(frozenset({Modality.TEXT})))
    grounding: Grounding = Grounding.NONE
    constraints: tuple[Constraint, ...] = ()
    reasoning: ReasoningSpec = field(default_factory=ReasoningSpec)
    objectives: tuple[Objective, ...] = ()
    reference_sources: tuple[ReferenceSource, ...] = ()
    failure_modes: tuple[FailureMode, ...] = ()
    strategy_bindings: tuple[StrategyBinding, ...] = ()
    status: Status = Status.DRAFT
    extras: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "objectives", tuple(self.objectives))
        object.__setattr__(self, "reference_sources", tuple(self.reference_sources))
        object.__setattr__(self, "failure_modes", tuple(self.failure_modes))
        object.__setattr__(self, "strategy_bindings", tuple(self.strategy_bindings))
        # Extra sections are an unordered extension map; keep them sorted so
        # equal descriptors render byte-identically.
        object.__setattr__(self, "extras", tuple(sorted(self.extras)))

    def failure_mode_ids(self) -> set[str]:
        return {m.id for m in self.failure_modes}

    def with_status(self, target: Status) -> "TaskDescriptor":
        return replace(self, status=advance_status(self.status, target))


# Seeded failure-mode taxonomies per task type. Structured extraction carries
# the three review classes a human flags on an extracted table; grounded QA
# carries the grounding failures reviewers check sources for.
_EXTRACTION_SEEDS = (
    FailureMode(
        id="incorrect_value",
        name="Incorrect value",
        description="An extracted value differs from the one shown in the source.",
        severity=Severity.HIGH,
        origin=FailureModeOrigin.SEEDED,
    ),
    FailureMode(
        id="spurious_value",
        name="Spurious value",
        description="The output contains a value that does not exist in the source.",
        severity=Severity.MEDIUM,
        origin=FailureModeOrigin.SEEDED,
    ),
    FailureMode(
        id="missing_value",
        name="Missing value",
        description="A value present in the source is absent from the output.",
        severity=Severity.MEDIUM,
        origin=FailureModeOrigin.SEEDED,
    ),
)

_QA_SEEDS = (
    FailureMode(
        id="unsupported_claim",
        name="Unsupported claim",
        description="The answer asserts something the source document does not support.",
        severity=Severity.HIGH,
        origin=FailureModeOrigin.SEEDED,
    ),
    FailureMode(
        id="irrelevant_answer",
        name="Irrelevant answer",
        description="The answer does not address the question that was asked.",
        severity=Severity.MEDIUM,
        origin=FailureModeOrigin.SEEDED,
    ),
    FailureMode(
        id="missing_citation",
        name="Missing citation",
        description="A supported claim is not linked to the passage that supports it.",
        severity=Severity.LOW,
        origin=FailureModeOrigin.SEEDED,
    ),
)

_GENERIC_SEEDS = (
    FailureMode(
        id="off_spec_output",
        name="Off-spec output",
        description="The output does not meet the stated format or content requirements.",
        severity=Severity.MEDIUM,
        origin=FailureModeOrigin.SEEDED,
    ),
)


def seeded_failure_modes(task_type: TaskType) -> tuple[FailureMode, ...]:
    if task_type is TaskType.STRUCTURED_EXTRACTION:
        return _EXTRACTION_SEEDS
    if task_type is TaskType.GROUNDED_QA:
        return _QA_SEEDS
    return _GENERIC_SEEDS


class IssueSeverity(str, enum.Enum):
    HARD = "hard"
    SOFT = "soft"


@dataclass(frozen=True)
class ValidationIssue:
    path: str
    severity: IssueSeverity
    message: str


_CANONICAL_SECTION_NAMES = frozenset(
    {"task type", "io", "grounding", "constraints", "objectives", "potential errors", "proposed strategies"}
)


def _serialization_checks(d: TaskDescriptor) -> list[ValidationIssue]:
    """Rules that keep a descriptor unambiguous in its markdown form."""
    hard = IssueSeverity.HARD
    issues = []
    for path, value in (("title", d.title), ("description", d.description),
                        ("io_spec.input_format", d.io_spec.input_format),
                        ("io_spec.output_format", d.io_spec.output_format)):
        if "\n" in value or "\r" in value:
            issues.append(ValidationIssue(path, hard, "must be a single line"))
        elif value != value.strip():
            issues.append(ValidationIssue(path, hard, "must not have leading or trailing whitespace"))

    labels = [(f"objectives[{i}].name", o.name) for i, o in enumerate(d.objectives)]
    labels += [(f"failure_modes[{i}].id", m.id) for i, m in enumerate(d.failure_modes)]
    for path, label in labels:
        if ":" in label or "\n" in label or "\r" in label:
            issues.append(ValidationIssue(path, hard, "must not contain ':' or newlines"))

    if d.io_spec.output_schema:
        for i, col in enumerate(d.io_spec.output_schema):
            if "|" in col.name or "\n" in col.name or "\r" in col.name:
                issues.append(
                    ValidationIssue(f"io_spec.output_schema[{i}]", hard, "column name must not contain '|' or newlines")
                )

    param_sets = [(f"constraints[{i}].params", c.params) for i, c in enumerate(d.constraints)]
    param_sets += [(f"strategy_bindings[{i}].params", b.params) for i, b in enumerate(d.strategy_bindings)]
    for path, params in param_sets:
        keys = [k for k, _ in params]
        if len(keys) != len(set(keys)):
            issues.append(ValidationIssue(path, hard, "duplicate parameter keys"))
        for k, v in params:
            if not k or " " in k or "=" in k or '"' in k or "\n" in k:
                issues.append(ValidationIssue(path, hard, f"bad parameter key {k!r}"))
            if isinstance(v, float) and not math.isfinite(v):
                issues.append(ValidationIssue(path, hard, "parameter values must be finite"))

    for i, (name, body) in enumerate(d.extras):
        path = f"extras[{i}]"
        if not name or name != name.strip() or "\n" in name or "\r" in name:
            issues.append(ValidationIssue(path, hard, "extra section name must be a trimmed non-empty line"))
        elif name.lower() in _CANONICAL_SECTION_NAMES:
            issues.append(ValidationIssue(path, hard, f"extra section name collides with canonical section {name!r}"))
        if any(line.startswith("## ") or line == "##" for line in body.split("\n")):
            issues.append(ValidationIssue(path, hard, "extra section body must not contain section headers"))
    return issues


def validate_descriptor(d: TaskDescriptor) -> list[ValidationIssue]:
    """Check type invariants and cross-field rules; empty result means valid.

    Hard issues make the descriptor unusable (rendering and session opening
    refuse it); soft issues are advisory.
    """
    hard = IssueSeverity.HARD
    issues: list[ValidationIssue] = []

    if not d.task_id:
        issues.append(ValidationIssue("task_id", hard, "task_id must be non-empty"))

    if not d.io_spec.input_modalities:
        issues.append(ValidationIssue("io_spec.input_modalities", hard, "at least one input modality required"))

    if d.io_spec.output_schema is not None:
        for i, col in enumerate(d.io_spec.output_schema):
            if not col.name:
                issues.append(ValidationIssue(f"io_spec.output_schema[{i}]", hard, "column name must be non-empty"))

    for i, c in enumerate(d.constraints):
        path = f"constraints[{i}]"
        if c.kind is ConstraintKind.RANGE:
            lo, hi = c.param("min"), c.param("max")
            if not isinstance(lo, (int, float)) or not isinstance(hi, (int, float)):
                issues.append(ValidationIssue(path, hard, "range constraint needs numeric min and max"))
            elif lo > hi:  # rule V1
                issues.append(ValidationIssue(path, hard, f"range min {lo} exceeds max {hi}"))
        elif c.kind is ConstraintKind.ENUMERATION:
            values = c.param("values", "")
            if not str(values):
                issues.append(ValidationIssue(path, hard, "enumeration constraint needs at least one value"))
        elif c.kind is ConstraintKind.UNIT:
            if not str(c.param("unit", "")):
                issues.append(ValidationIssue(path, hard, "unit constraint needs a unit string"))
        elif c.kind is ConstraintKind.MONOTONIC:
            direction = c.param("direction", "increasing")
            if direction not in ("increasing", "decreasing"):
                issues.append(ValidationIssue(path, hard, f"unknown monotonic direction: {direction}"))

    for i, o in enumerate(d.objectives):
        if not o.name:
            issues.append(ValidationIssue(f"objectives[{i}]", hard, "objective name must be non-empty"))
        if o.threshold is not None and not (0.0 <= o.threshold <= 1.0):
            # NaN fails both comparisons, so it lands here too.
            issues.append(ValidationIssue(f"objectives[{i}].threshold", hard, "threshold must be within [0, 1]"))

    seen_modes: set[str] = set()
    for i, m in enumerate(d.failure_modes):
        if not m.id:
            issues.append(ValidationIssue(f"failure_modes[{i}]", hard, "failure mode id must be non-empty"))
        elif m.id in seen_modes:
            issues.append(ValidationIssue(f"failure_modes[{i}]", hard, f"duplicate failure mode id: {m.id}"))
        seen_modes.add(m.id)

    # Rule V2: bindings must reference declared failure modes. An empty id
    # marks a general binding, which is allowed.
    for i, b in enumerate(d.strategy_bindings):
        if b.failure_mode_id and b.failure_mode_id not in seen_modes:
            issues.append(
                ValidationIssue(
                    f"strategy_bindings[{i}]", hard,
                    f"binding references unknown failure mode: {b.failure_mode_id}",
                )
            )
        if TEMPLATE_CATEGORY[b.template_id] is not b.category:
            issues.append(
                ValidationIssue(
                    f"strategy_bindings[{i}]", hard,
                    f"template {b.template_id.value} does not belong to category {b.category.value}",
                )
            )

    # Rule V3: grounded tasks must name at least one source document.
    if d.grounding is Grounding.SOURCE_DOCUMENT:
        if not any(r.kind is ReferenceKind.SOURCE_DOCUMENT for r in d.reference_sources):
            issues.append(
                ValidationIssue(
                    "reference_sources", hard,
                    "grounding=source_document requires a source_document reference source",
                )
            )

    issues.extend(_serialization_checks(d))
    return issues


def hard_issues(d: TaskDescriptor) -> list[ValidationIssue]:
    return [i for i in validate_descriptor(d) if i.severity is IssueSeverity.HARD]
