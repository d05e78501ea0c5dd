"""Compile a validated descriptor into an executable eval plan.

Strategy selection is a fixed, documented rule table (R1..R5 below) so that
reviewers can predict and override it during the Map stage. The compiled plan
bundles resolved eval instances, the review-UI layout and the label channels,
and carries a content hash used for compare-and-approve.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field

from .descriptor import (
    SEVERITY_RANK,
    TEMPLATE_CATEGORY,
    Grounding,
    Modality,
    ParamValue,
    ReferenceKind,
    Status,
    StrategyBinding,
    StrategyCategory,
    StrategyTemplate,
    TaskDescriptor,
    ValueKind,
    status_rank,
)
from .descriptor_md import format_attrs, render_descriptor_unchecked
from .errors import DanglingFailureMode, DescriptorNotValidated, EmptyBindings

# Default runtime parameters, overridable per binding during Map.
DEFAULT_X_REL_TOL = 0.02
DEFAULT_Y_REL_TOL = 0.02
DEFAULT_NGRAM = 5


class ComponentKind(str, enum.Enum):
    SIDE_BY_SIDE_IMAGE = "side_by_side_image"
    EDITABLE_TABLE = "editable_table"
    HIGHLIGHTED_DOCUMENT = "highlighted_document"
    METRIC_CARDS = "metric_cards"
    APPROVAL_BUTTONS = "approval_buttons"
    SUMMARY_PANEL = "summary_panel"


# Fixed component ordering: visual inspection first, interactive elements
# second, aggregate metrics last.
_COMPONENT_ORDER = (
    ComponentKind.SIDE_BY_SIDE_IMAGE,
    ComponentKind.HIGHLIGHTED_DOCUMENT,
    ComponentKind.EDITABLE_TABLE,
    ComponentKind.APPROVAL_BUTTONS,
    ComponentKind.METRIC_CARDS,
    ComponentKind.SUMMARY_PANEL,
)


class Layout(str, enum.Enum):
    SINGLE_COLUMN = "single_column"
    TWO_COLUMN = "two_column"


class ChannelKind(str, enum.Enum):
    CELL_EDIT = "cell_edit"
    BINARY_APPROVAL = "binary_approval"
    FREE_TEXT = "free_text"


@dataclass(frozen=True)
class UIComponent:
    kind: ComponentKind
    source: str


@dataclass(frozen=True)
class UISpec:
    components: tuple[UIComponent, ...]
    layout: Layout

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))


@dataclass(frozen=True)
class LabelChannel:
    channel_id: str
    kind: ChannelKind
    target: str


@dataclass(frozen=True)
class LabelSpec:
    channels: tuple[LabelChannel, ...]

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))

    def channel(self, channel_id: str) -> LabelChannel | None:
        for ch in self.channels:
            if ch.channel_id == channel_id:
                return ch
        return None


@dataclass(frozen=True)
class EvalInstance:
    eval_id: str
    template_id: StrategyTemplate
    category: StrategyCategory
    failure_mode_id: str
    params: tuple[tuple[str, ParamValue], ...] = ()
    requires_reference: bool = False

    def param(self, key: str, default=None):
        for k, v in self.params:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class EvalPlan:
    plan_id: str
    version: int
    descriptor_snapshot: TaskDescriptor
    evals: tuple[EvalInstance, ...]
    ui_spec: UISpec
    label_spec: LabelSpec
    plan_hash: str = ""

    def __post_init__(self):
        object.__setattr__(self, "evals", tuple(self.evals))
        if not self.plan_hash:
            object.__setattr__(self, "plan_hash", compute_plan_hash(self))

    def eval_instance(self, eval_id: str) -> EvalInstance | None:
        for inst in self.evals:
            if inst.eval_id == eval_id:
                return inst
        return None


# Failure modes each template most plausibly guards against; used to attach
# bindings to the most severe matching mode.
_AFFINITY: dict[StrategyTemplate, tuple[str, ...]] = {
    StrategyTemplate.CHART_REGENERATION: ("incorrect_value", "spurious_value", "missing_value"),
    StrategyTemplate.TABLE_DIFF: ("incorrect_value", "spurious_value", "missing_value"),
    StrategyTemplate.SPAN_HIGHLIGHTING: ("unsupported_claim", "missing_citation"),
    StrategyTemplate.QA_METRICS: ("unsupported_claim", "irrelevant_answer"),
    StrategyTemplate.RUBRIC_JUDGE: ("irrelevant_answer", "off_spec_output"),
    StrategyTemplate.CONSTRAINT_CHECKS: ("off_spec_output",),
    StrategyTemplate.BASIC_STATS: (),
}


def _attach_failure_mode(d: TaskDescriptor, template: StrategyTemplate) -> str:
    """Most severe matching failure mode; general binding when none declared."""
    affinity = _AFFINITY[template]
    candidates = [m for m in d.failure_modes if m.id in affinity]
    if not candidates:
        candidates = list(d.failure_modes)
    if not candidates:
        return ""
    best = max(
        range(len(candidates)),
        key=lambda i: (SEVERITY_RANK[candidates[i].severity], -i),
    )
    return candidates[best].id


def _has_numeric_schema(d: TaskDescriptor) -> bool:
    schema = d.io_spec.output_schema
    return bool(schema) and any(c.value_kind is ValueKind.NUMERIC for c in schema)


def _has_labeled_dataset(d: TaskDescriptor) -> bool:
    return any(r.kind is ReferenceKind.LABELED_DATASET for r in d.reference_sources)


def _has_subjective_objective(d: TaskDescriptor) -> bool:
    # A subjective criterion names a quality without a measurable target on a
    # free-text output; only a judge can score it.
    return (
        any(o.threshold is None for o in d.objectives)
        and not d.io_spec.output_schema
        and d.io_spec.output_modality is Modality.TEXT
    )


def propose_strategies(d: TaskDescriptor) -> list[StrategyBinding]:
    """Rule table (cumulative; multiple rules may fire):

    R1  numeric output schema + image input  -> chart_regeneration,
        plus table_diff when a labeled dataset exists to diff against
    R2  grounding on a source document       -> span_highlighting + qa_metrics
    R3  declared constraints                 -> constraint_checks
    R4  subjective objective on free text    -> rubric_judge
    R5  nothing else fired                   -> basic_stats
    """
    if status_rank(d.status) < status_rank(Status.ERRORS_VALIDATED):
        raise DescriptorNotValidated(
            f"failure modes must be validated before strategies are proposed (status={d.status.value})"
        )

    templates: list[StrategyTemplate] = []
    if _has_numeric_schema(d) and Modality.IMAGE in d.io_spec.input_modalities:
        templates.append(StrategyTemplate.CHART_REGENERATION)
        if _has_labeled_dataset(d):
            templates.append(StrategyTemplate.TABLE_DIFF)
    if d.grounding is Grounding.SOURCE_DOCUMENT:
        templates.append(StrategyTemplate.SPAN_HIGHLIGHTING)
        templates.append(StrategyTemplate.QA_METRICS)
    if d.constraints:
        templates.append(StrategyTemplate.CONSTRAINT_CHECKS)
    if _has_subjective_objective(d):
        templates.append(StrategyTemplate.RUBRIC_JUDGE)
    if not templates:
        templates.append(StrategyTemplate.BASIC_STATS)

    return [
        StrategyBinding(
            failure_mode_id=_attach_failure_mode(d, t),
            category=TEMPLATE_CATEGORY[t],
            template_id=t,
        )
        for t in templates
    ]


def _objective_threshold(d: TaskDescriptor) -> float | None:
    for o in d.objectives:
        if o.threshold is not None:
            return o.threshold
    return None


_SCORED_TEMPLATES = (
    StrategyTemplate.TABLE_DIFF,
    StrategyTemplate.QA_METRICS,
    StrategyTemplate.RUBRIC_JUDGE,
)


def _resolve_instance(d: TaskDescriptor, binding: StrategyBinding, eval_id: str) -> EvalInstance:
    params: dict[str, ParamValue] = dict(binding.params)
    template = binding.template_id
    if template is StrategyTemplate.TABLE_DIFF:
        params.setdefault("x_rel", DEFAULT_X_REL_TOL)
        params.setdefault("y_rel", DEFAULT_Y_REL_TOL)
    if template in (StrategyTemplate.SPAN_HIGHLIGHTING, StrategyTemplate.QA_METRICS):
        params.setdefault("ngram", DEFAULT_NGRAM)
    if template in _SCORED_TEMPLATES:
        threshold = _objective_threshold(d)
        if threshold is not None:
            params.setdefault("threshold", threshold)
    return EvalInstance(
        eval_id=eval_id,
        template_id=template,
        category=binding.category,
        failure_mode_id=binding.failure_mode_id,
        params=tuple(sorted(params.items())),
        requires_reference=template is StrategyTemplate.TABLE_DIFF,
    )


def synthesize_label_spec(d: TaskDescriptor) -> LabelSpec:
    if status_rank(d.status) < status_rank(Status.ERRORS_VALIDATED):
        raise DescriptorNotValidated(
            f"descriptor not validated (status={d.status.value})"
        )
    channels: list[LabelChannel] = []
    if _has_numeric_schema(d):
        channels.append(LabelChannel("cell_edits", ChannelKind.CELL_EDIT, "output_table"))
    if d.grounding is Grounding.SOURCE_DOCUMENT:
        channels.append(LabelChannel("source_approvals", ChannelKind.BINARY_APPROVAL, "sources"))
    # Free-text feedback is always capturable.
    channels.append(LabelChannel("notes", ChannelKind.FREE_TEXT, "example"))
    return LabelSpec(channels=tuple(channels))


_EVAL_COMPONENT = {
    StrategyTemplate.CHART_REGENERATION: ComponentKind.SIDE_BY_SIDE_IMAGE,
    StrategyTemplate.SPAN_HIGHLIGHTING: ComponentKind.HIGHLIGHTED_DOCUMENT,
    StrategyTemplate.QA_METRICS: ComponentKind.METRIC_CARDS,
    StrategyTemplate.RUBRIC_JUDGE: ComponentKind.METRIC_CARDS,
    StrategyTemplate.TABLE_DIFF: ComponentKind.SUMMARY_PANEL,
    StrategyTemplate.BASIC_STATS: ComponentKind.SUMMARY_PANEL,
    StrategyTemplate.CONSTRAINT_CHECKS: ComponentKind.SUMMARY_PANEL,
}

_CHANNEL_COMPONENT = {
    ChannelKind.CELL_EDIT: ComponentKind.EDITABLE_TABLE,
    ChannelKind.BINARY_APPROVAL: ComponentKind.APPROVAL_BUTTONS,
    # free_text is rendered as standing chrome by the review UI, not as a
    # spec-driven component.
}

_VISUAL = {ComponentKind.SIDE_BY_SIDE_IMAGE, ComponentKind.HIGHLIGHTED_DOCUMENT}


def synthesize_ui_spec(evals: tuple[EvalInstance, ...], label_spec: LabelSpec) -> UISpec:
    components: list[UIComponent] = []
    seen: set[tuple[ComponentKind, str]] = set()
    for inst in evals:
        kind = _EVAL_COMPONENT[inst.template_id]
        key = (kind, inst.eval_id)
        if key not in seen:
            seen.add(key)
            components.append(UIComponent(kind=kind, source=inst.eval_id))
    for ch in label_spec.channels:
        kind = _CHANNEL_COMPONENT.get(ch.kind)
        if kind is None:
            continue
        key = (kind, ch.channel_id)
        if key not in seen:
            seen.add(key)
            components.append(UIComponent(kind=kind, source=ch.channel_id))

    ordered = sorted(components, key=lambda c: _COMPONENT_ORDER.index(c.kind))
    layout = Layout.TWO_COLUMN if any(c.kind in _VISUAL for c in ordered) else Layout.SINGLE_COLUMN
    return UISpec(components=tuple(ordered), layout=layout)


def synthesize_plan(
    d: TaskDescriptor,
    bindings: list[StrategyBinding] | tuple[StrategyBinding, ...],
    version: int = 1,
    plan_id: str = "",
) -> EvalPlan:
    if not bindings:
        raise EmptyBindings("cannot synthesize a plan without strategy bindings")
    if status_rank(d.status) < status_rank(Status.STRATEGIES_VALIDATED):
        raise DescriptorNotValidated(
            f"strategies must be validated before a plan is synthesised (status={d.status.value})"
        )
    known = d.failure_mode_ids()
    for b in bindings:
        if b.failure_mode_id and b.failure_mode_id not in known:
            raise DanglingFailureMode(b.failure_mode_id)

    evals: list[EvalInstance] = []
    used_ids: set[str] = set()
    for b in bindings:
        eval_id = b.template_id.value
        n = 2
        while eval_id in used_ids:
            eval_id = f"{b.template_id.value}-{n}"
            n += 1
        used_ids.add(eval_id)
        evals.append(_resolve_instance(d, b, eval_id))

    label_spec = synthesize_label_spec(d)
    ui_spec = synthesize_ui_spec(tuple(evals), label_spec)
    return EvalPlan(
        plan_id=plan_id or f"plan-{d.task_id}",
        version=version,
        descriptor_snapshot=d,
        evals=tuple(evals),
        ui_spec=ui_spec,
        label_spec=label_spec,
    )


def resolved_bindings(d: TaskDescriptor) -> tuple[StrategyBinding, ...]:
    """The descriptor's own bindings, or freshly proposed strategies when the
    reviewer has not validated any yet."""
    return d.strategy_bindings or tuple(propose_strategies(d))


def plan_for_descriptor(d: TaskDescriptor, version: int = 1) -> EvalPlan:
    """The plan approving now would install. Approving a plan inherently
    validates its strategy set, so the snapshot status is promoted to
    strategies_validated; rendering is thus identical before and after the
    explicit ProposeStrategies step."""
    bindings = resolved_bindings(d)
    snapshot = d.with_status(Status.STRATEGIES_VALIDATED)
    return synthesize_plan(snapshot, bindings, version=version)


# --- rendering & hashing ----------------------------------------------------------


def render_plan(plan: EvalPlan, include_hash: bool = True) -> str:
    lines = ["# eval plan"]
    lines.append(f"- id: {plan.plan_id}")
    lines.append(f"- version: {plan.version}")
    lines.append(f"- task: {plan.descriptor_snapshot.task_id}")
    if include_hash:
        lines.append(f"- hash: {plan.plan_hash}")

    lines.append("")
    lines.append("## evals")
    for inst in plan.evals:
        pairs: list[tuple[str, ParamValue]] = [
            ("template", inst.template_id.value),
            ("category", inst.category.value),
        ]
        if inst.failure_mode_id:
            pairs.append(("failure_mode", inst.failure_mode_id))
        pairs.extend(inst.params)
        if inst.requires_reference:
            pairs.append(("requires_reference", True))
        lines.append(f"- {inst.eval_id}: {format_attrs(pairs)}")

    lines.append("")
    lines.append("## ui")
    lines.append(f"- layout: {plan.ui_spec.layout.value}")
    for comp in plan.ui_spec.components:
        lines.append(f"- component: {format_attrs([('kind', comp.kind.value), ('source', comp.source)])}")

    lines.append("")
    lines.append("## labels")
    for ch in plan.label_spec.channels:
        lines.append(f"- {ch.channel_id}: {format_attrs([('kind', ch.kind.value), ('target', ch.target)])}")

    lines.append("")
    lines.append("## descriptor")
    descriptor_doc = render_descriptor_unchecked(plan.descriptor_snapshot)
    for line in descriptor_doc.splitlines():
        lines.append(f"    {line}" if line else "")
    return "\n".join(lines) + "\n"


def compute_plan_hash(plan: EvalPlan) -> str:
    return hashlib.sha256(render_plan(plan, include_hash=False).encode("utf-8")).hexdigest()


def verify_plan(plan: EvalPlan) -> bool:
    """Structural integrity: hash matches content; every UI source resolves."""
    if plan.plan_hash != compute_plan_hash(plan):
        return False
    eval_ids = {e.eval_id for e in plan.evals}
    channel_ids = {c.channel_id for c in plan.label_spec.channels}
    return all(c.source in eval_ids | channel_ids for c in plan.ui_spec.components)
