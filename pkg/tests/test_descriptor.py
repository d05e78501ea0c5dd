"""Descriptor model, validation rules, and the markdown round trip."""

from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evalsynth.descriptor import (
    AnswerMultiplicity,
    ColumnSpec,
    Constraint,
    ConstraintKind,
    FailureMode,
    FailureModeOrigin,
    Grounding,
    IOSpec,
    IssueSeverity,
    Modality,
    Objective,
    ReasoningMode,
    ReasoningSpec,
    ReferenceKind,
    ReferenceSource,
    Severity,
    Status,
    StrategyTemplate,
    TaskDescriptor,
    TaskType,
    ValueKind,
    hard_issues,
    make_binding,
    seeded_failure_modes,
    validate_descriptor,
)
from evalsynth.descriptor_md import parse_descriptor, render_descriptor
from evalsynth.errors import InvalidDescriptor, MalformedField, MissingSection


def test_valid_demo_descriptors_have_no_issues(chart_descriptor, qa_descriptor):
    assert validate_descriptor(chart_descriptor) == []
    assert validate_descriptor(qa_descriptor) == []


def test_range_min_above_max_is_hard_issue(invalid_range_descriptor):
    issues = validate_descriptor(invalid_range_descriptor)
    assert len(issues) == 1
    assert issues[0].severity is IssueSeverity.HARD
    assert issues[0].path.startswith("constraints[")


def test_grounded_task_without_source_document_is_hard_issue(qa_descriptor):
    stripped = replace(qa_descriptor, reference_sources=())
    issues = validate_descriptor(stripped)
    assert any(i.path == "reference_sources" and i.severity is IssueSeverity.HARD for i in issues)


def test_binding_referencing_unknown_failure_mode_is_hard_issue(chart_descriptor):
    bad = make_binding(StrategyTemplate.CHART_REGENERATION, failure_mode_id="nope")
    issues = validate_descriptor(replace(chart_descriptor, strategy_bindings=(bad,)))
    assert any("unknown failure mode" in i.message for i in issues)


def test_empty_task_id_is_hard_issue(chart_descriptor):
    issues = validate_descriptor(replace(chart_descriptor, task_id=""))
    assert any(i.path == "task_id" for i in issues)


def test_seeded_taxonomy_by_task_type():
    extraction = {m.id for m in seeded_failure_modes(TaskType.STRUCTURED_EXTRACTION)}
    assert extraction == {"incorrect_value", "spurious_value", "missing_value"}
    qa = {m.id for m in seeded_failure_modes(TaskType.GROUNDED_QA)}
    assert qa == {"unsupported_claim", "irrelevant_answer", "missing_citation"}
    assert len(seeded_failure_modes(TaskType.GENERATION)) >= 1


# --- markdown format ----------------------------------------------------------


def test_render_orders_sections_canonically(chart_descriptor):
    doc = render_descriptor(chart_descriptor)
    headers = [line for line in doc.splitlines() if line.startswith("## ")]
    assert headers[0] == "## task type"
    assert headers[1] == "## io"


def test_render_parse_round_trip_demo(chart_descriptor, qa_descriptor):
    for d in (chart_descriptor, qa_descriptor):
        assert parse_descriptor(render_descriptor(d)) == d


def test_render_is_deterministic(chart_descriptor):
    assert render_descriptor(chart_descriptor) == render_descriptor(chart_descriptor)


def test_render_rejects_invalid_descriptor(invalid_range_descriptor):
    with pytest.raises(InvalidDescriptor):
        render_descriptor(invalid_range_descriptor)


def test_parse_minimal_document_defaults():
    doc = "## task type\n- type: generation\n\n## io\n- input.modalities: text\n- output.modality: text\n"
    d = parse_descriptor(doc)
    assert d.status is Status.DRAFT
    assert d.constraints == ()
    assert d.objectives == ()
    assert d.failure_modes == ()
    assert d.task_type is TaskType.GENERATION


def test_parse_missing_io_section():
    with pytest.raises(MissingSection) as exc:
        parse_descriptor("## task type\n- type: other\n")
    assert exc.value.name == "io"


def test_parse_preserves_unknown_sections(chart_descriptor):
    extra = replace(chart_descriptor, extras=(("notes", "free-form reviewer notes\nsecond line"),))
    doc = render_descriptor(extra)
    parsed = parse_descriptor(doc)
    assert parsed.extras == (("notes", "free-form reviewer notes\nsecond line"),)
    assert parsed == extra


def test_parse_rejects_unknown_field_in_io():
    doc = "## task type\n- type: other\n\n## io\n- input.modality: text\n"
    with pytest.raises(MalformedField):
        parse_descriptor(doc)


def test_parse_rejects_bad_enum_value():
    doc = "## task type\n- type: wizardry\n\n## io\n- input.modalities: text\n"
    with pytest.raises(MalformedField):
        parse_descriptor(doc)


# --- property: parse . render == identity --------------------------------------

_slug = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789_-", min_size=1, max_size=12)
_line = st.text(
    alphabet=st.characters(blacklist_characters="\n\r", blacklist_categories=("Cs",)),
    max_size=40,
).map(lambda s: s.strip())
_attr_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), max_size=30
)
_label = _slug


def _columns():
    names = st.text(
        alphabet=st.characters(blacklist_characters="|\n\r", blacklist_categories=("Cs",)),
        min_size=1,
        max_size=10,
    )
    return st.lists(
        st.builds(ColumnSpec, name=names, value_kind=st.sampled_from(ValueKind)),
        min_size=1,
        max_size=4,
    ).map(tuple)


def _io_specs():
    return st.builds(
        IOSpec,
        input_modalities=st.frozensets(st.sampled_from(Modality), min_size=1, max_size=3),
        input_format=_line,
        output_modality=st.sampled_from(Modality),
        output_format=_line,
        output_schema=st.one_of(st.none(), _columns()),
    )


def _param_values():
    return st.one_of(
        _attr_text,
        st.integers(min_value=-10**6, max_value=10**6),
        st.floats(allow_nan=False, allow_infinity=False, width=64),
        st.booleans(),
    )


def _params():
    return st.dictionaries(_slug, _param_values(), max_size=3).map(
        lambda d: tuple(sorted(d.items()))
    )


def _constraints():
    range_params = st.tuples(
        st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
        st.floats(min_value=0, max_value=1e6, allow_nan=False),
    ).map(lambda lo_w: (("max", lo_w[0] + lo_w[1]), ("min", lo_w[0])))
    return st.one_of(
        st.builds(
            Constraint,
            kind=st.just(ConstraintKind.RANGE),
            target=_slug,
            params=range_params,
        ),
        st.builds(
            Constraint,
            kind=st.just(ConstraintKind.ENUMERATION),
            target=_slug,
            params=st.just((("values", "a|b"),)),
        ),
        st.builds(
            Constraint,
            kind=st.just(ConstraintKind.UNIT),
            target=_slug,
            params=st.just((("unit", "mm"),)),
        ),
        st.builds(
            Constraint,
            kind=st.just(ConstraintKind.MONOTONIC),
            target=_slug,
            params=st.sampled_from([(("direction", "increasing"),), (("direction", "decreasing"),)]),
        ),
    )


def _failure_modes():
    return st.lists(
        st.builds(
            FailureMode,
            id=_slug,
            name=_attr_text,
            description=_attr_text,
            severity=st.sampled_from(Severity),
            origin=st.sampled_from(FailureModeOrigin),
        ),
        max_size=4,
        unique_by=lambda m: m.id,
    ).map(tuple)


def _descriptors():
    base = st.builds(
        TaskDescriptor,
        task_id=_slug,
        title=_line,
        description=_line,
        task_type=st.sampled_from(TaskType),
        io_spec=_io_specs(),
        grounding=st.sampled_from([Grounding.NONE, Grounding.EXTERNAL_REFERENCE]),
        constraints=st.lists(_constraints(), max_size=3).map(tuple),
        reasoning=st.builds(
            ReasoningSpec,
            mode=st.sampled_from(ReasoningMode),
            answer_multiplicity=st.sampled_from(AnswerMultiplicity),
        ),
        objectives=st.lists(
            st.builds(
                Objective,
                name=_slug,
                description=_attr_text,
                threshold=st.one_of(st.none(), st.floats(min_value=0, max_value=1, allow_nan=False)),
            ),
            max_size=3,
            unique_by=lambda o: o.name,
        ).map(tuple),
        reference_sources=st.lists(
            st.builds(
                ReferenceSource,
                kind=st.sampled_from(ReferenceKind),
                locator=_attr_text,
            ),
            max_size=2,
        ).map(tuple),
        failure_modes=_failure_modes(),
        status=st.sampled_from(Status),
        extras=st.dictionaries(
            st.sampled_from(["notes", "history", "examples considered"]),
            st.text(
                alphabet=st.characters(blacklist_characters="\r", blacklist_categories=("Cs",)),
                max_size=60,
            ).filter(lambda s: not any(ln.startswith("## ") or ln == "##" for ln in s.split("\n"))),
            max_size=2,
        ).map(lambda d: tuple(sorted((k, v.strip("\n")) for k, v in d.items()))),
    )

    def attach_bindings(d: TaskDescriptor, data):
        if not d.failure_modes:
            return d
        bindings = tuple(
            make_binding(template, failure_mode_id=d.failure_modes[0].id)
            for template in data
        )
        return replace(d, strategy_bindings=bindings)

    return base.flatmap(
        lambda d: st.lists(
            st.sampled_from(StrategyTemplate), max_size=2, unique=True
        ).map(lambda ts: attach_bindings(d, ts))
    )


@settings(max_examples=200, deadline=None)
@given(_descriptors())
def test_round_trip_property(d: TaskDescriptor):
    if hard_issues(d):
        return
    doc = render_descriptor(d)
    assert parse_descriptor(doc) == d
    assert render_descriptor(parse_descriptor(doc)) == doc
