"""Draft descriptor inference from a description plus sample input."""

import pytest

from evalsynth.descriptor import Grounding, Modality, ReferenceKind, Status, TaskType, hard_issues
from evalsynth.drafting import SampleInput, infer_draft_descriptor
from evalsynth.errors import FixtureMiss, MissingDescription, UnsupportedModality
from evalsynth.fm import ChatRequest, FMClient, FMConfig


@pytest.fixture
def stub():
    return FMClient(FMConfig(mode="stub"))


CHART_DESCRIPTION = "Extract the data from this chart into a table"
QA_DESCRIPTION = "Answer questions about this document"


def test_chart_description_infers_extraction_task(stub):
    d = infer_draft_descriptor(CHART_DESCRIPTION, SampleInput(modality="image", data=b"png"), stub)
    assert d.status is Status.DRAFT
    assert d.task_type is TaskType.STRUCTURED_EXTRACTION
    assert d.io_spec.input_modalities == frozenset({Modality.IMAGE})
    assert d.io_spec.output_modality is Modality.TABLE
    assert d.grounding is Grounding.NONE
    assert {m.id for m in d.failure_modes} >= {"incorrect_value", "spurious_value", "missing_value"}


def test_qa_description_infers_grounded_task(stub):
    d = infer_draft_descriptor(QA_DESCRIPTION, SampleInput(modality="document", data="a doc"), stub)
    assert d.task_type is TaskType.GROUNDED_QA
    assert d.grounding is Grounding.SOURCE_DOCUMENT
    assert any(r.kind is ReferenceKind.SOURCE_DOCUMENT for r in d.reference_sources)
    assert Modality.TEXT in d.io_spec.input_modalities  # the question rides along


def test_empty_description_rejected(stub):
    with pytest.raises(MissingDescription):
        infer_draft_descriptor("", SampleInput(modality="text"), stub)
    with pytest.raises(MissingDescription):
        infer_draft_descriptor("   ", SampleInput(modality="text"), stub)


def test_unsupported_modality_rejected(stub):
    with pytest.raises(UnsupportedModality):
        infer_draft_descriptor("do a thing", SampleInput(modality="hologram"), stub)


def test_stub_mode_is_deterministic(stub):
    sample = SampleInput(modality="image", data=b"bytes")
    a = infer_draft_descriptor(CHART_DESCRIPTION, sample, stub)
    b = infer_draft_descriptor(CHART_DESCRIPTION, sample, stub)
    assert a == b


def test_different_inputs_get_different_ids(stub):
    a = infer_draft_descriptor(CHART_DESCRIPTION, SampleInput(modality="image", data=b"one"), stub)
    b = infer_draft_descriptor(CHART_DESCRIPTION, SampleInput(modality="image", data=b"two"), stub)
    assert a.task_id != b.task_id


def test_draft_always_passes_validation(stub):
    cases = [
        (CHART_DESCRIPTION, SampleInput(modality="image")),
        (QA_DESCRIPTION, SampleInput(modality="document", data="doc")),
        ("Classify the sentiment of each review", SampleInput(modality="text", data="nice")),
        ("Translate this table to English", SampleInput(modality="table", data="a,b")),
        ("Write a summary of the notes", SampleInput(modality="text")),
        ("Do something unusual", SampleInput(modality="text")),
    ]
    for description, sample in cases:
        draft = infer_draft_descriptor(description, sample, stub)
        assert hard_issues(draft) == [], description


def test_replay_mode_merges_fm_failure_modes(tmp_path):
    """A recorded FM refinement can add failure modes but never drops ours."""
    from evalsynth.drafting import _ENRICH_SYSTEM
    from evalsynth.descriptor_md import render_descriptor_unchecked

    stub = FMClient(FMConfig(mode="stub"))
    base = infer_draft_descriptor(CHART_DESCRIPTION, SampleInput(modality="image", data=b"x"), stub)
    suggestion = (
        "## task type\n- type: structured_extraction\n\n"
        "## io\n- input.modalities: image\n- output.modality: table\n\n"
        "## potential errors\n"
        "- incorrect_value: severity=high origin=seeded\n"
        "- axis_swap: severity=medium origin=inferred name=\"Axis swap\"\n"
    )
    req = ChatRequest(
        system=_ENRICH_SYSTEM,
        user=(
            "Review this draft descriptor and return an improved full document. "
            "Add any failure modes or objectives a reviewer would want.\n\n"
            f"Task description: {CHART_DESCRIPTION}\n\n{render_descriptor_unchecked(base)}"
        ),
    )
    (tmp_path / f"{req.request_key}.fixture.txt").write_text(
        f"key: {req.request_key}\n---\n{suggestion}", encoding="utf-8"
    )
    replay = FMClient(FMConfig(mode="replay", fixtures_dir=tmp_path))
    enriched = infer_draft_descriptor(
        CHART_DESCRIPTION, SampleInput(modality="image", data=b"x"), replay
    )
    assert "axis_swap" in enriched.failure_mode_ids()
    assert enriched.failure_mode_ids() >= base.failure_mode_ids()


def test_replay_mode_without_fixture_raises(tmp_path):
    replay = FMClient(FMConfig(mode="replay", fixtures_dir=tmp_path))
    with pytest.raises(FixtureMiss):
        infer_draft_descriptor(CHART_DESCRIPTION, SampleInput(modality="image"), replay)


from hypothesis import given, settings
from hypothesis import strategies as st


@settings(max_examples=100, deadline=None)
@given(
    description=st.text(min_size=1, max_size=120).filter(lambda s: s.strip()),
    modality=st.sampled_from(["text", "image", "document", "table"]),
)
def test_draft_valid_for_arbitrary_descriptions(description, modality):
    draft = infer_draft_descriptor(
        description, SampleInput(modality=modality, data=b"payload"), FMClient(FMConfig(mode="stub"))
    )
    assert draft.status is Status.DRAFT
    assert hard_issues(draft) == []
