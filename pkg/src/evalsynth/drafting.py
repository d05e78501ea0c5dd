"""Draft a task descriptor from a plain-language description plus one sample input.

Drafting is heuristic-first: keyword and modality rules fill every field the
downstream pipeline needs, deterministically. When the FM client is in a live
mode the draft is additionally sent to the model for enrichment, and any
well-formed additions (extra failure modes, objectives, a better title) are
merged in; malformed model output is ignored rather than trusted.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, replace

from .descriptor import (
    ColumnSpec,
    FailureMode,
    FailureModeOrigin,
    Grounding,
    IOSpec,
    Modality,
    ReferenceKind,
    ReferenceSource,
    Status,
    TaskDescriptor,
    TaskType,
    ValueKind,
    seeded_failure_modes,
)
from .descriptor_md import parse_descriptor, render_descriptor_unchecked
from .errors import EvalSynthError, MissingDescription, UnsupportedModality
from .fm import ChatRequest, FMClient

_DEFAULT_FORMATS = {
    Modality.TEXT: "text/plain",
    Modality.IMAGE: "image/png",
    Modality.DOCUMENT: "text/plain",
    Modality.TABLE: "text/csv",
}


@dataclass(frozen=True)
class SampleInput:
    modality: str
    data: bytes | str = b""
    media_type: str = ""


def _words(text: str) -> set[str]:
    return set(re.findall(r"[a-z0-9]+", text.casefold()))


def _infer_task_type(description: str, modality: Modality) -> TaskType:
    words = _words(description)
    if words & {"question", "questions", "answer", "answers", "qa"}:
        return TaskType.GROUNDED_QA
    if words & {"extract", "extraction", "digitize", "parse"}:
        return TaskType.STRUCTURED_EXTRACTION
    if words & {"classify", "classification", "categorize", "categorise", "label"}:
        return TaskType.CLASSIFICATION
    if words & {"translate", "convert", "transform", "rewrite", "reformat"}:
        return TaskType.TRANSFORMATION
    if words & {"write", "generate", "summarize", "summarise", "compose", "draft"}:
        return TaskType.GENERATION
    if modality is Modality.IMAGE and words & {"table", "chart", "plot", "graph", "data"}:
        return TaskType.STRUCTURED_EXTRACTION
    return TaskType.OTHER


def _slugify(text: str, max_words: int = 4) -> str:
    words = re.findall(r"[a-z0-9]+", text.casefold())[:max_words]
    return "-".join(words) if words else "task"


def _make_title(description: str) -> str:
    normalized = " ".join(description.split())
    first = re.split(r"[.!?]", normalized)[0].strip()
    if len(first) > 60:
        first = first[:60].rsplit(" ", 1)[0].strip()
    return first


def infer_draft_descriptor(
    description: str, sample: SampleInput, fm: FMClient
) -> TaskDescriptor:
    """Build a draft descriptor for review. Deterministic whenever ``fm`` is in
    stub or replay mode."""
    if not description or not description.strip():
        raise MissingDescription("task description must be non-empty")
    try:
        modality = Modality(sample.modality)
    except ValueError:
        raise UnsupportedModality(f"unsupported sample modality: {sample.modality!r}") from None

    task_type = _infer_task_type(description, modality)
    words = _words(description)

    input_modalities = {modality}
    if task_type is TaskType.GROUNDED_QA:
        # Question text rides along with whatever document modality the sample has.
        input_modalities.add(Modality.TEXT)
        if modality is Modality.TEXT:
            input_modalities.add(Modality.DOCUMENT)

    output_modality = Modality.TEXT
    output_schema = None
    if task_type is TaskType.STRUCTURED_EXTRACTION:
        output_modality = Modality.TABLE
        if words & {"chart", "plot", "graph"}:
            output_schema = (ColumnSpec("x", ValueKind.NUMERIC), ColumnSpec("y", ValueKind.NUMERIC))

    grounding = Grounding.NONE
    reference_sources: tuple[ReferenceSource, ...] = ()
    if Modality.DOCUMENT in input_modalities:
        grounding = Grounding.SOURCE_DOCUMENT
        reference_sources = (ReferenceSource(kind=ReferenceKind.SOURCE_DOCUMENT, locator="sample"),)

    data = sample.data.encode("utf-8") if isinstance(sample.data, str) else sample.data
    digest = hashlib.sha256(description.encode("utf-8") + b"\x00" + data).hexdigest()[:8]

    draft = TaskDescriptor(
        task_id=f"{_slugify(description)}-{digest}",
        title=_make_title(description),
        description=" ".join(description.split()),
        task_type=task_type,
        io_spec=IOSpec(
            input_modalities=frozenset(input_modalities),
            input_format=sample.media_type or _DEFAULT_FORMATS[modality],
            output_modality=output_modality,
            output_format=_DEFAULT_FORMATS[output_modality],
            output_schema=output_schema,
        ),
        grounding=grounding,
        reference_sources=reference_sources,
        failure_modes=seeded_failure_modes(task_type),
        status=Status.DRAFT,
    )

    if fm.mode != "stub":
        draft = _enrich_with_fm(draft, description, fm)
    return draft


_ENRICH_SYSTEM = (
    "You maintain task descriptors for an evaluation service. "
    "Reply with a complete descriptor document using '## ' sections: "
    "task type, io, constraints, objectives, potential errors, proposed strategies. "
    "Keep every bullet in '- key: value' form."
)


def _enrich_with_fm(draft: TaskDescriptor, description: str, fm: FMClient) -> TaskDescriptor:
    req = ChatRequest(
        system=_ENRICH_SYSTEM,
        user=(
            "Review this draft descriptor and return an improved full document. "
            "Add any failure modes or objectives a reviewer would want.\n\n"
            f"Task description: {description}\n\n{render_descriptor_unchecked(draft)}"
        ),
    )
    response = fm.complete(req)
    try:
        suggestion = parse_descriptor(response.text)
    except EvalSynthError:
        return draft

    known = draft.failure_mode_ids()
    added_modes = tuple(
        replace(m, origin=FailureModeOrigin.INFERRED)
        for m in suggestion.failure_modes
        if m.id and m.id not in known
    )
    known_objectives = {o.name for o in draft.objectives}
    added_objectives = tuple(
        o for o in suggestion.objectives if o.name and o.name not in known_objectives
    )
    title = draft.title or suggestion.title
    return replace(
        draft,
        title=title,
        failure_modes=draft.failure_modes + added_modes,
        objectives=draft.objectives + added_objectives,
    )
