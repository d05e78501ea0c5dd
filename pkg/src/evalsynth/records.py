"""Stored record shapes: examples under evaluation and captured labels."""

from __future__ import annotations

from dataclasses import dataclass

from .descriptor import Modality
from .synthesis import ChannelKind
from .tables import DataTable


@dataclass(frozen=True)
class InputRef:
    modality: Modality
    text: str = ""  # inline content for text/document inputs
    blob_ref: str = ""  # content-addressed ref for binary inputs
    media_type: str = ""


@dataclass(frozen=True)
class FmOutput:
    table: DataTable | None = None
    text: str = ""


@dataclass(frozen=True)
class Reference:
    table: DataTable | None = None
    answer: str = ""
    approved_sources: tuple[int, ...] = ()

    @property
    def empty(self) -> bool:
        return self.table is None and not self.answer and not self.approved_sources


@dataclass(frozen=True)
class ExampleRecord:
    example_id: str
    task_id: str
    inputs: tuple[InputRef, ...]
    fm_output: FmOutput
    reference: Reference | None = None
    created_at: str = ""

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))

    @property
    def passages(self) -> list[str]:
        return [i.text for i in self.inputs if i.modality is Modality.DOCUMENT and i.text]

    @property
    def question(self) -> str:
        for i in self.inputs:
            if i.modality is Modality.TEXT and i.text:
                return i.text
        return ""

    @property
    def input_modalities(self) -> frozenset[Modality]:
        return frozenset(i.modality for i in self.inputs)

    @property
    def reference_table(self) -> DataTable | None:
        return self.reference.table if self.reference else None


@dataclass(frozen=True)
class CellEdit:
    row: int
    column: str
    old_value: float | str
    new_value: float | str


@dataclass(frozen=True)
class BinaryApproval:
    source_index: int
    approved: bool


@dataclass(frozen=True)
class FreeTextNote:
    text: str


LabelPayload = CellEdit | BinaryApproval | FreeTextNote

_PAYLOAD_KINDS: dict[ChannelKind, type] = {
    ChannelKind.CELL_EDIT: CellEdit,
    ChannelKind.BINARY_APPROVAL: BinaryApproval,
    ChannelKind.FREE_TEXT: FreeTextNote,
}


@dataclass(frozen=True)
class LabelRecord:
    label_id: str
    example_id: str
    channel_id: str
    kind: ChannelKind
    payload: LabelPayload
    labeler: str = ""
    created_at: str = ""

    def payload_matches_kind(self) -> bool:
        return isinstance(self.payload, _PAYLOAD_KINDS[self.kind])
