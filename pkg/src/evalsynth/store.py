"""Append-only persistence: tasks, sessions, examples, labels, results, blobs.

Everything lands in line-delimited JSON records (schema version field ``v``)
under one root directory, plus a content-addressed blob directory for binary
artifacts. Records are never mutated: corrections arrive as new label records
and are folded into derived views at read time. A torn final line (crash
mid-append) is detected when the store opens and moved aside to a
``.quarantined`` file.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import defaultdict
from pathlib import Path

from . import serde
from .descriptor import Status, TaskDescriptor
from .descriptor_md import parse_descriptor, render_descriptor_unchecked
from .errors import (
    BadCoordinates,
    DuplicateId,
    PayloadMismatch,
    StoreError,
    UnknownChannel,
    UnknownExample,
    UnknownTask,
)
from .protocol import LogEntry, Session, open_session, replay_session
from .records import CellEdit, ExampleRecord, LabelRecord, Reference
from .runtime.runner import EvalResult
from .synthesis import ChannelKind, EvalPlan
from .tables import DataTable

SCHEMA_VERSION = 1


def utc_now_iso() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def _content_hash(obj) -> str:
    return hashlib.sha256(_canonical_json(obj).encode("utf-8")).hexdigest()


class Datastore:
    """Filesystem-backed store; one writer lock per task, any number of readers."""

    def __init__(self, root: str | Path, clock=utc_now_iso):
        self.root = Path(root)
        self.clock = clock
        self.root.mkdir(parents=True, exist_ok=True)
        (self.root / "blobs").mkdir(exist_ok=True)
        (self.root / "tasks").mkdir(exist_ok=True)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._example_index: dict[str, str] = {}  # example_id -> task_id
        for task_dir in sorted((self.root / "tasks").iterdir()):
            if task_dir.is_dir():
                self._recover(task_dir)
                for record in self._read_records(task_dir / "examples.jsonl"):
                    self._example_index[record["example_id"]] = record["task_id"]

    # --- low-level records ------------------------------------------------------

    def _recover(self, task_dir: Path) -> None:
        for path in sorted(task_dir.glob("*.jsonl")):
            self._quarantine_torn_tail(path)

    def _quarantine_torn_tail(self, path: Path) -> None:
        raw = path.read_bytes()
        if not raw:
            return
        lines = raw.split(b"\n")
        # a well-formed file ends with a newline, so the final piece is empty
        complete = lines[:-1] if lines[-1] == b"" else lines[:-1]
        tail = lines[-1]
        for line in complete:
            if not line:
                continue
            try:
                json.loads(line)
            except ValueError as exc:
                raise StoreError(f"{path} is corrupt mid-file: {exc}") from exc
        if tail == b"":
            return
        try:
            json.loads(tail)
        except ValueError:
            quarantine = path.with_suffix(path.suffix + ".quarantined")
            with quarantine.open("ab") as fh:
                fh.write(tail + b"\n")
            with path.open("wb") as fh:
                fh.write(b"\n".join(complete) + (b"\n" if complete else b""))
        else:
            # complete JSON but missing trailing newline; normalize
            with path.open("ab") as fh:
                fh.write(b"\n")

    def _append_record(self, path: Path, record: dict) -> None:
        record = {"v": SCHEMA_VERSION, **record}
        line = _canonical_json(record) + "\n"
        with path.open("a", encoding="utf-8") as fh:
            fh.write(line)
            fh.flush()
            os.fsync(fh.fileno())

    def _read_records(self, path: Path) -> list[dict]:
        if not path.is_file():
            return []
        out = []
        with path.open("r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    # --- blobs ----------------------------------------------------------------------

    def put_blob(self, data: bytes) -> str:
        ref = hashlib.sha256(data).hexdigest()
        path = self.root / "blobs" / ref[:2] / ref
        if path.is_file():
            return ref
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(data)
        os.replace(tmp, path)
        return ref

    def get_blob(self, ref: str) -> bytes:
        path = self.root / "blobs" / ref[:2] / ref
        if not path.is_file():
            raise StoreError(f"unknown blob: {ref}")
        return path.read_bytes()

    def has_blob(self, ref: str) -> bool:
        return (self.root / "blobs" / ref[:2] / ref).is_file()

    # --- tasks & sessions --------------------------------------------------------------

    def _task_dir(self, task_id: str, must_exist: bool = True) -> Path:
        path = self.root / "tasks" / task_id
        if must_exist and not path.is_dir():
            raise UnknownTask(task_id)
        return path

    def task_exists(self, task_id: str) -> bool:
        return (self.root / "tasks" / task_id).is_dir()

    def require_task(self, task_id: str) -> None:
        self._task_dir(task_id)

    def task_ids(self) -> list[str]:
        return sorted(p.name for p in (self.root / "tasks").iterdir() if p.is_dir())

    def create_task(self, descriptor: TaskDescriptor) -> str:
        task_id = descriptor.task_id
        with self._locks[task_id]:
            path = self.root / "tasks" / task_id
            doc = render_descriptor_unchecked(descriptor)
            descriptor_file = path / "descriptor.task.md"
            if path.is_dir():
                if descriptor_file.read_text(encoding="utf-8") == doc:
                    return task_id
                raise DuplicateId(f"task {task_id} already exists with a different descriptor")
            path.mkdir(parents=True)
            descriptor_file.write_text(doc, encoding="utf-8")
        return task_id

    def initial_descriptor(self, task_id: str) -> TaskDescriptor:
        path = self._task_dir(task_id) / "descriptor.task.md"
        return parse_descriptor(path.read_text(encoding="utf-8"))

    def load_session(self, task_id: str) -> Session:
        task_dir = self._task_dir(task_id)
        entries = [
            serde.log_entry_from_dict(r)
            for r in self._read_records(task_dir / "session.jsonl")
            if r.get("kind") == "event"
        ]
        return replay_session(self.initial_descriptor(task_id), entries)

    def append_event(self, task_id: str, entry: LogEntry) -> None:
        task_dir = self._task_dir(task_id)
        with self._locks[task_id]:
            self._append_record(
                task_dir / "session.jsonl", {"kind": "event", **serde.log_entry_to_dict(entry)}
            )

    def current_descriptor(self, task_id: str) -> TaskDescriptor:
        return self.load_session(task_id).descriptor

    # --- plans ------------------------------------------------------------------------------

    def save_plan(self, task_id: str, plan: EvalPlan) -> None:
        task_dir = self._task_dir(task_id)
        with self._locks[task_id]:
            self._append_record(task_dir / "plans.jsonl", {"kind": "plan", "plan": serde.plan_to_dict(plan)})

    def plans(self, task_id: str) -> list[EvalPlan]:
        task_dir = self._task_dir(task_id)
        return [serde.plan_from_dict(r["plan"]) for r in self._read_records(task_dir / "plans.jsonl")]

    def latest_plan(self, task_id: str) -> EvalPlan | None:
        all_plans = self.plans(task_id)
        return all_plans[-1] if all_plans else None

    # --- examples ------------------------------------------------------------------------------

    def put_example(self, record: ExampleRecord) -> str:
        if not self.task_exists(record.task_id):
            raise UnknownTask(record.task_id)
        for input_ref in record.inputs:
            if input_ref.blob_ref and not self.has_blob(input_ref.blob_ref):
                raise StoreError(
                    f"example {record.example_id or '<new>'} references missing blob {input_ref.blob_ref}"
                )
        if not record.created_at:
            record = ExampleRecord(
                example_id=record.example_id,
                task_id=record.task_id,
                inputs=record.inputs,
                fm_output=record.fm_output,
                reference=record.reference,
                created_at=self.clock(),
            )
        body = serde.example_to_dict(record)
        if not record.example_id:
            content = {k: v for k, v in body.items() if k not in ("example_id", "created_at")}
            example_id = "ex-" + _content_hash(content)[:12]
            body["example_id"] = example_id
            record = serde.example_from_dict(body)
        example_id = body["example_id"]

        with self._locks[record.task_id]:
            existing_task = self._example_index.get(example_id)
            if existing_task is not None:
                existing = self.get_example(example_id)
                if serde.example_to_dict(existing) == body:
                    return example_id  # idempotent
                raise DuplicateId(f"example {example_id} already exists with different content")
            self._append_record(
                self._task_dir(record.task_id) / "examples.jsonl", {"kind": "example", **body}
            )
            self._example_index[example_id] = record.task_id
        return example_id

    def examples(self, task_id: str) -> list[ExampleRecord]:
        task_dir = self._task_dir(task_id)
        return [
            serde.example_from_dict(r)
            for r in self._read_records(task_dir / "examples.jsonl")
            if r.get("kind") == "example"
        ]

    def get_example(self, example_id: str) -> ExampleRecord:
        task_id = self._example_index.get(example_id)
        if task_id is None:
            raise UnknownExample(example_id)
        for record in self.examples(task_id):
            if record.example_id == example_id:
                return record
        raise UnknownExample(example_id)  # pragma: no cover - index is consistent

    # --- labels -----------------------------------------------------------------------------------

    def append_label(self, label: LabelRecord) -> str:
        task_id = self._example_index.get(label.example_id)
        if task_id is None:
            raise UnknownExample(label.example_id)
        plan = self.latest_plan(task_id)
        channel = plan.label_spec.channel(label.channel_id) if plan is not None else None
        if channel is None:
            raise UnknownChannel(label.channel_id)
        if channel.kind is not label.kind or not label.payload_matches_kind():
            raise PayloadMismatch(
                f"channel {label.channel_id} expects {channel.kind.value} payloads"
            )
        if label.kind is ChannelKind.CELL_EDIT:
            self._check_cell_coordinates(label)
        if label.kind is ChannelKind.BINARY_APPROVAL:
            example = self.get_example(label.example_id)
            n_sources = len(example.passages)
            if not (0 <= label.payload.source_index < max(n_sources, 1)):
                raise BadCoordinates(
                    f"source index {label.payload.source_index} out of range (0..{n_sources - 1})"
                )

        created_at = label.created_at or self.clock()
        with self._locks[task_id]:
            seq = len(self._read_records(self._task_dir(task_id) / "labels.jsonl"))
            # The sequence prefix makes lexicographic label_id order equal
            # append order, so timestamp ties resolve toward the newer label.
            label_id = label.label_id or (
                f"lb-{seq:06d}-"
                + _content_hash(
                    {
                        "example_id": label.example_id,
                        "channel_id": label.channel_id,
                        "payload": serde.label_to_dict(label)["payload"],
                        "created_at": created_at,
                    }
                )[:8]
            )
            stored = LabelRecord(
                label_id=label_id,
                example_id=label.example_id,
                channel_id=label.channel_id,
                kind=label.kind,
                payload=label.payload,
                labeler=label.labeler,
                created_at=created_at,
            )
            self._append_record(
                self._task_dir(task_id) / "labels.jsonl",
                {"kind": "label", "label": serde.label_to_dict(stored)},
            )
        return label_id

    def _check_cell_coordinates(self, label: LabelRecord) -> None:
        example = self.get_example(label.example_id)
        table = example.fm_output.table
        edit: CellEdit = label.payload
        if table is None:
            raise BadCoordinates("example has no output table to edit")
        if not (0 <= edit.row < table.n_rows):
            raise BadCoordinates(f"row {edit.row} out of range (table has {table.n_rows} rows)")
        if table.column_index(edit.column) is None:
            raise BadCoordinates(f"unknown column {edit.column!r}")

    def labels(self, example_id: str) -> list[LabelRecord]:
        task_id = self._example_index.get(example_id)
        if task_id is None:
            raise UnknownExample(example_id)
        return [l for l in self.task_labels(task_id) if l.example_id == example_id]

    def task_labels(self, task_id: str) -> list[LabelRecord]:
        task_dir = self._task_dir(task_id)
        return [
            serde.label_from_dict(r["label"])
            for r in self._read_records(task_dir / "labels.jsonl")
            if r.get("kind") == "label"
        ]

    # --- derived views -------------------------------------------------------------------------------

    def corrected_table(self, example_id: str) -> DataTable | None:
        """Output table with cell edits folded in, latest label winning per
        (row, column); timestamp ties break by label_id."""
        example = self.get_example(example_id)
        table = example.fm_output.table
        if table is None:
            return None
        edits = [l for l in self.labels(example_id) if l.kind is ChannelKind.CELL_EDIT]
        if not edits:
            return table
        winners: dict[tuple[int, str], LabelRecord] = {}
        for label in edits:
            key = (label.payload.row, label.payload.column)
            cur = winners.get(key)
            if cur is None or (label.created_at, label.label_id) > (cur.created_at, cur.label_id):
                winners[key] = label
        rows = [list(r) for r in table.rows]
        for (row, column), label in winners.items():
            col_idx = table.column_index(column)
            rows[row][col_idx] = label.payload.new_value
        return DataTable(columns=table.columns, rows=tuple(tuple(r) for r in rows), chart_meta=table.chart_meta)

    def approved_sources(self, example_id: str) -> tuple[int, ...]:
        approvals = [l for l in self.labels(example_id) if l.kind is ChannelKind.BINARY_APPROVAL]
        winners: dict[int, LabelRecord] = {}
        for label in approvals:
            idx = label.payload.source_index
            cur = winners.get(idx)
            if cur is None or (label.created_at, label.label_id) > (cur.created_at, cur.label_id):
                winners[idx] = label
        return tuple(sorted(idx for idx, label in winners.items() if label.payload.approved))

    # --- results ----------------------------------------------------------------------------------------

    def append_result(self, task_id: str, result: EvalResult) -> None:
        task_dir = self._task_dir(task_id)
        with self._locks[task_id]:
            self._append_record(
                task_dir / "results.jsonl", {"kind": "result", **serde.result_to_dict(result)}
            )

    def results(
        self, task_id: str, plan_version: int | None = None, verdict: str | None = None
    ) -> list[EvalResult]:
        task_dir = self._task_dir(task_id)
        out = [
            serde.result_from_dict(r)
            for r in self._read_records(task_dir / "results.jsonl")
            if r.get("kind") == "result"
        ]
        if plan_version is not None:
            out = [r for r in out if r.plan_version == plan_version]
        if verdict is not None:
            out = [r for r in out if r.verdict.value == verdict]
        return sorted(out, key=lambda r: (r.example_id, r.plan_version))

    # --- export / import -----------------------------------------------------------------------------------

    def export_dataset(self, task_id: str, dest: str | Path) -> Path:
        """Portable archive: a records file plus the blobs it references.

        Each example's reference is replaced by the latest human-corrected
        view (cell edits applied; approvals folded), so the archive doubles as
        a labeled dataset."""
        task_dir = self._task_dir(task_id)
        dest = Path(dest)
        dest.mkdir(parents=True, exist_ok=True)
        (dest / "blobs").mkdir(exist_ok=True)

        descriptor = self.initial_descriptor(task_id)
        lines = [
            _canonical_json(
                {
                    "v": SCHEMA_VERSION,
                    "kind": "dataset_header",
                    "task_id": task_id,
                    "descriptor_md": render_descriptor_unchecked(descriptor),
                }
            )
        ]
        for example in self.examples(task_id):
            corrected = self.corrected_table(example.example_id)
            approved = self.approved_sources(example.example_id)
            reference = example.reference or Reference()
            has_edits = corrected is not None and corrected != example.fm_output.table
            folded = Reference(
                table=corrected if has_edits else reference.table,
                answer=reference.answer,
                approved_sources=approved or reference.approved_sources,
            )
            body = serde.example_to_dict(
                ExampleRecord(
                    example_id=example.example_id,
                    task_id=example.task_id,
                    inputs=example.inputs,
                    fm_output=example.fm_output,
                    reference=None if folded.empty else folded,
                    created_at=example.created_at,
                )
            )
            lines.append(_canonical_json({"v": SCHEMA_VERSION, "kind": "example", **body}))
            for ref in {i.blob_ref for i in example.inputs if i.blob_ref}:
                blob_path = dest / "blobs" / ref[:2] / ref
                if not blob_path.is_file():
                    blob_path.parent.mkdir(parents=True, exist_ok=True)
                    blob_path.write_bytes(self.get_blob(ref))
        (dest / "records.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")
        return dest

    def import_dataset(self, archive: str | Path) -> str:
        """Load an exported archive; creates the task if it does not exist."""
        archive = Path(archive)
        records = self._read_records(archive / "records.jsonl")
        if not records or records[0].get("kind") != "dataset_header":
            raise StoreError(f"{archive} is not a dataset archive (missing header)")
        header = records[0]
        task_id = header["task_id"]
        if not self.task_exists(task_id):
            self.create_task(parse_descriptor(header["descriptor_md"]))
        blob_dir = archive / "blobs"
        if blob_dir.is_dir():
            for path in sorted(blob_dir.rglob("*")):
                if path.is_file():
                    self.put_blob(path.read_bytes())
        for record in records[1:]:
            if record.get("kind") == "example":
                self.put_example(serde.example_from_dict(record))
        return task_id


def load_archive_examples(archive: str | Path) -> list[ExampleRecord]:
    """Read examples straight out of an archive without importing it."""
    archive = Path(archive)
    path = archive / "records.jsonl"
    if not path.is_file():
        raise StoreError(f"no records file in {archive}")
    out = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get("kind") == "example":
                out.append(serde.example_from_dict(record))
    return out
