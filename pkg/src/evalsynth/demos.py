"""Built-in demo tasks: chart data extraction and document QA.

These provide ready-made descriptors plus synthetic example generators with
known pass/fail composition, used by the test suite and for trying the CLI
and API end to end without any FM access.
"""

from __future__ import annotations

import random
from dataclasses import replace

from .descriptor import (
    ColumnSpec,
    Grounding,
    IOSpec,
    Modality,
    Objective,
    ReferenceKind,
    ReferenceSource,
    TaskDescriptor,
    TaskType,
    ValueKind,
    seeded_failure_modes,
)
from .records import ExampleRecord, FmOutput, InputRef, Reference
from .runtime.charts import regenerate_chart
from .tables import ChartKind, DataTable, xy_table

FIXED_TIMESTAMP = "2025-01-01T00:00:00Z"


def chart_demo_descriptor() -> TaskDescriptor:
    return TaskDescriptor(
        task_id="chart-demo",
        title="Chart data extraction",
        description="Extract the data points from a chart image into a table.",
        task_type=TaskType.STRUCTURED_EXTRACTION,
        io_spec=IOSpec(
            input_modalities=frozenset({Modality.IMAGE}),
            input_format="image/svg+xml",
            output_modality=Modality.TABLE,
            output_format="text/csv",
            output_schema=(
                ColumnSpec("x", ValueKind.NUMERIC),
                ColumnSpec("y", ValueKind.NUMERIC),
            ),
        ),
        grounding=Grounding.NONE,
        objectives=(
            Objective(
                name="extraction_accuracy",
                description="Extracted values match the chart within tolerance.",
                threshold=0.9,
            ),
        ),
        reference_sources=(
            ReferenceSource(kind=ReferenceKind.LABELED_DATASET, locator="demo/chart"),
        ),
        failure_modes=seeded_failure_modes(TaskType.STRUCTURED_EXTRACTION),
    )


def qa_demo_descriptor() -> TaskDescriptor:
    return TaskDescriptor(
        task_id="doc-qa-demo",
        title="Document question answering",
        description="Answer questions about the provided document, citing supporting passages.",
        task_type=TaskType.GROUNDED_QA,
        io_spec=IOSpec(
            input_modalities=frozenset({Modality.DOCUMENT, Modality.TEXT}),
            input_format="text/plain",
            output_modality=Modality.TEXT,
            output_format="text/plain",
        ),
        grounding=Grounding.SOURCE_DOCUMENT,
        objectives=(
            Objective(
                name="grounded_answers",
                description="Answers are relevant and supported by the document.",
                threshold=0.6,
            ),
        ),
        reference_sources=(
            ReferenceSource(kind=ReferenceKind.SOURCE_DOCUMENT, locator="demo/docs"),
        ),
        failure_modes=seeded_failure_modes(TaskType.GROUNDED_QA),
    )


# --- chart examples -----------------------------------------------------------------


def random_chart_table(rng: random.Random, n_points: int | None = None, kind: ChartKind = ChartKind.LINE) -> DataTable:
    n = n_points or rng.randint(5, 9)
    xs = [float(i) for i in range(n)]
    ys = [round(rng.uniform(5.0, 95.0), 3) for _ in range(n)]
    return xy_table(
        list(zip(xs, ys)),
        chart_kind=kind,
        x_range=(0.0, float(n - 1)),
        y_range=(0.0, 100.0),
        title="series",
    )


def _perturb_one_row(table: DataTable, rng: random.Random) -> DataTable:
    rows = [list(r) for r in table.rows]
    idx = rng.randrange(len(rows))
    span = table.chart_meta.y_axis.span
    rows[idx][1] = float(rows[idx][1]) + 0.1 * span  # five times the 2% tolerance
    return DataTable(columns=table.columns, rows=tuple(tuple(r) for r in rows), chart_meta=table.chart_meta)


def build_chart_examples(
    n: int = 30, failing: int = 2, seed: int = 7, task_id: str = "chart-demo"
) -> list[tuple[ExampleRecord, bytes]]:
    """Synthetic chart extraction examples with exactly ``failing`` examples
    whose extraction drifts beyond tolerance. Returns (record, original chart
    image) pairs; the image blob still needs to be stored by the caller."""
    rng = random.Random(seed)
    out = []
    failing_indices = set(range(failing))
    for i in range(n):
        reference = random_chart_table(rng)
        extracted = _perturb_one_row(reference, rng) if i in failing_indices else reference
        original_svg = regenerate_chart(reference)
        record = ExampleRecord(
            example_id=f"chart-{i:03d}",
            task_id=task_id,
            inputs=(InputRef(modality=Modality.IMAGE, media_type="image/svg+xml"),),
            fm_output=FmOutput(table=extracted),
            reference=Reference(table=reference),
            created_at=FIXED_TIMESTAMP,
        )
        out.append((record, original_svg))
    return out


# --- document QA examples --------------------------------------------------------------


_MATERIALS = (
    ("copper", "1085"), ("iron", "1538"), ("aluminium", "660"), ("titanium", "1668"),
    ("nickel", "1455"), ("silver", "962"), ("gold", "1064"), ("tungsten", "3422"),
    ("zinc", "420"), ("lead", "327"), ("platinum", "1768"), ("cobalt", "1495"),
)

_FILLER_SENTENCES = (
    "samples were prepared under an inert argon atmosphere before analysis",
    "thermal measurements were repeated three times for every specimen",
    "the instrument was calibrated against a certified standard each morning",
    "results were averaged across runs and rounded to whole degrees",
)


def build_qa_examples(
    n: int = 30, failing: int = 3, seed: int = 11, task_id: str = "doc-qa-demo"
) -> list[ExampleRecord]:
    """Synthetic document QA triples. Passing answers are verbatim sentences
    from the cited passage; failing answers are unsupported by any passage."""
    rng = random.Random(seed)
    out = []
    failing_indices = set(range(failing))
    for i in range(n):
        picks = rng.sample(_MATERIALS, 3)
        cited = rng.randrange(3)
        passages = []
        for j, (material, melting) in enumerate(picks):
            fact = f"the melting point of {material} is {melting} degrees celsius"
            filler = _FILLER_SENTENCES[(i + j) % len(_FILLER_SENTENCES)]
            passages.append(f"{filler}. {fact}." if j % 2 else f"{fact}. {filler}.")
        material, melting = picks[cited]
        question = f"what is the melting point of {material}"
        if i in failing_indices:
            answer = "the boiling point of water is one hundred degrees at sea level"
        else:
            answer = f"the melting point of {material} is {melting} degrees celsius"
        inputs = tuple(
            InputRef(modality=Modality.DOCUMENT, text=p, media_type="text/plain") for p in passages
        ) + (InputRef(modality=Modality.TEXT, text=question, media_type="text/plain"),)
        out.append(
            ExampleRecord(
                example_id=f"qa-{i:03d}",
                task_id=task_id,
                inputs=inputs,
                fm_output=FmOutput(text=answer),
                reference=Reference(answer=answer if i not in failing_indices else ""),
                created_at=FIXED_TIMESTAMP,
            )
        )
    return out


# --- one-call seeding -------------------------------------------------------------------


def seed_demo_task(store, which: str = "chart", n: int = 30, failing: int = 2, fm=None) -> str:
    """Create a demo task, drive the review protocol to an approved plan, and
    load the synthetic examples. Returns the task id, ready to evaluate."""
    from . import service
    from .fm import FMClient
    from .protocol import MessageKind, ProtocolMessage, ProtocolResponse, Verdict
    from .synthesis import propose_strategies

    fm = fm or FMClient()
    descriptor = chart_demo_descriptor() if which == "chart" else qa_demo_descriptor()
    task_id = store.create_task(descriptor)
    session = store.load_session(task_id)

    def step(kind, payload):
        nonlocal session
        message = ProtocolMessage(
            kind=kind, session_id=session.session_id, seq=len(session.log), payload=payload
        )
        session = service.apply_message(
            store, task_id, message, ProtocolResponse(verdict=Verdict.APPROVE), fm
        )

    step(MessageKind.VALIDATE_ERRORS, session.descriptor.failure_modes)
    step(MessageKind.PROPOSE_STRATEGIES, tuple(propose_strategies(session.descriptor)))
    message, response = service.approve_plan_message(session)
    session = service.apply_message(store, task_id, message, response, fm)

    if which == "chart":
        for record, svg in build_chart_examples(n=n, failing=failing, task_id=task_id):
            ref = store.put_blob(svg)
            record = replace(record, inputs=(replace(record.inputs[0], blob_ref=ref),))
            store.put_example(record)
    else:
        for record in build_qa_examples(n=n, failing=failing, task_id=task_id):
            store.put_example(record)
    return task_id
