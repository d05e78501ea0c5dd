"""High-level operations shared by the HTTP API and the CLI.

Both surfaces stay thin wrappers around these functions so their behavior is
identical by construction.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass

from .drafting import SampleInput, infer_draft_descriptor
from .errors import PlanNotApproved
from .fm import FMClient
from .protocol import (
    LogEntry,
    MessageKind,
    ProtocolMessage,
    ProtocolResponse,
    Session,
    Verdict,
    finalize_plan,
    handle_message,
    proposed_plan,
)
from .records import ExampleRecord
from .runtime.runner import EvalResult, Summary, run_plan, summarize_results
from .store import Datastore, load_archive_examples
from .synthesis import EvalPlan

DEFAULT_CI_THRESHOLD = 0.9
STORED_DATASET = "stored"


def create_task(
    store: Datastore, description: str, sample: SampleInput, fm: FMClient
) -> tuple[str, "Session"]:
    """Draft a descriptor from the description plus sample input and register
    the task. The sample blob is retained for provenance."""
    descriptor = infer_draft_descriptor(description, sample, fm)
    task_id = store.create_task(descriptor)
    data = sample.data.encode("utf-8") if isinstance(sample.data, str) else sample.data
    if data:
        store.put_blob(data)
    return task_id, store.load_session(task_id)


def get_session(store: Datastore, task_id: str) -> Session:
    return store.load_session(task_id)


def current_plan(store: Datastore, task_id: str) -> tuple[EvalPlan, bool]:
    """The approved plan when one exists, else the prospective proposal the
    next ApprovePlan would install. Second element: whether it is approved."""
    session = store.load_session(task_id)
    if session.plan is not None:
        return session.plan, True
    return proposed_plan(session), False


def apply_message(
    store: Datastore,
    task_id: str,
    message: ProtocolMessage,
    response: ProtocolResponse,
    fm: FMClient,
) -> Session:
    """Step the session and persist the event (plus the plan, on approval)."""
    session = store.load_session(task_id)

    def evaluate(dataset_ref: str) -> dict:
        plan = proposed_plan(session) if session.plan is None else session.plan
        summary, _ = evaluate_examples(store, task_id, plan, dataset_ref, fm)
        return summary.as_dict()

    new_session = handle_message(session, message, response, evaluate=evaluate)
    store.append_event(task_id, new_session.log[-1])
    if (
        message.kind is MessageKind.APPROVE_PLAN
        and new_session.plan is not None
        and new_session.plan_version > session.plan_version
    ):
        store.save_plan(task_id, new_session.plan)
    return new_session


def resolve_examples(store: Datastore, task_id: str, dataset_ref: str) -> list[ExampleRecord]:
    if not dataset_ref or dataset_ref == STORED_DATASET:
        return store.examples(task_id)
    return load_archive_examples(dataset_ref)


def evaluate_examples(
    store: Datastore,
    task_id: str,
    plan: EvalPlan,
    dataset_ref: str,
    fm: FMClient,
    persist: bool = True,
) -> tuple[Summary, list[EvalResult]]:
    examples = resolve_examples(store, task_id, dataset_ref)
    results = [run_plan(plan, record, fm) for record in examples]
    if persist:
        for result in results:
            store.append_result(task_id, result)
    return summarize_results(results), results


@dataclass(frozen=True)
class EvaluationOutcome:
    summary: Summary
    results: list[EvalResult]
    threshold: float
    ci_pass: bool


def evaluate_task(
    store: Datastore,
    task_id: str,
    dataset_ref: str = STORED_DATASET,
    fm: FMClient | None = None,
    threshold: float = DEFAULT_CI_THRESHOLD,
    persist: bool = True,
) -> EvaluationOutcome:
    """Operational batch evaluation against the approved plan (CI entry point).

    Unlike the protocol's RunEvaluation message this does not step the
    session, so pipelines can call it repeatedly."""
    session = store.load_session(task_id)
    plan = finalize_plan(session)
    summary, results = evaluate_examples(store, task_id, plan, dataset_ref, fm or FMClient(), persist)
    return EvaluationOutcome(
        summary=summary,
        results=results,
        threshold=threshold,
        ci_pass=summary.pass_rate >= threshold,
    )


def report(store: Datastore, task_id: str, plan_version: int | None = None) -> Summary:
    """Summary recomputed from stored results."""
    store.require_task(task_id)
    return summarize_results(store.results(task_id, plan_version=plan_version))


def decode_sample(payload: dict) -> SampleInput:
    """Sample input from an API/CLI body: inline text or base64 blob."""
    data: bytes | str = payload.get("text", "")
    if payload.get("data_b64"):
        data = base64.b64decode(payload["data_b64"])
    return SampleInput(
        modality=str(payload.get("modality", "")),
        data=data,
        media_type=str(payload.get("media_type", "")),
    )


def approve_plan_message(session: Session, plan_hash: str = "") -> tuple[ProtocolMessage, ProtocolResponse]:
    """Convenience constructor for the compare-and-approve exchange; with no
    explicit hash the current proposal's hash is used."""
    if not plan_hash:
        plan_hash = proposed_plan(session).plan_hash
    message = ProtocolMessage(
        kind=MessageKind.APPROVE_PLAN,
        session_id=session.session_id,
        seq=len(session.log),
        payload=plan_hash,
    )
    return message, ProtocolResponse(verdict=Verdict.APPROVE)
