"""HTTP service exposing task creation, the review protocol, evaluation runs,
results, label submission and the UI spec. Designed as the review UI's backend
and for CI integration.

All state lives in the datastore; handlers are stateless, so restarting the
service and replaying reads returns identical responses.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import serde, service
from .errors import (
    CONFLICT_ERRORS,
    NOT_FOUND_ERRORS,
    EvalSynthError,
    MalformedField,
    MissingSection,
    StoreUnavailable,
)
from .fm import FMClient, FMConfig
from .protocol import allowed_messages
from .records import LabelRecord
from .store import Datastore
from .synthesis import ChannelKind
from .wire import parse_message_doc


@dataclass
class ApiConfig:
    host: str = "127.0.0.1"
    port: int = 8321
    store_root: str | Path = "evalsynth-store"
    fm: FMConfig = field(default_factory=FMConfig)
    ci_threshold: float = service.DEFAULT_CI_THRESHOLD

    def __post_init__(self):
        if not (0.0 <= self.ci_threshold <= 1.0):
            raise ValueError(f"ci threshold must be within [0, 1], got {self.ci_threshold}")


class SampleInputBody(BaseModel):
    modality: str
    text: str = ""
    data_b64: str = ""
    media_type: str = ""


class TaskCreateBody(BaseModel):
    description: str
    sample_input: SampleInputBody


class MessageBody(BaseModel):
    message: dict
    response: dict


class ApproveBody(BaseModel):
    plan_hash: str = ""


class EvaluateBody(BaseModel):
    dataset: str = service.STORED_DATASET
    threshold: float | None = None


class LabelBody(BaseModel):
    channel_id: str
    kind: str
    payload: dict
    labeler: str = ""


def _error_status(exc: EvalSynthError) -> int:
    if isinstance(exc, NOT_FOUND_ERRORS):
        return 404
    if isinstance(exc, CONFLICT_ERRORS):
        return 409
    return 422


def _session_view(session) -> dict:
    return {
        "session_id": session.session_id,
        "stage": session.stage.value,
        "plan_version": session.plan_version,
        "plan_approved": session.plan is not None,
        "next_seq": len(session.log),
        "allowed_messages": sorted(k.value for k in allowed_messages(session)),
        "descriptor": serde.descriptor_to_dict(session.descriptor),
    }


def create_app(config: ApiConfig) -> FastAPI:
    store_root = Path(config.store_root)
    try:
        store_root.mkdir(parents=True, exist_ok=True)
        probe = store_root / ".writable"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        raise StoreUnavailable(f"store root {store_root} is not writable: {exc}") from exc

    store = Datastore(store_root)
    fm = FMClient(config.fm)
    app = FastAPI(title="evalsynth evaluator API", version="0.1.0")
    # The review UI is served from a different origin (file:// or a static
    # host); the service binds to loopback and has no credentials, so a
    # permissive CORS policy is fine.
    from fastapi.middleware.cors import CORSMiddleware

    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])

    @app.exception_handler(EvalSynthError)
    async def domain_error_handler(_request: Request, exc: EvalSynthError):
        return JSONResponse(
            status_code=_error_status(exc),
            content={"code": exc.code, "message": str(exc), "detail": type(exc).__name__},
        )

    @app.exception_handler(RequestValidationError)
    async def body_error_handler(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"code": "malformed_body", "message": "malformed request body", "detail": str(exc.errors())},
        )

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "store": str(store_root)}

    @app.post("/tasks", status_code=201)
    def create_task(body: TaskCreateBody):
        sample = service.decode_sample(body.sample_input.model_dump())
        task_id, session = service.create_task(store, body.description, sample, fm)
        return {"task_id": task_id, **_session_view(session)}

    @app.get("/tasks")
    def list_tasks():
        return {"tasks": store.task_ids()}

    @app.get("/tasks/{task_id}")
    def get_task(task_id: str):
        return _session_view(store.load_session(task_id))

    @app.get("/tasks/{task_id}/protocol/messages")
    def get_protocol_log(task_id: str):
        session = store.load_session(task_id)
        return {
            "session_id": session.session_id,
            "stage": session.stage.value,
            "next_seq": len(session.log),
            "allowed_messages": sorted(k.value for k in allowed_messages(session)),
            "log": [serde.log_entry_to_dict(entry) for entry in session.log],
        }

    @app.post("/tasks/{task_id}/protocol/messages")
    async def post_protocol_message(task_id: str, request: Request):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("text/markdown"):
            doc = (await request.body()).decode("utf-8")
            try:
                message, response = parse_message_doc(doc)
            except (MalformedField, MissingSection) as exc:
                return JSONResponse(
                    status_code=400,
                    content={"code": exc.code, "message": str(exc), "detail": "unparseable message document"},
                )
        else:
            try:
                body = MessageBody(**(await request.json()))
                message = serde.message_from_dict(body.message)
                response = serde.response_from_dict(body.response)
            except (MalformedField, ValueError, TypeError) as exc:
                return JSONResponse(
                    status_code=400,
                    content={"code": "malformed_body", "message": str(exc), "detail": "unparseable message body"},
                )
        if not message.session_id:
            # convenience: default to the task's one session
            from dataclasses import replace

            message = replace(message, session_id=store.load_session(task_id).session_id)
        session = service.apply_message(store, task_id, message, response, fm)
        return _session_view(session)

    @app.get("/tasks/{task_id}/plan")
    def get_plan(task_id: str):
        plan, approved = service.current_plan(store, task_id)
        return {"approved": approved, "plan": serde.plan_to_dict(plan)}

    @app.post("/tasks/{task_id}/plan/approve")
    def approve_plan(task_id: str, body: ApproveBody | None = None):
        session = store.load_session(task_id)
        message, response = service.approve_plan_message(
            session, body.plan_hash if body is not None else ""
        )
        session = service.apply_message(store, task_id, message, response, fm)
        return _session_view(session)

    @app.post("/tasks/{task_id}/evaluate")
    def evaluate(task_id: str, body: EvaluateBody | None = None):
        body = body or EvaluateBody()
        threshold = body.threshold if body.threshold is not None else config.ci_threshold
        outcome = service.evaluate_task(
            store, task_id, dataset_ref=body.dataset, fm=fm, threshold=threshold
        )
        return {
            "summary": outcome.summary.as_dict(),
            "threshold": outcome.threshold,
            "ci_pass": outcome.ci_pass,
            "verdicts": [
                {"example_id": r.example_id, "verdict": r.verdict.value} for r in outcome.results
            ],
        }

    @app.get("/tasks/{task_id}/results")
    def get_results(task_id: str, plan_version: int | None = None, verdict: str | None = None):
        results = store.results(task_id, plan_version=plan_version, verdict=verdict)
        return {"results": [serde.result_to_dict(r) for r in results]}

    @app.get("/tasks/{task_id}/ui-spec")
    def get_ui_spec(task_id: str):
        plan, approved = service.current_plan(store, task_id)
        plan_dict = serde.plan_to_dict(plan)
        return {
            "approved": approved,
            "plan_version": plan.version,
            "ui_spec": plan_dict["ui_spec"],
            "label_spec": plan_dict["label_spec"],
        }

    @app.get("/tasks/{task_id}/examples")
    def list_examples(task_id: str):
        return {"examples": [serde.example_to_dict(e) for e in store.examples(task_id)]}

    @app.get("/examples/{example_id}")
    def get_example(example_id: str):
        example = store.get_example(example_id)
        results = [
            r for r in store.results(example.task_id) if r.example_id == example_id
        ]
        corrected = store.corrected_table(example_id)
        return {
            "example": serde.example_to_dict(example),
            "labels": [serde.label_to_dict(l) for l in store.labels(example_id)],
            "corrected_table": serde.table_to_dict(corrected) if corrected is not None else None,
            "approved_sources": list(store.approved_sources(example_id)),
            "latest_result": serde.result_to_dict(results[-1]) if results else None,
        }

    @app.post("/examples/{example_id}/labels", status_code=201)
    def post_label(example_id: str, body: LabelBody):
        try:
            kind = ChannelKind(body.kind)
        except ValueError:
            return JSONResponse(
                status_code=400,
                content={"code": "malformed_body", "message": f"unknown label kind {body.kind!r}", "detail": ""},
            )
        try:
            payload = serde.label_payload_from_dict(kind, body.payload)
        except MalformedField as exc:
            return JSONResponse(
                status_code=400,
                content={"code": exc.code, "message": str(exc), "detail": "bad label payload"},
            )
        label = LabelRecord(
            label_id="",
            example_id=example_id,
            channel_id=body.channel_id,
            kind=kind,
            payload=payload,
            labeler=body.labeler,
        )
        label_id = store.append_label(label)
        return {"label_id": label_id}

    @app.get("/blobs/{ref}")
    def get_blob(ref: str, media_type: str = "application/octet-stream"):
        data = store.get_blob(ref)
        return Response(content=data, media_type=media_type)

    return app


def serve(config: ApiConfig):
    """Run the service until interrupted. Raises BindFailure when the port is
    taken so scripts can distinguish configuration errors."""
    import errno
    import socket

    import uvicorn

    from .errors import BindFailure

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((config.host, config.port))
    except OSError as exc:
        if exc.errno in (errno.EADDRINUSE, errno.EACCES, errno.EADDRNOTAVAIL):
            raise BindFailure(f"cannot bind {config.host}:{config.port}: {exc}") from exc
        raise
    finally:
        probe.close()

    app = create_app(config)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
