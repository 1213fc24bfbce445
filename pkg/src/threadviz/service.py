"""HTTP facade: sessions, utterances, threads, dictionary edits, export, read-only mode."""
from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .conversation import MAIN, MessageRef
from .engine import EngineConfig, SessionEngine
from .errors import (
    AlreadyClosed,
    CompletionTimeout,
    DictionaryError,
    EmptyUtterance,
    GatewayError,
    IndexOutOfRange,
    MalformedResponse,
    NoProgramToRefine,
    NotAnAssistantMessage,
    NothingToUndo,
    SandboxUnavailable,
    ThreadvizError,
    TransportError,
    UnknownColumn,
    UnknownThread,
)
from .executor import ExecutionLimits
from .gateway import LlmClient, MockBackend, MockScript, backend_from_env, model_from_env
from .store import SessionStore

log = logging.getLogger(__name__)

QUICK_OP_LOCK_TIMEOUT_S = 30.0


class UnknownSession(ThreadvizError):
    code = "unknown_session"

_STATUS_BY_ERROR: list[tuple[type, int]] = [
    (EmptyUtterance, 400),
    (IndexOutOfRange, 400),
    (NothingToUndo, 400),
    (NoProgramToRefine, 400),
    (AlreadyClosed, 400),
    (DictionaryError, 400),
    (UnknownColumn, 400),
    (UnknownThread, 404),
    (NotAnAssistantMessage, 404),
    (CompletionTimeout, 502),
    (TransportError, 502),
    (MalformedResponse, 502),
    (GatewayError, 500),
    (SandboxUnavailable, 500),
]


@dataclass
class ServiceConfig:
    workdir: Path
    mock_script: Path | None = None
    timeout_ms: int = 60_000
    limits: ExecutionLimits = field(default_factory=ExecutionLimits)


class MessageBody(BaseModel):
    text: str


class VersionBody(BaseModel):
    index: int


class ThreadBody(BaseModel):
    anchor_mid: str


class DictionaryPatch(BaseModel):
    column: str
    description: str


class SessionRuntime:
    def __init__(self, engine: SessionEngine):
        self.engine = engine
        self.lock = threading.Lock()

    @property
    def readonly(self) -> bool:
        return self.engine.readonly


def _error_response(exc: ThreadvizError) -> JSONResponse:
    for error_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, error_type):
            return JSONResponse(status_code=status, content={"error": exc.code, "detail": str(exc)})
    return JSONResponse(status_code=500, content={"error": exc.code, "detail": str(exc)})


def _parse_mid(mid: str) -> tuple[MessageRef, str]:
    """Message ids look like main:0:assistant or t1:2:user."""
    parts = mid.split(":")
    if len(parts) != 3 or parts[2] not in ("user", "assistant"):
        raise ValueError(mid)
    return MessageRef(target=parts[0], index=int(parts[1])), parts[2]


def create_app(config: ServiceConfig) -> FastAPI:
    app = FastAPI(title="threadviz")
    # the browser UI may be served from another origin (file server, dev setup)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    store = SessionStore(config.workdir)
    engine_config = EngineConfig(workdir=Path(config.workdir), limits=config.limits)
    runtimes: dict[str, SessionRuntime] = {}
    registry_lock = threading.Lock()

    def new_client() -> LlmClient:
        if config.mock_script is not None:
            script = MockScript.from_json(Path(config.mock_script).read_text(encoding="utf-8"))
            return LlmClient(MockBackend(script), timeout_ms=config.timeout_ms)
        return LlmClient(backend_from_env(), model=model_from_env(), timeout_ms=config.timeout_ms)

    def get_runtime(session_id: str) -> SessionRuntime:
        with registry_lock:
            runtime = runtimes.get(session_id)
            if runtime is None:
                if not store.exists(session_id):
                    raise UnknownSession(session_id)
                engine = SessionEngine.load(session_id, new_client(), engine_config, store=store)
                runtime = SessionRuntime(engine)
                runtimes[session_id] = runtime
            return runtime

    def resolve_thread(compound_id: str) -> tuple[SessionRuntime, str]:
        session_id, sep, thread_id = compound_id.rpartition(".")
        if not sep:
            raise UnknownThread(compound_id)
        runtime = get_runtime(session_id)
        if thread_id not in runtime.engine.session.threads:
            raise UnknownThread(compound_id)
        return runtime, thread_id

    def guarded(runtime: SessionRuntime, fn, pipeline: bool = False):
        """Run one mutating operation under the session lock; reject when read-only.

        Pipeline ops (LLM call + execution) fail fast with 409 while another is
        running; quick ops wait briefly instead.
        """
        if runtime.readonly:
            return JSONResponse(status_code=403, content={"error": "read_only"})
        if pipeline:
            acquired = runtime.lock.acquire(blocking=False)
        else:
            acquired = runtime.lock.acquire(timeout=QUICK_OP_LOCK_TIMEOUT_S)
        if not acquired:
            return JSONResponse(status_code=409, content={"error": "execution_in_progress"})
        try:
            return fn()
        except ThreadvizError as exc:
            return _error_response(exc)
        except ValueError as exc:
            return JSONResponse(status_code=400, content={"error": "bad_request", "detail": str(exc)})
        finally:
            runtime.lock.release()

    @app.exception_handler(UnknownSession)
    async def _unknown_session(request: Request, exc: UnknownSession):
        return JSONResponse(status_code=404, content={"error": exc.code, "detail": str(exc)})

    @app.exception_handler(ThreadvizError)
    async def _domain_error(request: Request, exc: ThreadvizError):
        return _error_response(exc)

    @app.post("/sessions", status_code=201)
    async def create_session(request: Request, filename: str | None = None):
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get("file")
            if upload is None:
                return JSONResponse(status_code=400, content={"error": "bad_request", "detail": "missing file part"})
            csv_bytes = await upload.read()
            name = filename or upload.filename or "dataset.csv"
        else:
            csv_bytes = await request.body()
            if filename is None:
                return JSONResponse(
                    status_code=400,
                    content={"error": "bad_request", "detail": "filename query parameter required for raw uploads"},
                )
            name = filename
        session_id = uuid.uuid4().hex[:12]
        created_at = datetime.now(timezone.utc).isoformat()
        try:
            engine = SessionEngine.create(
                session_id, name, csv_bytes, new_client(), engine_config, store=store, created_at=created_at
            )
        except DictionaryError as exc:
            return _error_response(exc)
        with registry_lock:
            runtimes[session_id] = SessionRuntime(engine)
        body = {"session_id": session_id, "dictionary": engine.session.dictionary.to_dict()}
        if engine.llm_degraded:
            body["error"] = "llm_transport"
            return JSONResponse(status_code=502, content=body)
        return body

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str, readonly: int | None = None):
        runtime = get_runtime(session_id)
        if readonly is not None:
            runtime.engine.readonly = bool(readonly)
        return {"session": runtime.engine.export(), "readonly": runtime.readonly}

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        return get_runtime(session_id).engine.export()

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        runtime = get_runtime(session_id)
        return guarded(runtime, lambda: runtime.engine.say(MAIN, body.text), pipeline=True)

    @app.post("/sessions/{session_id}/lucky")
    def post_lucky(session_id: str):
        runtime = get_runtime(session_id)
        return guarded(runtime, runtime.engine.lucky, pipeline=True)

    @app.post("/sessions/{session_id}/messages/{mid}/redo")
    def post_redo(session_id: str, mid: str):
        runtime = get_runtime(session_id)

        def op():
            ref, role = _parse_mid(mid)
            if role != "assistant":
                return JSONResponse(
                    status_code=400,
                    content={"error": "not_an_assistant_message", "detail": "redo applies to assistant messages"},
                )
            return runtime.engine.redo(ref)

        return guarded(runtime, op, pipeline=True)

    @app.post("/sessions/{session_id}/messages/{mid}/version")
    def post_version(session_id: str, mid: str, body: VersionBody):
        runtime = get_runtime(session_id)

        def op():
            ref, role = _parse_mid(mid)
            if role != "assistant":
                return JSONResponse(
                    status_code=400,
                    content={"error": "not_an_assistant_message", "detail": "versions belong to assistant messages"},
                )
            return runtime.engine.select_version(ref, body.index)

        return guarded(runtime, op)

    @app.post("/sessions/{session_id}/threads")
    def post_thread(session_id: str, body: ThreadBody):
        runtime = get_runtime(session_id)

        def op():
            ref, role = _parse_mid(body.anchor_mid)
            if role != "assistant":
                raise NotAnAssistantMessage(body.anchor_mid)
            thread_id = runtime.engine.open_thread(ref)
            return {"thread_id": f"{session_id}.{thread_id}"}

        return guarded(runtime, op)

    @app.post("/threads/{compound_id}/messages")
    def post_thread_message(compound_id: str, body: MessageBody):
        runtime, thread_id = resolve_thread(compound_id)
        return guarded(runtime, lambda: runtime.engine.say(thread_id, body.text), pipeline=True)

    @app.post("/threads/{compound_id}/close")
    def post_thread_close(compound_id: str):
        runtime, thread_id = resolve_thread(compound_id)
        session_id = compound_id.rpartition(".")[0]

        def op():
            view = runtime.engine.close_thread(thread_id)
            view["thread_id"] = f"{session_id}.{thread_id}"
            return view

        return guarded(runtime, op)

    @app.patch("/sessions/{session_id}/dictionary")
    def patch_dictionary(session_id: str, body: DictionaryPatch):
        runtime = get_runtime(session_id)
        return guarded(
            runtime,
            lambda: {"dictionary": runtime.engine.edit_dictionary(body.column, body.description)},
        )

    return app
