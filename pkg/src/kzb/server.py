"""HTTP service over the pipeline: config, ingestion, chat, history, export.

All endpoints return JSON; failures use the envelope
``{"error": {"code", "message"}}`` with a status mapped from the error
taxonomy. Secrets are write-only: config responses redact keys as "***",
and nothing else ever echoes them. Chat posts to one session are processed
strictly in arrival order via a per-session FIFO lock.
"""

from __future__ import annotations

import asyncio
import logging
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from .config import AppConfig, config_from_dict, config_to_dict, save_config
from .errors import KzbError
from .ingest import IngestJob
from .rag import answer_question
from .sessions import SessionStore
from .vectorstore import VectorIndex
from .zotero import ZoteroClient

logger = logging.getLogger(__name__)

_STATUS_BY_CODE = {
    "invalid_descriptor": 400,
    "invalid_params": 400,
    "invalid_config": 400,
    "auth_failed": 403,
    "not_found": 404,
    "unknown_session": 404,
    "role_order_violation": 409,
    "empty_index": 409,
    "empty_context": 409,
    "rate_limited": 429,
    "provider_error": 502,
    "transport_error": 502,
}


class AppState:
    def __init__(self, config: AppConfig, index: VectorIndex, store: SessionStore) -> None:
        self.config = config
        self.index = index
        self.store = store
        self.ingest_job: IngestJob | None = None
        self.ingest_thread: threading.Thread | None = None
        self.state_lock = threading.Lock()
        self.session_locks: dict[str, asyncio.Lock] = {}

    def session_lock(self, session_id: str) -> asyncio.Lock:
        # created lazily; FIFO acquisition preserves chat arrival order
        return self.session_locks.setdefault(session_id, asyncio.Lock())


def _error_response(code: str, message: str, status: int) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": {"code": code, "message": message}})


def load_index(path: Path) -> VectorIndex:
    if path.exists():
        return VectorIndex.load(path)
    return VectorIndex()


def create_app(
    config: AppConfig | None = None,
    *,
    index: VectorIndex | None = None,
    store: SessionStore | None = None,
    static_dir: str | Path | None = None,
    persist_config: bool = True,
) -> FastAPI:
    config = config or AppConfig()
    config.ensure_data_dir()
    state = AppState(
        config=config,
        index=index if index is not None else load_index(config.index_path),
        store=store or SessionStore(config.sessions_dir),
    )

    app = FastAPI(title="kzb", docs_url=None, redoc_url=None)
    app.state.kzb = state

    @app.exception_handler(KzbError)
    async def _kzb_error(request: Request, exc: KzbError):
        return _error_response(exc.code, str(exc), _STATUS_BY_CODE.get(exc.code, 500))

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return _error_response("invalid_params", "request body failed validation", 400)

    @app.exception_handler(Exception)
    async def _unhandled(request: Request, exc: Exception):
        logger.exception("unhandled error on %s", request.url.path)
        return _error_response("internal_error", "internal server error", 500)

    @app.get("/api/health")
    async def health():
        return {
            "status": "ok",
            "index_size": state.index.size,
            "dimension": state.index.dimension,
        }

    @app.get("/api/config")
    async def get_config():
        return config_to_dict(state.config, redact=True)

    @app.post("/api/config")
    async def set_config(body: dict):
        validate_zotero = bool(body.pop("validate_zotero", False))
        new_config = config_from_dict(body, data_dir=state.config.data_dir, base=state.config)
        new_config.zotero.validate()
        new_config.chunking.validate()
        new_config.rag.validate()
        if validate_zotero:
            client = ZoteroClient(new_config.zotero, api_base=new_config.zotero_api_base)
            await run_in_threadpool(client.validate_credentials)
        state.config = new_config
        if persist_config:
            await run_in_threadpool(save_config, new_config)
        return config_to_dict(new_config, redact=True)

    @app.post("/api/ingest", status_code=202)
    async def start_ingest():
        with state.state_lock:
            if state.ingest_thread is not None and state.ingest_thread.is_alive():
                return _error_response("ingest_running", "an ingestion run is already in progress", 409)
            job = IngestJob(state.config)
            state.ingest_job = job

            def _run() -> None:
                status = job.run()
                if status.state == "done":
                    state.index = job.index

            state.ingest_thread = threading.Thread(target=_run, daemon=True)
            state.ingest_thread.start()
        return {"status": "accepted", "status_url": "/api/ingest/status"}

    @app.get("/api/ingest/status")
    async def ingest_status():
        job = state.ingest_job
        if job is None:
            return {"state": "idle", "docs_found": 0, "docs_extracted": 0,
                    "docs_skipped": 0, "chunks_indexed": 0, "errors": []}
        return job.status_snapshot()

    @app.post("/api/sessions", status_code=201)
    async def create_session():
        session = await run_in_threadpool(state.store.create_session)
        return {"session_id": session.session_id, "created_at": session.created_at}

    @app.post("/api/sessions/{session_id}/chat")
    async def chat(session_id: str, body: dict):
        question = body.get("question")
        if not isinstance(question, str) or not question.strip():
            return _error_response("invalid_params", "body must contain a non-empty 'question'", 400)
        async with state.session_lock(session_id):
            def _answer():
                session = state.store.get_session(session_id)
                answer = answer_question(
                    question,
                    session,
                    state.config.rag,
                    state.index,
                    state.config.provider,
                )
                state.store.append_turn(session_id, "user", question)
                state.store.append_turn(
                    session_id,
                    "assistant",
                    answer.text,
                    citations=[hit.chunk_id for hit in answer.citations],
                )
                return answer

            answer = await run_in_threadpool(_answer)
        return {"session_id": session_id, **answer.as_dict()}

    @app.get("/api/sessions/{session_id}/history")
    async def history(session_id: str):
        session = await run_in_threadpool(state.store.get_session, session_id)
        return {
            "session_id": session.session_id,
            "created_at": session.created_at,
            "turns": [turn.as_dict() for turn in session.turns],
        }

    @app.get("/api/sessions/{session_id}/export.csv")
    async def export_csv(session_id: str):
        data = await run_in_threadpool(state.store.export_csv, session_id)
        return Response(
            content=data,
            media_type="text/csv",
            headers={
                "Content-Disposition": f'attachment; filename="kzb-history-{session_id}.csv"'
            },
        )

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
