"""HTTP/JSON API binding the store, agent, and report generator.

Sessions live in memory (chat turns are persisted to the chat collection
only with consent); report generation is synchronous, which is fine at desk
scale.  See README for endpoint schemas.
"""

from __future__ import annotations

import threading
import uuid
from contextlib import asynccontextmanager
from datetime import datetime, timezone
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import HTMLResponse, JSONResponse
from pydantic import BaseModel, Field

from .agent import Agent, ConversationState
from .config import ServerConfig
from .corpus import CollectionId, ingest_batch, parse_record, parse_timestamp
from .demo import DemoProvider
from .embed import build_embedder
from .errors import (
    BadTimestampError,
    MalformedJsonError,
    MissingFieldError,
    ProviderUnavailableError,
)
from .llm import RemoteProvider
from .report import ReportRequest, assemble, render_html
from .vectorstore import VectorStore


class SessionBody(BaseModel):
    consent: Optional[bool] = None


class MessageBody(BaseModel):
    text: str


class IngestBody(BaseModel):
    collection: str
    jsonl: Optional[str] = None
    path: Optional[str] = None


class ReportBody(BaseModel):
    window_from: str = Field(alias="from")
    window_to: str = Field(alias="to")

    model_config = {"populate_by_name": True}


def build_provider(config: ServerConfig):
    if config.llm.mode == "remote":
        return RemoteProvider(endpoint=config.llm.endpoint, model=config.llm.model)
    return DemoProvider()


def create_app(
    config: Optional[ServerConfig] = None,
    *,
    store: Optional[VectorStore] = None,
    provider=None,
    embedder=None,
    clock=None,
) -> FastAPI:
    config = config or ServerConfig()
    embedder = embedder or build_embedder(config.embedder)
    if store is None:
        store = VectorStore(config.embedder.dimension)
    elif store.dimension != config.embedder.dimension:
        raise ValueError(
            f"store dimension {store.dimension} != embedder dimension "
            f"{config.embedder.dimension}"
        )
    provider = provider or build_provider(config)
    clock = clock or (lambda: datetime.now(timezone.utc))

    agent = Agent(
        store,
        embedder,
        provider,
        top_k=config.agent.top_k,
        iteration_cap=config.agent.iteration_cap,
        clock=clock,
    )

    @asynccontextmanager
    async def lifespan(_: FastAPI):
        yield
        if config.snapshot_on_shutdown and config.store_path:
            store.snapshot(config.store_path)

    app = FastAPI(title="vaxrag", version="0.1.0", lifespan=lifespan)
    # the web client is served statically from another origin
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.config = config
    app.state.store = store
    app.state.agent = agent
    app.state.sessions: dict[str, ConversationState] = {}
    app.state.reports: dict[str, object] = {}
    app.state.report_lock = threading.Lock()

    @app.get("/health")
    def health():
        return {"status": "ok", "collections": store.counts()}

    @app.post("/sessions")
    def create_session(body: SessionBody):
        consent = config.consent_default if body.consent is None else bool(body.consent)
        session_id = str(uuid.uuid4())
        app.state.sessions[session_id] = ConversationState(
            session_id=session_id,
            consent=consent,
            window_size=config.agent.window_size,
        )
        return {"session_id": session_id, "consent": consent}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        state = app.state.sessions.get(session_id)
        if state is None:
            raise HTTPException(status_code=404, detail="unknown session")
        if not body.text or not body.text.strip():
            raise HTTPException(status_code=422, detail="text must be nonempty")
        try:
            response = agent.run_turn(state, body.text)
        except ProviderUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc
        return response.to_dict()

    @app.post("/ingest")
    def ingest(body: IngestBody):
        try:
            collection = CollectionId(body.collection)
        except ValueError:
            raise HTTPException(
                status_code=400, detail=f"unknown collection {body.collection!r}"
            ) from None
        if body.jsonl is None and body.path is None:
            raise HTTPException(status_code=400, detail="need jsonl payload or path")
        if body.jsonl is not None:
            lines = body.jsonl.splitlines()
        else:
            try:
                with open(body.path, "r", encoding="utf-8") as fh:
                    lines = fh.read().splitlines()
            except OSError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc

        docs = []
        line_failures = []
        for lineno, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                docs.append(parse_record(line, collection, salt=config.pseudonym_salt))
            except (MalformedJsonError, MissingFieldError, BadTimestampError) as exc:
                line_failures.append({"line": lineno, "error": str(exc)})

        stats = ingest_batch(docs, store, embedder)
        payload = stats.to_dict()
        payload["failed"] += len(line_failures)
        payload["failures"] = payload["failures"] + [
            f"line {f['line']}: {f['error']}" for f in line_failures
        ]
        payload["line_errors"] = line_failures
        status = 422 if line_failures else 200
        return JSONResponse(status_code=status, content=payload)

    @app.post("/reports")
    def create_report(body: ReportBody):
        try:
            window = (parse_timestamp(body.window_from), parse_timestamp(body.window_to))
            request = ReportRequest(window=window, languages=config.report.languages)
        except (BadTimestampError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        with app.state.report_lock:  # one assembly at a time
            report = assemble(request, store, provider, clock=clock)
            app.state.reports[report.id] = report
        return {"report_id": report.id}

    @app.get("/reports")
    def list_reports():
        return {
            "reports": [
                {
                    "id": rid,
                    "window": rep.to_dict()["window"],
                    "generated_at": rep.to_dict()["generated_at"],
                }
                for rid, rep in app.state.reports.items()
            ]
        }

    @app.get("/reports/{report_id}")
    def get_report(report_id: str):
        report = app.state.reports.get(report_id)
        if report is None:
            raise HTTPException(status_code=404, detail="unknown report")
        return report.to_dict()

    @app.get("/reports/{report_id}/html")
    def get_report_html(report_id: str):
        report = app.state.reports.get(report_id)
        if report is None:
            raise HTTPException(status_code=404, detail="unknown report")
        return HTMLResponse(content=render_html(report))

    return app
