"""HTTP service: corpus management, session lifecycle, streamed chat.

All bodies are JSON; errors use ``{"error": {"code", "message"}}``. Message
posts stream server-sent events (``retrieval``, ``token``, ``guards``,
``done``, ``error``): the final turn is persisted before its ``done`` event
is queued, so a turn shows up in the transcript exactly when its stream
completed. Posts to a session with a turn already in flight get 409
``turn_in_progress``.

Providers come from the config (deterministic stubs by default) or are
injected by tests; the service itself never contacts any host that is not
explicitly configured.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, StreamingResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import schemas
from .config import ServiceConfig
from .corpus import Corpus, discover_corpora, load_corpus
from .embedding import StubEmbedder, make_embedder
from .engine import DialogueEngine, GuardPolicy
from .errors import (
    CorpusNotFound,
    CorruptCorpus,
    EmptyQuestion,
    SessionClosed,
    SessionNotFound,
    SiError,
)
from .guards import RULE_BY_SHORT, load_default_lexicon, load_lexicon_file
from .llm import GenerationParams, make_llm, render_mode_for
from .prompts import load_default_template, load_template_file
from .retrieval import RetrievalConfig
from .sessions import SessionStore
from .vectorstore import HnswParams, build_index

logger = logging.getLogger(__name__)


class CreateSessionBody(BaseModel):
    corpus_id: str
    params: dict | None = None


class MessageBody(BaseModel):
    text: str


class CorpusRuntime:
    def __init__(self, corpus: Corpus, index_kind: str):
        self.corpus = corpus
        self.index = build_index(corpus.entries, kind=index_kind, params=HnswParams())


class ServiceState:
    def __init__(self, config: ServiceConfig, embedder=None, llm=None):
        config.validate()
        self.config = config
        data_dir = Path(config.data_dir)
        data_dir.mkdir(parents=True, exist_ok=True)

        self.embedder = embedder if embedder is not None else make_embedder(config.embedder)
        self.llm = llm if llm is not None else make_llm(config.llm)
        render_mode = render_mode_for(config.llm)
        if config.prompt_template_path:
            self.template = load_template_file(config.prompt_template_path, render_mode)
        else:
            self.template = load_default_template(render_mode)
        if config.guards.lexicon_path:
            self.lexicon = load_lexicon_file(config.guards.lexicon_path)
        else:
            self.lexicon = load_default_lexicon()
        self.guard_policy = GuardPolicy(
            enabled=config.guards.enabled,
            rules={RULE_BY_SHORT.get(r, r) for r in config.guards.rules},
            max_regens=config.guards.max_regens,
        )
        self.store = SessionStore(data_dir / "sessions")
        self.corpora: dict[str, CorpusRuntime] = {}
        for corpus_dir in discover_corpora(data_dir):
            self._load_corpus_dir(corpus_dir)

    def _load_corpus_dir(self, corpus_dir: Path) -> None:
        try:
            corpus = load_corpus(corpus_dir)
        except (CorruptCorpus, CorpusNotFound) as exc:
            logger.error("skipping corpus at %s: %s", corpus_dir, exc)
            return
        self.corpora[corpus.manifest.corpus_id] = CorpusRuntime(
            corpus, self.config.index_kind
        )

    def runtime(self, corpus_id: str) -> CorpusRuntime:
        try:
            return self.corpora[corpus_id]
        except KeyError:
            raise CorpusNotFound(f"unknown corpus {corpus_id!r}") from None

    def engine_for(self, corpus_id: str) -> DialogueEngine:
        rt = self.runtime(corpus_id)
        embedder = self.embedder
        manifest_dim = rt.corpus.manifest.embedding_dim
        if (
            isinstance(embedder, StubEmbedder)
            and manifest_dim
            and embedder.dim != manifest_dim
        ):
            # Corpora may have been ingested at different stub dims.
            embedder = StubEmbedder(dim=manifest_dim, model_id=embedder.model_id)
        return DialogueEngine(
            corpus=rt.corpus,
            index=rt.index,
            embedder=embedder,
            llm=self.llm,
            template=self.template,
            lexicon=self.lexicon,
            store=self.store,
            guard_policy=self.guard_policy,
        )


def _error_body(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


_ERROR_MAP: list[tuple[type, int, str]] = [
    (SessionNotFound, 404, "session_not_found"),
    (CorpusNotFound, 404, "corpus_not_found"),
    (SessionClosed, 409, "session_closed"),
    (EmptyQuestion, 400, "empty_question"),
]


def _map_error(exc: SiError) -> tuple[int, dict]:
    for etype, status, code in _ERROR_MAP:
        if isinstance(exc, etype):
            return status, _error_body(code, str(exc))
    return 500, _error_body(type(exc).__name__, str(exc))


def _sse(kind: str, payload: dict) -> str:
    return f"event: {kind}\ndata: {json.dumps(payload, ensure_ascii=False)}\n\n"


def build_app(config: ServiceConfig, embedder=None, llm=None) -> FastAPI:
    state = ServiceState(config, embedder=embedder, llm=llm)
    app = FastAPI(title="synthetic-interlocutor", docs_url=None, redoc_url=None)
    app.state.si = state

    if config.cors_allowed_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=config.cors_allowed_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(SiError)
    def _si_error_handler(_request: Request, exc: SiError):
        status, body = _map_error(exc)
        return JSONResponse(status_code=status, content=body)

    @app.get("/api/schema")
    def get_schema():
        return schemas.ALL_SCHEMAS

    @app.get("/api/corpora")
    def list_corpora():
        return [rt.corpus.manifest.to_json() for rt in state.corpora.values()]

    @app.post("/api/corpora/{corpus_id}/reload")
    def reload_corpus(corpus_id: str):
        rt = state.runtime(corpus_id)
        corpus = load_corpus(rt.corpus.path)
        state.corpora[corpus_id] = CorpusRuntime(corpus, state.config.index_kind)
        return {"reloaded": corpus_id, "chunk_count": corpus.manifest.chunk_count}

    @app.get("/api/corpora/{corpus_id}/chunks/{chunk_id:path}")
    def get_chunk(corpus_id: str, chunk_id: str):
        rt = state.runtime(corpus_id)
        chunk = rt.corpus.chunks.get(chunk_id)
        if chunk is None:
            return JSONResponse(
                status_code=404,
                content=_error_body("chunk_not_found", f"unknown chunk {chunk_id!r}"),
            )
        doc = rt.corpus.documents[chunk.doc_id]
        body = chunk.to_json()
        body["document"] = {
            "id": doc.id,
            "kind": doc.kind,
            "source_path": doc.source_path,
            "metadata": doc.metadata,
        }
        return body

    @app.get("/api/sessions")
    def list_sessions():
        out = []
        for sid in state.store.list_ids():
            s = state.store.get(sid)
            out.append(
                {
                    "id": s.id,
                    "corpus_id": s.corpus_id,
                    "created_at": s.created_at,
                    "status": s.status,
                    "turn_count": len(s.turns),
                }
            )
        return out

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody):
        state.runtime(body.corpus_id)  # 404 on unknown corpus
        params = body.params or {}
        gen = GenerationParams(**{**state.config.llm.params.to_json(), **params.get("generation", {})})
        gen.validate()
        ret = RetrievalConfig(**{**state.config.retrieval.to_json(), **params.get("retrieval", {})})
        ret.validate()
        session = state.store.create(
            corpus_id=body.corpus_id,
            generation_params=gen,
            retrieval_config=ret,
            prompt_template_id=params.get("prompt_template_id", state.template.template_id),
        )
        return {"session_id": session.id}

    @app.get("/api/sessions/{session_id}")
    def get_session(session_id: str):
        return state.store.get(session_id).to_json()

    @app.post("/api/sessions/{session_id}/messages")
    def post_message(session_id: str, body: MessageBody):
        session = state.store.get(session_id)
        if session.status != "active":
            raise SessionClosed(f"session {session_id} is closed")
        engine = state.engine_for(session.corpus_id)
        lock = state.store.lock_for(session_id)
        if not lock.acquire(blocking=False):
            return JSONResponse(
                status_code=409,
                content=_error_body(
                    "turn_in_progress", "a turn is already being generated"
                ),
            )

        events: queue.Queue = queue.Queue()

        def on_event(kind: str, payload: dict) -> None:
            events.put((kind, payload))

        def work() -> None:
            try:
                engine.run_turn(session, body.text, on_event=on_event)
            except SiError as exc:
                _status, err = _map_error(exc)
                events.put(("error", err))
            except Exception as exc:  # pragma: no cover - defensive
                logger.exception("turn failed")
                events.put(("error", _error_body("internal", str(exc))))
            finally:
                lock.release()
                events.put(None)

        threading.Thread(target=work, daemon=True).start()

        def stream():
            while True:
                item = events.get()
                if item is None:
                    break
                kind, payload = item
                yield _sse(kind, payload)

        return StreamingResponse(stream(), media_type="text/event-stream")

    ui_dir = config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    else:

        @app.get("/")
        def root():
            return {
                "service": "synthetic-interlocutor",
                "corpora": sorted(state.corpora),
                "api": ["/api/corpora", "/api/sessions", "/api/schema"],
            }

    return app


def serve(config: ServiceConfig, embedder=None, llm=None) -> None:
    import uvicorn

    app = build_app(config, embedder=embedder, llm=llm)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
