"""HTTP facade over sessions, consumed by the browser UI and by scripts.

Sessions live in memory with idle expiry. Each session is single-writer:
every endpoint that touches a session runs under that session's lock, so
interleaved clients cannot corrupt state. No authentication; this is a
single-tenant research tool.
"""

from __future__ import annotations

import base64
import binascii
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from . import persistence
from .classifiers import ClassifierConfig, LINEAR_SVM, LOGISTIC_REGRESSION
from .embeddings import EMBEDDING_KINDS, EXTERNAL_DENSE, EmbeddingConfig
from .errors import (
    CalsumError,
    DuplicateInBatch,
    DimensionMismatch,
    EmptyCorpus,
    EmptyDocument,
    Exhausted,
    ExtractionFailed,
    InvariantViolation,
    MalformedInput,
    NotProcessed,
    NoRelevantGold,
    NothingShown,
    ProviderUnavailable,
    ResponseOutOfRange,
    SessionNotFound,
    SingleClass,
    SupportMismatch,
    TooManyDocuments,
    UnknownSentence,
    UnsupportedFormat,
    UnsupportedVersion,
    WrongItemCount,
)
from .ingestion import TextExtractor, build_extractors
from .retrieval import Batch
from .session import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_MAX_DOCUMENTS,
    DEFAULT_STOP_THRESHOLD,
    Session,
    SessionSettings,
)

API_PREFIX = "/api/v1"
HISTOGRAM_BINS = 20

HTTP_STATUS = {
    SessionNotFound: 404,
    UnsupportedFormat: 415,
    EmptyDocument: 422,
    ExtractionFailed: 422,
    TooManyDocuments: 409,
    EmptyCorpus: 409,
    NotProcessed: 409,
    Exhausted: 409,
    UnknownSentence: 422,
    DuplicateInBatch: 422,
    SingleClass: 409,
    ProviderUnavailable: 502,
    DimensionMismatch: 422,
    MalformedInput: 400,
    UnsupportedVersion: 400,
    InvariantViolation: 422,
    NothingShown: 409,
    SupportMismatch: 422,
    WrongItemCount: 422,
    ResponseOutOfRange: 422,
    NoRelevantGold: 422,
}

CLASSIFIER_KINDS = (LOGISTIC_REGRESSION, LINEAR_SVM)


@dataclass
class ServiceConfig:
    extractors: list[TextExtractor] = field(default_factory=build_extractors)
    provider_endpoint: str | None = None
    max_documents: int = DEFAULT_MAX_DOCUMENTS
    session_ttl_seconds: float = 24 * 3600.0
    static_dir: str | None = None


@dataclass
class SessionHolder:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    last_access: float = field(default_factory=time.monotonic)


class SessionStore:
    """In-memory session registry with idle expiry."""

    def __init__(self, ttl_seconds: float):
        self.ttl_seconds = ttl_seconds
        self._sessions: dict[str, SessionHolder] = {}
        self._registry_lock = threading.Lock()

    def create(self, max_documents: int) -> Session:
        session = Session(session_id=uuid.uuid4().hex, max_documents=max_documents)
        with self._registry_lock:
            self._sweep()
            self._sessions[session.session_id] = SessionHolder(session=session)
        return session

    def get(self, session_id: str) -> SessionHolder:
        with self._registry_lock:
            self._sweep()
            holder = self._sessions.get(session_id)
            if holder is None:
                raise SessionNotFound(f"no session {session_id!r}")
            holder.last_access = time.monotonic()
            return holder

    def _sweep(self):
        now = time.monotonic()
        expired = [
            sid
            for sid, holder in self._sessions.items()
            if now - holder.last_access > self.ttl_seconds
        ]
        for sid in expired:
            del self._sessions[sid]


class UploadBody(BaseModel):
    filename: str
    content_base64: str


class ProcessBody(BaseModel):
    embedding: str = "word-unigram-tfidf"
    classifier: str = "logistic-regression"
    batch_size: int = DEFAULT_BATCH_SIZE
    stop_threshold: int = DEFAULT_STOP_THRESHOLD
    provider_endpoint: str | None = None


class SearchBody(BaseModel):
    query: str


class LabelEventBody(BaseModel):
    doc_id: str
    index: int
    label: str


class LabelsBody(BaseModel):
    events: list[LabelEventBody]


def _batch_payload(batch: Batch, session: Session) -> dict:
    filenames = {d.doc_id: d.filename for d in session.documents}
    return {
        "batch_number": batch.batch_number,
        "phase": batch.phase,
        "items": [
            {
                "doc_id": item.sentence.doc_id,
                "document": filenames[item.sentence.doc_id],
                "index": item.sentence.index,
                "text": item.sentence.text,
                "score": float(item.score),
            }
            for item in batch.items
        ],
    }


def _score_histogram(scores: list[float]) -> dict:
    clipped = np.clip(np.array(scores, dtype=float), 0.0, 1.0) if scores else np.zeros(0)
    counts, edges = np.histogram(clipped, bins=HISTOGRAM_BINS, range=(0.0, 1.0))
    return {"bin_edges": [float(e) for e in edges], "counts": [int(c) for c in counts]}


def create_app(config: ServiceConfig | None = None) -> FastAPI:
    config = config or ServiceConfig()
    app = FastAPI(title="calsum", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    store = SessionStore(ttl_seconds=config.session_ttl_seconds)
    app.state.store = store
    app.state.config = config

    @app.exception_handler(CalsumError)
    def _calsum_error(_request: Request, exc: CalsumError):
        status = HTTP_STATUS.get(type(exc), 422)
        return JSONResponse(
            status_code=status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.exception_handler(RequestValidationError)
    def _validation_error(_request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "malformed_input", "message": str(exc)}},
        )

    @app.exception_handler(ValueError)
    def _value_error(_request: Request, exc: ValueError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "malformed_input", "message": str(exc)}},
        )

    @app.get(API_PREFIX + "/health")
    def health():
        return {"status": "ok"}

    @app.post(API_PREFIX + "/sessions")
    def create_session():
        session = store.create(max_documents=config.max_documents)
        return {"session_id": session.session_id}

    @app.post(API_PREFIX + "/sessions/{session_id}/documents")
    def upload_document(session_id: str, body: UploadBody):
        holder = store.get(session_id)
        try:
            content = base64.b64decode(body.content_base64, validate=True)
        except (binascii.Error, ValueError) as exc:
            raise MalformedInput(f"invalid base64 content: {exc}") from exc
        with holder.lock:
            document = holder.session.add_document(
                body.filename, content, config.extractors
            )
            return {
                "doc_id": document.doc_id,
                "filename": document.filename,
                "sentence_count": len(document.sentences),
            }

    @app.post(API_PREFIX + "/sessions/{session_id}/process")
    def process(session_id: str, body: ProcessBody):
        holder = store.get(session_id)
        if body.embedding not in EMBEDDING_KINDS:
            raise MalformedInput(f"unknown embedding kind {body.embedding!r}")
        if body.classifier not in CLASSIFIER_KINDS:
            raise MalformedInput(f"unknown classifier kind {body.classifier!r}")
        endpoint = body.provider_endpoint or config.provider_endpoint
        if body.embedding != EXTERNAL_DENSE:
            endpoint = None
        elif endpoint is None:
            raise MalformedInput(
                "external-dense embedding requires a provider endpoint"
            )
        settings = SessionSettings(
            embedding=EmbeddingConfig(kind=body.embedding, provider_endpoint=endpoint),
            classifier=ClassifierConfig(kind=body.classifier),
            batch_size=body.batch_size,
        )
        with holder.lock:
            holder.session.process(settings, stop_threshold=body.stop_threshold)
            return {"ok": True, "settings": persistence.settings_payload(holder.session)}

    @app.post(API_PREFIX + "/sessions/{session_id}/search")
    def search(session_id: str, body: SearchBody):
        holder = store.get(session_id)
        with holder.lock:
            batch = holder.session.search(body.query)
            return _batch_payload(batch, holder.session)

    @app.post(API_PREFIX + "/sessions/{session_id}/explore")
    def explore(session_id: str):
        holder = store.get(session_id)
        with holder.lock:
            session = holder.session
            result = session.explore()
            scores = [score for _, score in result.candidate_scores]
            per_document = []
            for document in session.documents:
                doc_scores = [
                    score
                    for sentence, score in result.candidate_scores
                    if sentence.doc_id == document.doc_id
                ]
                per_document.append(
                    {
                        "doc_id": document.doc_id,
                        "filename": document.filename,
                        "candidate_count": len(doc_scores),
                        "mean_score": (
                            float(sum(doc_scores) / len(doc_scores))
                            if doc_scores
                            else 0.0
                        ),
                    }
                )
            return {
                "batch": _batch_payload(result.batch, session),
                "used_classifier": result.used_classifier,
                "score_histogram": _score_histogram(scores),
                "per_document_scores": per_document,
                "stop_counter": session.stop.consecutive_empty_turns,
                "should_stop": session.should_stop,
            }

    @app.post(API_PREFIX + "/sessions/{session_id}/labels")
    def submit_labels(session_id: str, body: LabelsBody):
        holder = store.get(session_id)
        events = [(e.doc_id, e.index, e.label) for e in body.events]
        with holder.lock:
            return holder.session.submit_labels(events)

    @app.get(API_PREFIX + "/sessions/{session_id}/documents")
    def get_documents(session_id: str):
        holder = store.get(session_id)
        with holder.lock:
            session = holder.session
            labels = session.current_labels()
            shown = session.shown_keys()
            return {
                "documents": [
                    {
                        "doc_id": d.doc_id,
                        "filename": d.filename,
                        "sentence_count": len(d.sentences),
                        "sentences": [
                            {
                                "index": s.index,
                                "text": s.text,
                                "label": labels.get(s.key),
                                "shown": s.key in shown,
                            }
                            for s in d.sentences
                        ],
                    }
                    for d in session.documents
                ]
            }

    @app.get(API_PREFIX + "/sessions/{session_id}/history")
    def get_history(session_id: str):
        holder = store.get(session_id)
        with holder.lock:
            session = holder.session
            filenames = {d.doc_id: d.filename for d in session.documents}
            texts = {s.key: s.text for s in session.sentences()}
            return {
                "events": [
                    {
                        "position": e.position,
                        "doc_id": e.doc_id,
                        "document": filenames[e.doc_id],
                        "sentence_index": e.index,
                        "phase": e.phase,
                        "batch": e.batch,
                        "label": e.label,
                        "text": texts[e.key],
                    }
                    for e in sorted(session.label_history, key=lambda e: e.position)
                ]
            }

    @app.get(API_PREFIX + "/sessions/{session_id}/results")
    def get_results(session_id: str):
        holder = store.get(session_id)
        with holder.lock:
            session = holder.session
            filenames = {d.doc_id: d.filename for d in session.documents}
            return {
                "query": session.query,
                "label_counts": session.label_counts_per_document(),
                "relevant_sentences": [
                    {
                        "doc_id": s.doc_id,
                        "document": filenames[s.doc_id],
                        "index": s.index,
                        "text": s.text,
                    }
                    for s in session.relevant_sentences()
                ],
                "shown_count": len(session.shown),
                "total_sentences": len(session.sentences()),
                "stop_counter": session.stop.consecutive_empty_turns,
                "should_stop": session.should_stop,
            }

    @app.get(API_PREFIX + "/sessions/{session_id}/download/{kind}")
    def download(session_id: str, kind: str):
        holder = store.get(session_id)
        with holder.lock:
            session = holder.session
            if kind == "state-json":
                data = persistence.export_state(session)
                media, name = "application/json", "state.json"
            elif kind == "history-csv":
                data = persistence.export_history_csv(session)
                media, name = "text/csv", "history.csv"
            elif kind == "summary-txt":
                data = persistence.export_summary_txt(session)
                media, name = "text/plain", "summary.txt"
            else:
                raise MalformedInput(f"unknown download kind {kind!r}")
        return Response(
            content=data,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="{name}"'},
        )

    @app.post(API_PREFIX + "/sessions/{session_id}/clear")
    def clear(session_id: str):
        holder = store.get(session_id)
        with holder.lock:
            holder.session.clear_labels()
            return {"ok": True}

    if config.static_dir:
        app.mount("/", StaticFiles(directory=config.static_dir, html=True))

    return app
