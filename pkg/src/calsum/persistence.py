"""Session state export/import and the user-facing download formats.

State files are canonical JSON (sorted keys, UTF-8, compact separators,
version "1"), so export -> import -> export is byte-identical. Raw document
bytes are never stored, only extracted sentences; embeddings are rebuilt
lazily from settings after import.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Sequence

from .classifiers import ClassifierConfig, LABEL_VALUES
from .embeddings import EMBEDDING_KINDS, EXTERNAL_DENSE, EmbeddingConfig
from .errors import InvariantViolation, MalformedInput, UnsupportedVersion
from .ingestion import Document, Sentence
from .retrieval import PHASES
from .session import LabelEvent, Session, SessionSettings, ShownRecord

STATE_VERSION = "1"


def _canonical_json(payload: dict) -> bytes:
    return json.dumps(
        payload, ensure_ascii=False, sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def _document_payload(document: Document) -> dict:
    return {
        "doc_id": document.doc_id,
        "filename": document.filename,
        "sentences": [{"index": s.index, "text": s.text} for s in document.sentences],
    }


def settings_payload(session: Session) -> dict | None:
    settings = session.settings
    if settings is None:
        return None
    return {
        "embedding": {
            "kind": settings.embedding.kind,
            "provider_endpoint": settings.embedding.provider_endpoint,
        },
        "classifier": {
            "kind": settings.classifier.kind,
            "regularization": settings.classifier.regularization,
            "iterations": settings.classifier.iterations,
            "step_size": settings.classifier.step_size,
            "seed": settings.classifier.seed,
        },
        "batch_size": settings.batch_size,
        "stop_threshold": session.stop.threshold,
    }


def export_state(session: Session) -> bytes:
    """Complete serialization of a session as canonical JSON bytes."""
    payload = {
        "version": STATE_VERSION,
        "session_id": session.session_id,
        "query": session.query,
        "settings": settings_payload(session),
        "documents": [_document_payload(d) for d in session.documents],
        "history": [
            {
                "doc_id": e.doc_id,
                "index": e.index,
                "label": e.label,
                "phase": e.phase,
                "batch": e.batch,
                "position": e.position,
            }
            for e in session.label_history
        ],
        "shown": [
            {
                "doc_id": r.doc_id,
                "index": r.index,
                "phase": r.phase,
                "batch": r.batch,
                "position": r.position,
            }
            for r in session.shown
        ],
        "pending_batch": session.pending_batch,
        "stop_counter": session.stop.consecutive_empty_turns,
    }
    return _canonical_json(payload)


def export_corpus(documents: Sequence[Document]) -> bytes:
    """Documents-only state file, as written by the ingest command."""
    return _canonical_json(
        {
            "version": STATE_VERSION,
            "documents": [_document_payload(d) for d in documents],
        }
    )


def _parse_json(data: bytes) -> dict:
    try:
        payload = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedInput(f"not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise MalformedInput("top-level JSON value must be an object")
    version = payload.get("version")
    if version != STATE_VERSION:
        raise UnsupportedVersion(f"unsupported state version {version!r}")
    return payload


def _require(payload: dict, key: str, kind) -> object:
    if key not in payload:
        raise MalformedInput(f"missing field {key!r}")
    value = payload[key]
    if not isinstance(value, kind):
        raise MalformedInput(f"field {key!r} has wrong type")
    return value


def _parse_documents(payload: dict) -> list[Document]:
    documents = []
    seen_ids: set[str] = set()
    for entry in _require(payload, "documents", list):
        if not isinstance(entry, dict):
            raise MalformedInput("document entries must be objects")
        doc_id = _require(entry, "doc_id", str)
        filename = _require(entry, "filename", str)
        if doc_id in seen_ids:
            raise InvariantViolation(f"duplicate doc_id {doc_id!r}")
        seen_ids.add(doc_id)
        sentences = []
        for i, item in enumerate(_require(entry, "sentences", list), start=1):
            if not isinstance(item, dict):
                raise MalformedInput("sentence entries must be objects")
            index = _require(item, "index", int)
            text = _require(item, "text", str)
            if index != i:
                raise InvariantViolation(
                    f"document {doc_id!r} sentence indices are not contiguous"
                )
            if not text.strip():
                raise InvariantViolation(f"document {doc_id!r} has a blank sentence")
            sentences.append(Sentence(doc_id=doc_id, index=index, text=text))
        documents.append(
            Document(
                doc_id=doc_id,
                filename=filename,
                raw_text="\n".join(s.text for s in sentences),
                sentences=tuple(sentences),
            )
        )
    return documents


def import_corpus(data: bytes) -> list[Document]:
    return _parse_documents(_parse_json(data))


def _parse_settings(raw: object, session: Session) -> SessionSettings | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        raise MalformedInput("settings must be an object or null")
    embedding_raw = _require(raw, "embedding", dict)
    kind = _require(embedding_raw, "kind", str)
    if kind not in EMBEDDING_KINDS:
        raise MalformedInput(f"unknown embedding kind {kind!r}")
    endpoint = embedding_raw.get("provider_endpoint")
    if endpoint is not None and not isinstance(endpoint, str):
        raise MalformedInput("provider_endpoint must be a string or null")
    if (kind == EXTERNAL_DENSE) != (endpoint is not None):
        raise InvariantViolation(
            "provider_endpoint must be present exactly for external-dense"
        )
    classifier_raw = _require(raw, "classifier", dict)
    try:
        classifier = ClassifierConfig(
            kind=_require(classifier_raw, "kind", str),
            regularization=float(_require(classifier_raw, "regularization", (int, float))),
            iterations=_require(classifier_raw, "iterations", int),
            step_size=float(_require(classifier_raw, "step_size", (int, float))),
            seed=_require(classifier_raw, "seed", int),
        )
    except ValueError as exc:
        raise MalformedInput(str(exc)) from exc
    batch_size = _require(raw, "batch_size", int)
    if batch_size < 1:
        raise InvariantViolation("batch_size must be >= 1")
    threshold = _require(raw, "stop_threshold", int)
    if threshold < 1:
        raise InvariantViolation("stop_threshold must be >= 1")
    session.stop.threshold = threshold
    return SessionSettings(
        embedding=EmbeddingConfig(kind=kind, provider_endpoint=endpoint),
        classifier=classifier,
        batch_size=batch_size,
    )


def import_state(data: bytes, max_documents: int | None = None) -> Session:
    """Rebuild a session from exported state bytes.

    The result is behaviorally identical to the exported session: replaying
    a label script yields the same batches. Embeddings are not stored and
    are recomputed on first use.
    """
    payload = _parse_json(data)
    session = Session(session_id=_require(payload, "session_id", str))
    documents = _parse_documents(payload)
    for document in documents:
        session.documents.append(document)
    session.max_documents = max(
        max_documents if max_documents is not None else len(documents),
        len(documents),
    )
    session.query = _require(payload, "query", str)
    session.settings = _parse_settings(payload.get("settings"), session)

    keys = {s.key for s in session.sentences()}

    raw_shown = payload.get("shown")
    if raw_shown is None:
        # Minimal files carry only history; the presentation log is then
        # the first event per sentence, in position order.
        raw_shown = []
        seen: set[tuple[str, int]] = set()
        for entry in sorted(
            _require(payload, "history", list),
            key=lambda e: e.get("position", 0) if isinstance(e, dict) else 0,
        ):
            if not isinstance(entry, dict):
                raise MalformedInput("history entries must be objects")
            key = (entry.get("doc_id"), entry.get("index"))
            if key in seen:
                continue
            seen.add(key)
            raw_shown.append(
                {k: entry.get(k) for k in ("doc_id", "index", "phase", "batch", "position")}
            )
    if not isinstance(raw_shown, list):
        raise MalformedInput("field 'shown' has wrong type")

    shown: list[ShownRecord] = []
    seen_keys: set[tuple[str, int]] = set()
    for entry in raw_shown:
        if not isinstance(entry, dict):
            raise MalformedInput("shown entries must be objects")
        record = ShownRecord(
            doc_id=_require(entry, "doc_id", str),
            index=_require(entry, "index", int),
            phase=_require(entry, "phase", str),
            batch=_require(entry, "batch", int),
            position=_require(entry, "position", int),
        )
        if record.key not in keys:
            raise InvariantViolation(f"shown record references missing {record.key}")
        if record.key in seen_keys:
            raise InvariantViolation(f"sentence {record.key} shown twice")
        if shown and record.position <= shown[-1].position:
            raise InvariantViolation("shown positions must be strictly increasing")
        if record.position < 1:
            raise InvariantViolation("shown positions start at 1")
        if record.phase not in PHASES:
            raise InvariantViolation(f"unknown phase {record.phase!r}")
        if record.batch < 1 or (shown and record.batch < shown[-1].batch):
            raise InvariantViolation("batch numbers must be issued in order")
        seen_keys.add(record.key)
        shown.append(record)
    session.shown = shown

    first_shown = session.first_shown()
    history: list[LabelEvent] = []
    for entry in _require(payload, "history", list):
        if not isinstance(entry, dict):
            raise MalformedInput("history entries must be objects")
        event = LabelEvent(
            doc_id=_require(entry, "doc_id", str),
            index=_require(entry, "index", int),
            label=_require(entry, "label", str),
            phase=_require(entry, "phase", str),
            batch=_require(entry, "batch", int),
            position=_require(entry, "position", int),
        )
        if event.key not in keys:
            raise InvariantViolation(f"label event references missing {event.key}")
        if event.key not in first_shown:
            raise InvariantViolation(
                f"label event for {event.key} which was never shown"
            )
        if event.label not in LABEL_VALUES:
            raise InvariantViolation(f"unknown label {event.label!r}")
        record = first_shown[event.key]
        if (event.batch, event.phase, event.position) != (
            record.batch,
            record.phase,
            record.position,
        ):
            raise InvariantViolation(
                f"label event for {event.key} disagrees with presentation log"
            )
        history.append(event)
    session.label_history = history

    pending = payload.get("pending_batch")
    if pending is not None:
        if not isinstance(pending, int) or pending != session.batch_counter:
            raise InvariantViolation("pending_batch must be the last issued batch")
    session.pending_batch = pending

    counter = _require(payload, "stop_counter", int)
    if counter < 0:
        raise InvariantViolation("stop_counter must be non-negative")
    session.stop.consecutive_empty_turns = counter
    return session


def export_history_csv(session: Session) -> bytes:
    """Label history as RFC-4180 CSV, one row per event in presentation
    order, with the exact header the downstream tooling expects."""
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(
        ["position", "document", "sentence_index", "phase", "batch", "label", "text"]
    )
    filenames = {d.doc_id: d.filename for d in session.documents}
    texts = {s.key: s.text for s in session.sentences()}
    for event in sorted(session.label_history, key=lambda e: e.position):
        writer.writerow(
            [
                event.position,
                filenames.get(event.doc_id, event.doc_id),
                event.index,
                event.phase,
                event.batch,
                event.label,
                texts.get(event.key, ""),
            ]
        )
    return buffer.getvalue().encode("utf-8")


def export_summary_txt(session: Session) -> bytes:
    """The query-focused summary: query paragraph, blank line, then each
    relevant sentence tagged with its source."""
    filenames = {d.doc_id: d.filename for d in session.documents}
    lines = [session.query, ""]
    for sentence in session.relevant_sentences():
        lines.append(
            f"{sentence.text} [{filenames[sentence.doc_id]}, sentence {sentence.index}]"
        )
    return ("\n".join(lines) + "\n").encode("utf-8")
