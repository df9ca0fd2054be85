"""Shared test helpers: toy corpora, pre-wired sessions, and a stub
dense-embedding provider."""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from calsum.ingestion import Document, Sentence
from calsum.session import Session, SessionSettings


def build_documents(layout: dict[str, list[str]]) -> list[Document]:
    """filename -> sentence texts, with doc ids assigned in order."""
    documents = []
    for i, (filename, texts) in enumerate(layout.items(), start=1):
        doc_id = f"d{i:03d}"
        sentences = tuple(
            Sentence(doc_id=doc_id, index=j, text=t)
            for j, t in enumerate(texts, start=1)
        )
        documents.append(
            Document(
                doc_id=doc_id,
                filename=filename,
                raw_text="\n".join(texts),
                sentences=sentences,
            )
        )
    return documents


def build_session(
    layout: dict[str, list[str]],
    settings: SessionSettings | None = None,
    process: bool = True,
    **process_kwargs,
) -> Session:
    session = Session(max_documents=max(len(layout), 5))
    for document in build_documents(layout):
        session.add_prepared_document(document)
    if process:
        session.process(settings or SessionSettings(), **process_kwargs)
    return session


@pytest.fixture
def toy_corpus() -> dict[str, list[str]]:
    return {
        "alpha.txt": [
            "The cat sat on the mat.",
            "Dogs chase cats around the yard.",
            "Gradient descent minimizes the loss function.",
        ],
        "beta.txt": [
            "Cats nap in the afternoon sun.",
            "The loss decreases every iteration.",
        ],
    }


class StubProvider(BaseHTTPRequestHandler):
    """Deterministic dense-embedding provider: vector depends on the text."""

    calls = 0
    dimension = 4
    mixed = False

    def do_POST(self):
        type(self).calls += 1
        length = int(self.headers["Content-Length"])
        texts = json.loads(self.rfile.read(length))["texts"]
        vectors = []
        for i, text in enumerate(texts):
            dim = self.dimension + (1 if self.mixed and i % 2 else 0)
            head = [float(len(text) % 7), float(sum(map(ord, text)) % 13)]
            vectors.append(head + [0.5] * (dim - 2))
        body = json.dumps({"vectors": vectors}).encode()
        self.send_response(200)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, *args):
        pass


@pytest.fixture
def provider():
    server = ThreadingHTTPServer(("127.0.0.1", 0), StubProvider)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    StubProvider.calls = 0
    StubProvider.mixed = False
    yield f"http://127.0.0.1:{server.server_address[1]}/embed"
    server.shutdown()
