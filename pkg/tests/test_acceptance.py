"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible with ``pytest -s`` or in
captured output) so the suite doubles as a checklist.
"""

from __future__ import annotations

import functools
import math
import threading
import time

import numpy as np
import pytest
import requests as http

from calsum import embeddings as emb
from calsum.classifiers import IRRELEVANT, RELEVANT, logistic_loss_and_gradient
from calsum.errors import Exhausted
from calsum.ingestion import Document, Sentence
from calsum.metrics import (
    NEGATIVE,
    POSITIVE,
    QuestionnaireResponse,
    UnigramDistribution,
    kl_divergence,
    precision,
    questionnaire_score,
    unigram_distribution,
)
from calsum.persistence import export_history_csv, export_state, import_state
from calsum.session import Session, SessionSettings
from calsum.simulate import make_synthetic_collection, run_scripted_session, simulate


def criterion(name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                result = fn(*args, **kwargs)
            except BaseException:
                print(f"\nFAIL  {name}")
                raise
            print(f"\nPASS  {name}")
            return result

        return wrapper

    return decorate


# ---------------------------------------------------------------------------
# TF-IDF / cosine oracle equivalence


def _oracle_tfidf(corpus, text):
    from collections import Counter

    n = len(corpus)
    df = Counter()
    for doc in corpus:
        df.update(set(emb.tokenize(doc, emb.WORD_UNIGRAM)))
    counts = Counter(
        t for t in emb.tokenize(text, emb.WORD_UNIGRAM) if t in df
    )
    raw = {t: c * (math.log((1 + n) / (1 + df[t])) + 1.0) for t, c in counts.items()}
    norm = math.sqrt(sum(w * w for w in raw.values()))
    return {t: w / norm for t, w in raw.items()} if norm else {}


def _oracle_cosine(a, b):
    dot = sum(w * b.get(t, 0.0) for t, w in a.items())
    na = math.sqrt(sum(w * w for w in a.values()))
    nb = math.sqrt(sum(w * w for w in b.values()))
    return dot / (na * nb) if na and nb else 0.0


@criterion("TFIDF/cosine matches brute-force oracle within 1e-9 on 5 random corpora")
def test_tfidf_cosine_oracle_equivalence():
    rng = np.random.default_rng(11)
    words = [f"w{i:02d}" for i in range(40)]
    started = time.perf_counter()
    for _ in range(5):
        corpus = [
            " ".join(rng.choice(words, size=rng.integers(2, 9)))
            for _ in range(int(rng.integers(3, 21)))
        ]
        vocab = emb.fit_vocabulary(corpus, emb.WORD_UNIGRAM)
        vectors = [emb.embed(t, vocab) for t in corpus]
        oracle_vectors = [_oracle_tfidf(corpus, t) for t in corpus]
        index_to_term = {i: t for t, i in vocab.term_to_index.items()}
        for vector, expected in zip(vectors, oracle_vectors):
            actual = {index_to_term[i]: w for i, w in vector.entries}
            assert set(actual) == set(expected)
            for term, weight in expected.items():
                assert abs(actual[term] - weight) < 1e-9
        for i in range(len(corpus)):
            for j in range(len(corpus)):
                expected = _oracle_cosine(oracle_vectors[i], oracle_vectors[j])
                assert abs(emb.similarity(vectors[i], vectors[j]) - expected) < 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0, f"oracle comparison took {elapsed:.2f}s"


# ---------------------------------------------------------------------------
# Gradient check


@criterion("logistic gradient matches centered finite differences (rel err < 1e-5)")
def test_gradient_check():
    rng = np.random.default_rng(1234)
    h = 1e-5
    for _ in range(10):
        n = int(rng.integers(4, 16))
        d = int(rng.integers(2, 31))
        X = rng.normal(size=(n, d))
        y = rng.integers(0, 2, size=n).astype(float)
        if y.min() == y.max():
            y[0] = 1.0 - y[0]
        sw = rng.uniform(0.5, 2.0, size=n)
        w = rng.normal(size=d)
        b = float(rng.normal())

        _, grad_w, grad_b = logistic_loss_and_gradient(w, b, X, y, sw, 0.01)

        numeric = np.zeros(d)
        for j in range(d):
            wp, wm = w.copy(), w.copy()
            wp[j] += h
            wm[j] -= h
            numeric[j] = (
                logistic_loss_and_gradient(wp, b, X, y, sw, 0.01)[0]
                - logistic_loss_and_gradient(wm, b, X, y, sw, 0.01)[0]
            ) / (2 * h)
        numeric_b = (
            logistic_loss_and_gradient(w, b + h, X, y, sw, 0.01)[0]
            - logistic_loss_and_gradient(w, b - h, X, y, sw, 0.01)[0]
        ) / (2 * h)

        rel_w = np.linalg.norm(grad_w - numeric) / max(np.linalg.norm(numeric), 1e-12)
        rel_b = abs(grad_b - numeric_b) / max(abs(numeric_b), 1e-12)
        assert rel_w < 1e-5
        assert rel_b < 1e-5


# ---------------------------------------------------------------------------
# CAL beats the static baseline


@criterion("CAL recall@30% effort beats static VSM in >= 80% of 20 seeds, gap > 0")
def test_cal_beats_baseline():
    started = time.perf_counter()
    collections = {
        seed: make_synthetic_collection(
            n_docs=5, sentences_per_doc=100, relevant_fraction=0.1, seed=seed
        )
        for seed in range(20)
    }
    report = simulate(
        lambda s: collections[s].documents,
        lambda s: collections[s].query,
        lambda s: collections[s].gold,
        SessionSettings(),
        seeds=range(20),
        recall_effort=0.3,
    )
    elapsed = time.perf_counter() - started
    summary = report["summary"]
    assert summary["wins"] >= 16, f"CAL won only {summary['wins']}/20 seeds"
    assert summary["mean_gap"] > 0
    assert elapsed < 60.0, f"simulation took {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# Stopping rule


@criterion("all-irrelevant reviewer stops after exactly 3 explore submissions")
def test_stopping_rule():
    col = make_synthetic_collection(n_docs=2, sentences_per_doc=30, seed=5)
    all_irrelevant = {key: False for key in col.gold}
    run = run_scripted_session(
        col.documents, col.query, all_irrelevant, SessionSettings(), use_classifier=True
    )
    assert run.ended_by == "stop-rule"
    assert sum(1 for t in run.turns if t.phase == "explore") == 3
    assert run.session.should_stop

    # any relevant label on an explore batch resets the counter to 0
    session = Session(max_documents=2)
    for document in col.documents:
        session.add_prepared_document(document)
    session.process(SessionSettings(batch_size=5))
    session.query = col.query
    for expected in (1, 2):
        result = session.explore()
        out = session.submit_labels(
            [(i.sentence.doc_id, i.sentence.index, IRRELEVANT) for i in result.batch.items]
        )
        assert out["stop_counter"] == expected
    result = session.explore()
    events = [
        (i.sentence.doc_id, i.sentence.index, RELEVANT if n == 0 else IRRELEVANT)
        for n, i in enumerate(result.batch.items)
    ]
    assert session.submit_labels(events)["stop_counter"] == 0


# ---------------------------------------------------------------------------
# Metrics


@criterion("precision(2 relevant, 5 shown) = 0.4; KL identity/positivity/example")
def test_metrics_criteria():
    from calsum.session import LabelEvent

    history = [
        LabelEvent(
            doc_id="d001", index=i, label=RELEVANT if i <= 2 else IRRELEVANT,
            phase="search", batch=1, position=i,
        )
        for i in range(1, 6)
    ]
    assert precision(history, 5) == 0.4

    rng = np.random.default_rng(9)
    support = [f"t{i}" for i in range(15)]
    for _ in range(100):
        p = unigram_distribution(
            [" ".join(rng.choice(support, size=rng.integers(0, 40)))], support
        )
        q = unigram_distribution(
            [" ".join(rng.choice(support, size=rng.integers(0, 40)))], support
        )
        assert abs(kl_divergence(p, p)) <= 1e-12
        assert kl_divergence(p, q) >= 0.0

    p = UnigramDistribution(probabilities={"a": 0.75, "b": 0.25})
    q = UnigramDistribution(probabilities={"a": 0.25, "b": 0.75})
    assert abs(kl_divergence(p, q) - 0.5493) < 1e-4


@criterion("questionnaire arithmetic: SUS 50/100, raw maxima 64 and 16")
def test_questionnaire_criteria():
    alternating = lambda pos, neg: tuple(
        (pos if i % 2 == 0 else neg, POSITIVE if i % 2 == 0 else NEGATIVE)
        for i in range(10)
    )
    assert questionnaire_score(
        QuestionnaireResponse(items=alternating(3, 3)), "sus"
    ) == 50.0
    assert questionnaire_score(
        QuestionnaireResponse(items=alternating(5, 1)), "sus"
    ) == 100.0
    assert questionnaire_score(
        QuestionnaireResponse(items=tuple([(5, POSITIVE)] * 16)), "raw"
    ) == 64.0
    assert questionnaire_score(
        QuestionnaireResponse(items=tuple([(5, POSITIVE)] * 4)), "raw"
    ) == 16.0


# ---------------------------------------------------------------------------
# Persistence round-trip with replay


def _forty_sentence_documents():
    rng = np.random.default_rng(21)
    words = [f"term{i:02d}" for i in range(30)]
    documents = []
    for d in (1, 2):
        doc_id = f"d{d:03d}"
        sentences = tuple(
            Sentence(
                doc_id=doc_id,
                index=i,
                text=" ".join(rng.choice(words, size=6)).capitalize() + ".",
            )
            for i in range(1, 21)
        )
        documents.append(
            Document(
                doc_id=doc_id,
                filename=f"doc{d}.txt",
                raw_text="\n".join(s.text for s in sentences),
                sentences=sentences,
            )
        )
    return documents


def _label_batch(session, batch):
    events = [
        (
            item.sentence.doc_id,
            item.sentence.index,
            RELEVANT if (item.sentence.index % 3 == 0) else IRRELEVANT,
        )
        for item in batch.items
    ]
    session.submit_labels(events)
    return len(events)


@criterion("export/import/replay of a 40-event session reproduces identical batches")
def test_persistence_round_trip_replay():
    def fresh():
        session = Session(max_documents=2)
        for document in _forty_sentence_documents():
            session.add_prepared_document(document)
        session.process(SessionSettings(batch_size=5))
        return session

    original = fresh()
    events = _label_batch(original, original.search("term00 term07 term13"))
    while events < 20:
        events += _label_batch(original, original.explore().batch)

    restored = import_state(export_state(original))

    replayed_a, replayed_b = [], []
    while True:
        try:
            batch_a = original.explore().batch
        except Exhausted:
            with pytest.raises(Exhausted):
                restored.explore()
            break
        batch_b = restored.explore().batch
        replayed_a.append(batch_a)
        replayed_b.append(batch_b)
        events += _label_batch(original, batch_a)
        _label_batch(restored, batch_b)
    assert replayed_a == replayed_b
    assert len(replayed_a) == 4
    assert events == 40
    assert export_state(original) == export_state(restored)

    csv_bytes = export_history_csv(original).decode()
    lines = csv_bytes.splitlines()
    assert lines[0] == "position,document,sentence_index,phase,batch,label,text"
    assert len(lines) == 1 + len(original.label_history)
    assert len(original.label_history) == 40


# ---------------------------------------------------------------------------
# Service contract against a live server


@pytest.fixture
def live_server():
    import uvicorn

    from calsum.service import ServiceConfig, create_app

    app = create_app(ServiceConfig())
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("server did not start")
        time.sleep(0.01)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}/api/v1"
    server.should_exit = True
    thread.join(timeout=5)


@criterion("full scripted workflow and concurrent labeling against a running service")
def test_service_contract(live_server):
    import base64

    base = live_server
    assert http.get(f"{base}/health", timeout=5).json() == {"status": "ok"}

    sid = http.post(f"{base}/sessions", timeout=5).json()["session_id"]

    texts = {
        "one.txt": " ".join(
            f"Alpha topic sentence number {i} mentions cats and retrieval." for i in range(12)
        ),
        "two.txt": " ".join(
            f"Beta background sentence number {i} covers noise and filler." for i in range(12)
        ),
    }
    for filename, text in texts.items():
        resp = http.post(
            f"{base}/sessions/{sid}/documents",
            json={
                "filename": filename,
                "content_base64": base64.b64encode(text.encode()).decode(),
            },
            timeout=5,
        )
        assert resp.status_code == 200
        assert resp.json()["sentence_count"] == 12

    assert (
        http.post(
            f"{base}/sessions/{sid}/process", json={"batch_size": 4}, timeout=5
        ).status_code
        == 200
    )

    batch = http.post(
        f"{base}/sessions/{sid}/search",
        json={"query": "cats and retrieval"},
        timeout=5,
    ).json()
    assert len(batch["items"]) == 4
    shown_keys = {(i["doc_id"], i["index"]) for i in batch["items"]}
    http.post(
        f"{base}/sessions/{sid}/labels",
        json={
            "events": [
                {"doc_id": i["doc_id"], "index": i["index"], "label": "relevant"}
                for i in batch["items"][:1]
            ]
            + [
                {"doc_id": i["doc_id"], "index": i["index"], "label": "irrelevant"}
                for i in batch["items"][1:]
            ]
        },
        timeout=5,
    )

    for _ in range(3):
        explored = http.post(f"{base}/sessions/{sid}/explore", timeout=10).json()
        keys = {(i["doc_id"], i["index"]) for i in explored["batch"]["items"]}
        assert not keys & shown_keys
        shown_keys |= keys
        assert sum(explored["score_histogram"]["counts"]) == 24 - len(shown_keys) + len(keys)
        resp = http.post(
            f"{base}/sessions/{sid}/labels",
            json={
                "events": [
                    {"doc_id": i["doc_id"], "index": i["index"], "label": "irrelevant"}
                    for i in explored["batch"]["items"]
                ]
            },
            timeout=5,
        )
        assert resp.status_code == 200

    state = http.get(f"{base}/sessions/{sid}/download/state-json", timeout=5).content
    restored = import_state(state)
    assert len(restored.label_history) == 16
    assert export_state(restored) == state

    csv_data = http.get(f"{base}/sessions/{sid}/download/history-csv", timeout=5).content
    lines = csv_data.decode().splitlines()
    assert lines[0] == "position,document,sentence_index,phase,batch,label,text"
    assert len(lines) == 17

    summary = http.get(f"{base}/sessions/{sid}/download/summary-txt", timeout=5).content
    assert summary.decode().startswith("cats and retrieval\n\n")

    # concurrent relabeling from two clients: accepted events all land
    results = []
    lock = threading.Lock()
    keys = sorted(shown_keys)

    def hammer(label):
        count = 0
        for doc_id, index in keys:
            resp = http.post(
                f"{base}/sessions/{sid}/labels",
                json={"events": [{"doc_id": doc_id, "index": index, "label": label}]},
                timeout=5,
            )
            if resp.status_code == 200:
                count += 1
        with lock:
            results.append(count)

    threads = [
        threading.Thread(target=hammer, args=("relevant",)),
        threading.Thread(target=hammer, args=("irrelevant",)),
    ]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    accepted = sum(results)
    assert accepted == 2 * len(keys)
    final = import_state(
        http.get(f"{base}/sessions/{sid}/download/state-json", timeout=5).content
    )
    assert len(final.label_history) == 16 + accepted
    positions = [r.position for r in final.shown]
    assert positions == list(range(1, len(positions) + 1))
