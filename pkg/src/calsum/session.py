"""The session aggregate: documents, query, labels, and the explore loop.

A session is single-writer: callers serialize mutations (the HTTP layer
holds a per-session lock). Everything here is deterministic given the
action sequence, so replaying a label script reproduces batches exactly.

The explore loop implements continuous active learning: retrain on all
current labels, score the not-yet-shown sentences, recommend the top
batch. Until both label classes exist, explore falls back to plain
vector-space ranking against the query, which is also what the search
phase does.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass, field
from typing import Sequence

from . import classifiers, embeddings, retrieval
from .classifiers import ClassifierConfig, LABEL_VALUES, RELEVANT
from .embeddings import EmbeddingConfig, Vector
from .errors import (
    DuplicateInBatch,
    EmptyCorpus,
    Exhausted,
    MalformedInput,
    NotProcessed,
    SingleClass,
    TooManyDocuments,
    UnknownSentence,
)
from .ingestion import (
    DEFAULT_MIN_SENTENCE_TOKENS,
    Document,
    Sentence,
    TextExtractor,
    ingest_document,
)
from .retrieval import Batch, PHASE_EXPLORE, PHASE_SEARCH

DEFAULT_BATCH_SIZE = 10
DEFAULT_MAX_DOCUMENTS = 5
DEFAULT_STOP_THRESHOLD = 3


@dataclass(frozen=True)
class ShownRecord:
    """One sentence presented to the user in one batch."""

    doc_id: str
    index: int
    phase: str
    batch: int
    position: int

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.index)


@dataclass(frozen=True)
class LabelEvent:
    """One judgment on one sentence; batch/phase/position are those of the
    sentence's first presentation, so relabels keep their original slot."""

    doc_id: str
    index: int
    label: str
    phase: str
    batch: int
    position: int

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.index)


@dataclass
class StopState:
    """Counts consecutive explore submissions with no relevant label."""

    consecutive_empty_turns: int = 0
    threshold: int = DEFAULT_STOP_THRESHOLD

    def should_stop(self) -> bool:
        return self.consecutive_empty_turns >= self.threshold


@dataclass
class SessionSettings:
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    batch_size: int = DEFAULT_BATCH_SIZE


@dataclass
class ExploreResult:
    batch: Batch
    candidate_scores: list[tuple[Sentence, float]]
    used_classifier: bool


class Session:
    """Mutable state for one labeling session."""

    def __init__(
        self,
        session_id: str | None = None,
        max_documents: int = DEFAULT_MAX_DOCUMENTS,
        min_sentence_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS,
    ):
        self.session_id = session_id or uuid.uuid4().hex
        self.max_documents = max_documents
        self.min_sentence_tokens = min_sentence_tokens
        self.documents: list[Document] = []
        self.query: str = ""
        self.settings: SessionSettings | None = None
        self.label_history: list[LabelEvent] = []
        self.shown: list[ShownRecord] = []
        self.pending_batch: int | None = None
        self.stop = StopState()
        # embedding caches, rebuilt lazily after documents/settings change
        self._vocabulary: embeddings.Vocabulary | None = None
        self._vectors: list[Vector] | None = None
        self._dense_cache: dict[str, embeddings.DenseVector] = {}
        self._query_vector: Vector | None = None
        self._query_vector_for: str | None = None

    # ------------------------------------------------------------------
    # documents

    def add_document(
        self, filename: str, content: bytes, extractors: Sequence[TextExtractor]
    ) -> Document:
        if len(self.documents) >= self.max_documents:
            raise TooManyDocuments(
                f"session already holds {self.max_documents} documents"
            )
        doc_id = f"d{len(self.documents) + 1:03d}"
        document = ingest_document(
            doc_id, filename, content, extractors, min_tokens=self.min_sentence_tokens
        )
        self.documents.append(document)
        self._invalidate_embeddings()
        return document

    def add_prepared_document(self, document: Document) -> None:
        """Attach an already-segmented document (corpus files, state import)."""
        if any(d.doc_id == document.doc_id for d in self.documents):
            raise MalformedInput(f"duplicate doc_id {document.doc_id!r}")
        self.documents.append(document)
        self._invalidate_embeddings()

    def sentences(self) -> list[Sentence]:
        """All sentences in canonical order (document insertion, then index)."""
        return [s for d in self.documents for s in d.sentences]

    def find_document(self, doc_id: str) -> Document | None:
        return next((d for d in self.documents if d.doc_id == doc_id), None)

    def get_sentence(self, doc_id: str, index: int) -> Sentence | None:
        document = self.find_document(doc_id)
        if document is None or not (1 <= index <= len(document.sentences)):
            return None
        return document.sentences[index - 1]

    # ------------------------------------------------------------------
    # processing / embeddings

    def process(self, settings: SessionSettings, stop_threshold: int | None = None):
        """Fix the session settings and embed the whole corpus now."""
        if not self.sentences():
            raise EmptyCorpus("no sentences to process; upload documents first")
        if settings.batch_size < 1:
            raise MalformedInput("batch_size must be >= 1")
        self.settings = settings
        if stop_threshold is not None:
            if stop_threshold < 1:
                raise MalformedInput("stop_threshold must be >= 1")
            self.stop.threshold = stop_threshold
        self._invalidate_embeddings()
        self._ensure_vectors()

    def _invalidate_embeddings(self):
        self._vocabulary = None
        self._vectors = None
        self._query_vector = None
        self._query_vector_for = None

    def _ensure_vectors(self) -> list[Vector]:
        if self.settings is None:
            raise NotProcessed("session has not been processed yet")
        if self._vectors is None:
            corpus = self.sentences()
            if not corpus:
                raise EmptyCorpus("no sentences to process")
            kind = self.settings.embedding.kind
            if kind == embeddings.EXTERNAL_DENSE:
                self._vectors = list(
                    embeddings.embed_external(
                        [s.text for s in corpus],
                        self.settings.embedding,
                        cache=self._dense_cache,
                    )
                )
                self._vocabulary = None
            else:
                token_kind = embeddings.token_kind_for(kind)
                self._vocabulary = embeddings.fit_vocabulary(corpus, token_kind)
                self._vectors = [
                    embeddings.embed(s.text, self._vocabulary) for s in corpus
                ]
        return self._vectors

    def _feature_dimension(self) -> int:
        vectors = self._ensure_vectors()
        if self._vocabulary is not None:
            return self._vocabulary.size
        return len(vectors[0].values) if vectors else 0

    def _query_vec(self) -> Vector | None:
        """Vector for the current query; None when the query is blank, which
        ranks by tie-break order only."""
        self._ensure_vectors()
        if not self.query.strip():
            return None
        if self._query_vector_for == self.query and self._query_vector is not None:
            return self._query_vector
        kind = self.settings.embedding.kind
        if kind == embeddings.EXTERNAL_DENSE:
            vector = embeddings.embed_external(
                [self.query], self.settings.embedding, cache=self._dense_cache
            )[0]
        else:
            vector = embeddings.embed(self.query, self._vocabulary)
        self._query_vector = vector
        self._query_vector_for = self.query
        return vector

    # ------------------------------------------------------------------
    # presentation bookkeeping

    @property
    def batch_counter(self) -> int:
        return self.shown[-1].batch if self.shown else 0

    def shown_keys(self) -> set[tuple[str, int]]:
        return {record.key for record in self.shown}

    def first_shown(self) -> dict[tuple[str, int], ShownRecord]:
        table: dict[tuple[str, int], ShownRecord] = {}
        for record in self.shown:
            table.setdefault(record.key, record)
        return table

    def current_labels(self) -> dict[tuple[str, int], str]:
        labels: dict[tuple[str, int], str] = {}
        for event in self.label_history:
            labels[event.key] = event.label
        return labels

    def _candidates(self) -> list[tuple[Sentence, Vector]]:
        vectors = self._ensure_vectors()
        seen = self.shown_keys()
        return [
            (sentence, vector)
            for sentence, vector in zip(self.sentences(), vectors)
            if sentence.key not in seen
        ]

    def _issue(self, ranked, phase: str) -> Batch:
        number = self.batch_counter + 1
        batch = retrieval.take_batch(ranked, self.settings.batch_size, number, phase)
        position = len(self.shown)
        for item in batch.items:
            position += 1
            self.shown.append(
                ShownRecord(
                    doc_id=item.sentence.doc_id,
                    index=item.sentence.index,
                    phase=phase,
                    batch=number,
                    position=position,
                )
            )
        self.pending_batch = number
        return batch

    # ------------------------------------------------------------------
    # the loop

    def search(self, query: str) -> Batch:
        """Vector-space ranking against the query; continues down the
        ranking on repeat calls because shown sentences are excluded."""
        self._ensure_vectors()
        if query != self.query:
            self.query = query
            self._query_vector = None
            self._query_vector_for = None
        candidates = self._candidates()
        if not candidates:
            raise Exhausted("all sentences have been shown")
        ranked = retrieval.vsm_rank(self._query_vec(), candidates)
        return self._issue(ranked, PHASE_SEARCH)

    def explore(self) -> ExploreResult:
        """One active-learning turn: train on current labels when both
        classes exist, otherwise fall back to query ranking."""
        vectors = self._ensure_vectors()
        candidates = self._candidates()
        if not candidates:
            raise Exhausted("all sentences have been shown")

        labels = self.current_labels()
        used_classifier = False
        scored: list[tuple[Sentence, float]]
        if len(set(labels.values())) == 2:
            by_key = {s.key: v for s, v in zip(self.sentences(), vectors)}
            features = [by_key[key] for key in labels]
            try:
                model = classifiers.train(
                    features,
                    list(labels.values()),
                    self.settings.classifier,
                    dimension=self._feature_dimension(),
                )
            except SingleClass:
                model = None
            if model is not None:
                scores = model.score_many([v for _, v in candidates])
                scored = [
                    (sentence, float(score))
                    for (sentence, _), score in zip(candidates, scores)
                ]
                used_classifier = True
        if not used_classifier:
            query_vector = self._query_vec()
            scored = [
                (sentence, 0.0 if query_vector is None
                 else embeddings.similarity(query_vector, vector))
                for sentence, vector in candidates
            ]
        ranked = retrieval.rank_candidates(scored)
        batch = self._issue(ranked, PHASE_EXPLORE)
        return ExploreResult(
            batch=batch, candidate_scores=scored, used_classifier=used_classifier
        )

    def submit_labels(self, events: Sequence[tuple[str, int, str]]) -> dict:
        """Record a submission: new labels for the pending batch and/or
        relabels of anything shown before.

        An explore-batch submission with no relevant label on the batch's
        sentences bumps the stop counter; any relevant one resets it.
        Validation happens before any mutation, so a rejected submission
        leaves the session untouched.
        """
        first_shown = self.first_shown()
        seen_in_submission: set[tuple[str, int]] = set()
        for doc_id, index, label in events:
            key = (doc_id, index)
            if label not in LABEL_VALUES:
                raise MalformedInput(f"label must be one of {LABEL_VALUES}")
            if key in seen_in_submission:
                raise DuplicateInBatch(f"duplicate label for {key}")
            seen_in_submission.add(key)
            if key not in first_shown:
                if self.get_sentence(doc_id, index) is None:
                    raise UnknownSentence(f"no sentence {key} in this session")
                raise UnknownSentence(f"sentence {key} has not been shown")

        for doc_id, index, label in events:
            record = first_shown[(doc_id, index)]
            self.label_history.append(
                LabelEvent(
                    doc_id=doc_id,
                    index=index,
                    label=label,
                    phase=record.phase,
                    batch=record.batch,
                    position=record.position,
                )
            )

        if self.pending_batch is not None:
            batch_keys = {
                r.key for r in self.shown if r.batch == self.pending_batch
            }
            batch_phase = next(
                r.phase for r in self.shown if r.batch == self.pending_batch
            )
            if batch_phase == PHASE_EXPLORE:
                any_relevant = any(
                    label == RELEVANT and (doc_id, index) in batch_keys
                    for doc_id, index, label in events
                )
                if any_relevant:
                    self.stop.consecutive_empty_turns = 0
                else:
                    self.stop.consecutive_empty_turns += 1
            self.pending_batch = None

        return {
            "stop_counter": self.stop.consecutive_empty_turns,
            "should_stop": self.should_stop,
        }

    @property
    def should_stop(self) -> bool:
        return self.stop.should_stop()

    def clear_labels(self) -> None:
        """Restart labeling: history, presentation log, counter, and batch
        numbering reset; documents, settings, and query survive."""
        self.label_history = []
        self.shown = []
        self.pending_batch = None
        self.stop.consecutive_empty_turns = 0

    # ------------------------------------------------------------------
    # views

    def label_counts_per_document(self) -> list[dict]:
        labels = self.current_labels()
        counts = []
        for document in self.documents:
            relevant = irrelevant = 0
            for sentence in document.sentences:
                label = labels.get(sentence.key)
                if label == RELEVANT:
                    relevant += 1
                elif label is not None:
                    irrelevant += 1
            counts.append(
                {
                    "doc_id": document.doc_id,
                    "filename": document.filename,
                    "relevant": relevant,
                    "irrelevant": irrelevant,
                    "unlabeled": len(document.sentences) - relevant - irrelevant,
                }
            )
        return counts

    def relevant_sentences(self) -> list[Sentence]:
        """Current-relevant sentences in (document order, sentence index)."""
        labels = self.current_labels()
        return [s for s in self.sentences() if labels.get(s.key) == RELEVANT]
