"""The labeling loop: batch issuance, exclusions, the stop counter,
fallback behavior, clearing, and bit-for-bit replay determinism."""

from __future__ import annotations

import pytest

from calsum.classifiers import IRRELEVANT, RELEVANT
from calsum.embeddings import similarity
from calsum.errors import (
    DuplicateInBatch,
    EmptyCorpus,
    Exhausted,
    NotProcessed,
    TooManyDocuments,
    UnknownSentence,
)
from calsum.session import Session, SessionSettings
from calsum.simulate import make_synthetic_collection
from conftest import build_documents, build_session


def label_all(session, batch, label=IRRELEVANT, relevant_keys=frozenset()):
    events = [
        (
            item.sentence.doc_id,
            item.sentence.index,
            RELEVANT if item.sentence.key in relevant_keys else label,
        )
        for item in batch.items
    ]
    return session.submit_labels(events)


class TestSearch:
    def test_requires_processing(self, toy_corpus):
        session = build_session(toy_corpus, process=False)
        with pytest.raises(NotProcessed):
            session.search("cats")

    def test_query_identical_to_sentence_ranks_it_first(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=3))
        batch = session.search("The cat sat on the mat.")
        assert batch.items[0].sentence.text == "The cat sat on the mat."
        assert batch.items[0].score == pytest.approx(1.0, abs=1e-9)
        assert batch.phase == "search"
        assert batch.batch_number == 1

    def test_second_search_continues_down_ranking(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        first = session.search("cats")
        second = session.search("cats")
        assert second.batch_number == 2
        assert not {i.sentence.key for i in first.items} & {
            i.sentence.key for i in second.items
        }

    def test_empty_query_ranks_by_tie_break(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=5))
        batch = session.search("")
        keys = [i.sentence.key for i in batch.items]
        assert keys == [s.key for s in session.sentences()]
        assert all(i.score == 0.0 for i in batch.items)

    def test_exhaustion(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=10))
        session.search("cats")
        with pytest.raises(Exhausted):
            session.search("cats")


class TestExplore:
    def test_fallback_equals_search_ranking(self, toy_corpus):
        """With zero labels, explore ranks exactly like search."""
        a = build_session(toy_corpus, SessionSettings(batch_size=3))
        b = build_session(toy_corpus, SessionSettings(batch_size=3))
        searched = a.search("cats nap")
        b.query = "cats nap"
        explored = b.explore()
        assert not explored.used_classifier
        assert [i.sentence.key for i in searched.items] == [
            i.sentence.key for i in explored.batch.items
        ]

    def test_batches_never_overlap(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        seen: set = set()
        session.query = "cats"
        for _ in range(3):
            result = session.explore()
            keys = {i.sentence.key for i in result.batch.items}
            assert not keys & seen
            seen |= keys
            label_all(session, result.batch)

    def test_monotone_effort(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        total = len(session.sentences())
        shown_before = 0
        session.query = "cats"
        while shown_before < total:
            result = session.explore()
            expected = min(2, total - shown_before)
            assert len(session.shown) == shown_before + expected
            shown_before = len(session.shown)
            label_all(session, result.batch)

    def test_exhausted(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=10))
        session.search("cats")
        with pytest.raises(Exhausted):
            session.explore()

    def test_classifier_kicks_in_with_both_classes(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        batch = session.search("loss function iteration")
        label_all(
            session, batch,
            relevant_keys={batch.items[0].sentence.key},
        )
        result = session.explore()
        assert result.used_classifier
        scores = [s for _, s in result.candidate_scores]
        assert all(0.0 <= s <= 1.0 for s in scores)

    def test_planted_cluster_batch_beats_corpus_mean(self):
        """After labeling some of the planted cluster, the recommended batch
        is closer to the cluster than the corpus average, where closeness is
        brute-force mean similarity to the gold-relevant vectors."""
        col = make_synthetic_collection(
            n_docs=2, sentences_per_doc=40, relevant_fraction=0.15, seed=1
        )
        session = Session(max_documents=2)
        for d in col.documents:
            session.add_prepared_document(d)
        session.process(SessionSettings(batch_size=5))

        batch = session.search(col.query)
        relevant_labeled = 0
        while relevant_labeled < 5:
            relevant_keys = {
                i.sentence.key for i in batch.items if col.gold[i.sentence.key]
            }
            relevant_labeled += len(relevant_keys)
            label_all(session, batch, relevant_keys=relevant_keys)
            if relevant_labeled < 5:
                batch = session.explore().batch

        result = session.explore()
        vectors = dict(zip([s.key for s in session.sentences()], session._ensure_vectors()))
        cluster = [vectors[k] for k, rel in col.gold.items() if rel]

        def closeness(key):
            return sum(similarity(vectors[key], c) for c in cluster) / len(cluster)

        batch_mean = sum(
            closeness(i.sentence.key) for i in result.batch.items
        ) / len(result.batch.items)
        corpus_mean = sum(closeness(s.key) for s in session.sentences()) / len(
            session.sentences()
        )
        assert batch_mean > corpus_mean


class TestSubmitLabels:
    def test_counter_increments_on_empty_explore_batch(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        session.query = "cats"
        session.stop.consecutive_empty_turns = 2
        result = session.explore()
        out = label_all(session, result.batch, IRRELEVANT)
        assert out["stop_counter"] == 3
        assert out["should_stop"] is True

    def test_counter_resets_on_any_relevant(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        session.query = "cats"
        session.stop.consecutive_empty_turns = 2
        result = session.explore()
        out = label_all(
            session, result.batch,
            relevant_keys={result.batch.items[0].sentence.key},
        )
        assert out["stop_counter"] == 0

    def test_search_submissions_leave_counter_alone(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        batch = session.search("cats")
        out = label_all(session, batch, IRRELEVANT)
        assert out["stop_counter"] == 0

    def test_relabel_replaces_current_and_grows_history(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        batch = session.search("cats")
        key = batch.items[0].sentence.key
        label_all(session, batch, IRRELEVANT)
        before = len(session.label_history)
        session.submit_labels([(key[0], key[1], RELEVANT)])
        assert len(session.label_history) == before + 1
        assert session.current_labels()[key] == RELEVANT

    def test_relabel_of_old_sentence_does_not_reset_counter(self, toy_corpus):
        """Only relevant labels on the pending explore batch reset the
        counter; relabels of earlier sentences ride along."""
        session = build_session(toy_corpus, SessionSettings(batch_size=1))
        first = session.search("cats")
        old_key = first.items[0].sentence.key
        label_all(session, first, IRRELEVANT)
        result = session.explore()
        events = [
            (result.batch.items[0].sentence.doc_id,
             result.batch.items[0].sentence.index, IRRELEVANT),
            (old_key[0], old_key[1], RELEVANT),
        ]
        out = session.submit_labels(events)
        assert out["stop_counter"] == 1

    def test_unknown_sentence(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        session.search("cats")
        with pytest.raises(UnknownSentence):
            session.submit_labels([("d999", 1, RELEVANT)])

    def test_unshown_sentence_rejected(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=1))
        batch = session.search("cats")
        unshown = next(
            s for s in session.sentences()
            if s.key != batch.items[0].sentence.key
        )
        with pytest.raises(UnknownSentence):
            session.submit_labels([(unshown.doc_id, unshown.index, RELEVANT)])

    def test_duplicate_in_batch(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        batch = session.search("cats")
        s = batch.items[0].sentence
        with pytest.raises(DuplicateInBatch):
            session.submit_labels(
                [(s.doc_id, s.index, RELEVANT), (s.doc_id, s.index, IRRELEVANT)]
            )

    def test_rejected_submission_mutates_nothing(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        batch = session.search("cats")
        s = batch.items[0].sentence
        with pytest.raises(UnknownSentence):
            session.submit_labels([(s.doc_id, s.index, RELEVANT), ("d999", 1, RELEVANT)])
        assert session.label_history == []

    def test_counter_bounded_by_explore_turns(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=1))
        session.query = "cats"
        explore_turns = 0
        for _ in range(4):
            result = session.explore()
            label_all(session, result.batch, IRRELEVANT)
            explore_turns += 1
            assert 0 <= session.stop.consecutive_empty_turns <= explore_turns


class TestShouldStop:
    @pytest.mark.parametrize("counter,expected", [(0, False), (2, False), (3, True), (5, True)])
    def test_threshold_three(self, toy_corpus, counter, expected):
        session = build_session(toy_corpus)
        session.stop.consecutive_empty_turns = counter
        assert session.should_stop is expected


class TestClear:
    def test_clear_resets_labels_counter_and_batches(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        batch = session.search("cats")
        label_all(session, batch, IRRELEVANT)
        session.explore()
        session.clear_labels()
        assert session.label_history == []
        assert session.shown == []
        assert session.stop.consecutive_empty_turns == 0
        assert session.batch_counter == 0
        assert len(session.documents) == 2
        assert session.query == "cats"

    def test_clear_then_search_reproduces_first_batch(self, toy_corpus):
        session = build_session(toy_corpus, SessionSettings(batch_size=2))
        first = session.search("cats")
        label_all(session, first, IRRELEVANT)
        session.explore()
        session.clear_labels()
        again = session.search("cats")
        assert again == first

    def test_clear_on_fresh_session_is_noop(self, toy_corpus):
        session = build_session(toy_corpus)
        session.clear_labels()
        assert session.label_history == [] and session.shown == []


class TestExternalDenseSession:
    def test_full_loop_with_provider(self, toy_corpus, provider):
        from calsum.embeddings import EmbeddingConfig

        settings = SessionSettings(
            embedding=EmbeddingConfig(kind="external-dense", provider_endpoint=provider),
            batch_size=2,
        )
        session = build_session(toy_corpus, settings)
        batch = session.search("cats in the sun")
        assert len(batch.items) == 2
        label_all(session, batch, relevant_keys={batch.items[0].sentence.key})
        result = session.explore()
        assert result.used_classifier
        assert all(0.0 <= s <= 1.0 for _, s in result.candidate_scores)

    def test_provider_down_leaves_session_usable_with_sparse(self, toy_corpus):
        from calsum.embeddings import EmbeddingConfig
        from calsum.errors import ProviderUnavailable

        session = build_session(toy_corpus, process=False)
        bad = SessionSettings(
            embedding=EmbeddingConfig(
                kind="external-dense", provider_endpoint="http://127.0.0.1:9/none"
            )
        )
        with pytest.raises(ProviderUnavailable):
            session.process(bad)
        session.process(SessionSettings(batch_size=2))
        assert len(session.search("cats").items) == 2


class TestDocuments:
    def test_document_cap(self, toy_corpus):
        session = Session(max_documents=1)
        docs = build_documents(toy_corpus)
        session.add_prepared_document(docs[0])
        with pytest.raises(TooManyDocuments):
            session.add_document("more.txt", b"Extra text arrives here.", [])

    def test_process_without_documents(self):
        session = Session()
        with pytest.raises(EmptyCorpus):
            session.process(SessionSettings())


class TestDeterminism:
    def test_full_replay_reproduces_batches_bit_for_bit(self, toy_corpus):
        def drive(session):
            batches = []
            batch = session.search("cats chase loss")
            batches.append(batch)
            label_all(session, batch, relevant_keys={batch.items[0].sentence.key})
            while True:
                try:
                    result = session.explore()
                except Exhausted:
                    break
                batches.append(result.batch)
                label_all(
                    session, result.batch,
                    relevant_keys={result.batch.items[-1].sentence.key},
                )
            return batches

        a = drive(build_session(toy_corpus, SessionSettings(batch_size=2)))
        b = drive(build_session(toy_corpus, SessionSettings(batch_size=2)))
        assert a == b
