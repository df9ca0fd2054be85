"""Headless evaluation: scripted reviewer sessions over real or synthetic
corpora, with and without the classifier in the loop.

The synthetic generator plants a topical cluster: relevant sentences draw
from a dedicated topic vocabulary of which the query mentions only a
subset, so plain query ranking finds the overlapping part and stalls,
while the active-learning loop picks up the remaining topic terms from
labels. Background sentences draw from a broad noise vocabulary; all
sentences share a small pool of common words.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .classifiers import ClassifierConfig, IRRELEVANT, RELEVANT
from .embeddings import EmbeddingConfig
from .errors import MalformedInput, Exhausted, NoRelevantGold
from .ingestion import Document, Sentence
from .session import Session, SessionSettings

TOPIC_WORDS = 30
QUERY_TOPIC_WORDS = 5
SHARED_WORDS = 40
NOISE_WORDS = 400


@dataclass(frozen=True)
class SyntheticCollection:
    documents: tuple[Document, ...]
    query: str
    gold: Mapping[tuple[str, int], bool]


def _make_sentence(words: list[str]) -> str:
    return " ".join(words).capitalize() + "."


def make_synthetic_collection(
    n_docs: int = 5,
    sentences_per_doc: int = 100,
    relevant_fraction: float = 0.1,
    seed: int = 0,
) -> SyntheticCollection:
    rng = random.Random(seed)
    topic = [f"topic{i:02d}" for i in range(TOPIC_WORDS)]
    shared = [f"common{i:02d}" for i in range(SHARED_WORDS)]
    noise = [f"noise{i:03d}" for i in range(NOISE_WORDS)]
    query_terms = rng.sample(topic, QUERY_TOPIC_WORDS)
    query = _make_sentence(
        ["this", "collection", "concerns"] + query_terms + rng.sample(shared, 2)
    )

    relevant_per_doc = round(sentences_per_doc * relevant_fraction)
    documents = []
    gold: dict[tuple[str, int], bool] = {}
    for d in range(n_docs):
        doc_id = f"d{d + 1:03d}"
        relevant_slots = set(rng.sample(range(sentences_per_doc), relevant_per_doc))
        sentences = []
        for i in range(sentences_per_doc):
            if i in relevant_slots:
                words = rng.sample(topic, 5) + rng.sample(shared, 4)
            else:
                words = rng.sample(noise, 6) + rng.sample(shared, 4)
            rng.shuffle(words)
            index = i + 1
            sentences.append(Sentence(doc_id=doc_id, index=index, text=_make_sentence(words)))
            gold[(doc_id, index)] = i in relevant_slots
        documents.append(
            Document(
                doc_id=doc_id,
                filename=f"synthetic-{d + 1}.txt",
                raw_text="\n".join(s.text for s in sentences),
                sentences=tuple(sentences),
            )
        )
    return SyntheticCollection(documents=tuple(documents), query=query, gold=gold)


@dataclass
class SimulationTurn:
    batch: int
    phase: str
    shown: int
    relevant_found: int
    effort: float
    precision: float
    recall: float

    def to_dict(self) -> dict:
        return {
            "batch": self.batch,
            "phase": self.phase,
            "shown": self.shown,
            "relevant_found": self.relevant_found,
            "effort": self.effort,
            "precision": self.precision,
            "recall": self.recall,
        }


@dataclass
class SimulationRun:
    seed: int
    mode: str
    turns: list[SimulationTurn] = field(default_factory=list)
    ended_by: str = "exhausted"
    session: Session | None = None

    def recall_at_effort(self, effort: float) -> float:
        best = 0.0
        for turn in self.turns:
            if turn.effort <= effort + 1e-12:
                best = turn.recall
        return best

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mode": self.mode,
            "ended_by": self.ended_by,
            "turns": [t.to_dict() for t in self.turns],
        }


def run_scripted_session(
    documents: Sequence[Document],
    query: str,
    gold: Mapping[tuple[str, int], bool],
    settings: SessionSettings,
    use_classifier: bool = True,
    stop_threshold: int = 3,
    honor_stop: bool = True,
    max_effort: float | None = None,
    seed: int = 0,
) -> SimulationRun:
    """Drive one session with a reviewer that labels every shown sentence
    according to the gold map, until the stop rule fires (classifier mode)
    or the collection is exhausted."""
    session = Session(max_documents=max(len(documents), 1))
    for document in documents:
        session.add_prepared_document(document)
    total = len(session.sentences())
    missing = [s.key for s in session.sentences() if s.key not in gold]
    if missing:
        raise MalformedInput(
            f"gold labels must cover all sentences; {len(missing)} missing"
        )
    # All-irrelevant gold is legal (it exercises the stop rule); recall is
    # then reported as 0.
    total_relevant = sum(1 for s in session.sentences() if gold[s.key])

    session.process(settings, stop_threshold=stop_threshold)
    mode = "cal" if use_classifier else "baseline"
    run = SimulationRun(seed=seed, mode=mode, session=session)

    batch = session.search(query)
    relevant_found = 0
    while True:
        events = [
            (
                item.sentence.doc_id,
                item.sentence.index,
                RELEVANT if gold[item.sentence.key] else IRRELEVANT,
            )
            for item in batch.items
        ]
        relevant_found += sum(1 for _, _, label in events if label == RELEVANT)
        session.submit_labels(events)
        shown = len(session.shown)
        run.turns.append(
            SimulationTurn(
                batch=batch.batch_number,
                phase=batch.phase,
                shown=shown,
                relevant_found=relevant_found,
                effort=shown / total,
                precision=relevant_found / shown,
                recall=relevant_found / total_relevant if total_relevant else 0.0,
            )
        )
        if honor_stop and use_classifier and session.should_stop:
            run.ended_by = "stop-rule"
            break
        if max_effort is not None and shown / total >= max_effort:
            run.ended_by = "effort-limit"
            break
        try:
            if use_classifier:
                batch = session.explore().batch
            else:
                batch = session.search(query)
        except Exhausted:
            run.ended_by = "exhausted"
            break
    return run


def simulate(
    documents_for_seed,
    query_for_seed,
    gold_for_seed,
    settings: SessionSettings,
    seeds: Sequence[int],
    stop_threshold: int = 3,
    compare_baseline: bool = True,
    recall_effort: float = 0.3,
) -> dict:
    """Run the scripted reviewer across seeds, in classifier and baseline
    modes, and aggregate recall at the reporting effort level.

    The three ``*_for_seed`` arguments are callables seed -> value so both
    fixed corpora and per-seed synthetic collections fit the same driver.
    """
    from . import metrics

    runs: list[SimulationRun] = []
    comparison = []
    pr_curves = []
    for seed in seeds:
        documents = documents_for_seed(seed)
        query = query_for_seed(seed)
        gold = gold_for_seed(seed)
        if compare_baseline and not any(gold.values()):
            raise NoRelevantGold(
                "recall comparison needs at least one relevant gold label"
            )
        cal = run_scripted_session(
            documents, query, gold, settings,
            use_classifier=True, stop_threshold=stop_threshold, seed=seed,
        )
        runs.append(cal)
        entry = {"seed": seed, "cal_recall": cal.recall_at_effort(recall_effort)}
        if compare_baseline:
            baseline = run_scripted_session(
                documents, query, gold, settings,
                use_classifier=False, stop_threshold=stop_threshold, seed=seed,
            )
            runs.append(baseline)
            entry["baseline_recall"] = baseline.recall_at_effort(recall_effort)
            entry["gap"] = entry["cal_recall"] - entry["baseline_recall"]
            sentences = [s for d in documents for s in d.sentences]
            pr_curves.append(
                metrics.baseline_pr_curve(query, sentences, gold, settings.embedding)
            )
        comparison.append(entry)

    report = {
        "settings": {
            "embedding": settings.embedding.kind,
            "classifier": settings.classifier.kind,
            "batch_size": settings.batch_size,
            "stop_threshold": stop_threshold,
            "recall_effort": recall_effort,
        },
        "seeds": list(seeds),
        "runs": [r.to_dict() for r in runs],
        "comparison": comparison,
    }
    if compare_baseline and comparison:
        wins = sum(1 for c in comparison if c["cal_recall"] >= c["baseline_recall"])
        gaps = [c["gap"] for c in comparison]
        report["summary"] = {
            "wins": wins,
            "total": len(comparison),
            "win_rate": wins / len(comparison),
            "mean_gap": sum(gaps) / len(gaps),
            "mean_cal_recall": sum(c["cal_recall"] for c in comparison) / len(comparison),
            "mean_baseline_recall": sum(c["baseline_recall"] for c in comparison)
            / len(comparison),
        }
        report["baseline_pr_curve"] = [
            list(point) for point in metrics.average_pr_curve(pr_curves)
        ]
    return report
