"""Quantitative evaluation: precision/effort curves, vocabulary divergence,
questionnaire scoring, and the non-interactive ranking baseline."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from . import embeddings, retrieval
from .classifiers import RELEVANT
from .embeddings import EmbeddingConfig, WORD_UNIGRAM
from .errors import (
    NoRelevantGold,
    NothingShown,
    ResponseOutOfRange,
    SupportMismatch,
    WrongItemCount,
)
from .ingestion import Sentence
from .session import LabelEvent

POSITIVE = "positive"
NEGATIVE = "negative"


@dataclass(frozen=True)
class UnigramDistribution:
    """Smoothed unigram probabilities over a fixed support; entries sum to
    one and are strictly positive."""

    probabilities: Mapping[str, float]

    @property
    def support(self) -> frozenset[str]:
        return frozenset(self.probabilities)


@dataclass(frozen=True)
class QuestionnaireResponse:
    """Ordered 5-point Likert items, each tagged with its wording polarity."""

    items: tuple[tuple[int, str], ...]


@dataclass
class MetricsReport:
    precision_overall: float
    precision_vs_effort: list[tuple[float, float]]
    kl_divergence: float
    label_counts_per_document: list[dict]
    shown_count: int
    total_sentences: int

    def to_dict(self) -> dict:
        return {
            "precision_overall": self.precision_overall,
            "precision_vs_effort": [list(p) for p in self.precision_vs_effort],
            "kl_divergence": self.kl_divergence,
            "label_counts_per_document": self.label_counts_per_document,
            "shown_count": self.shown_count,
            "total_sentences": self.total_sentences,
        }


def _current_relevant_count(history: Sequence[LabelEvent]) -> int:
    current: dict[tuple[str, int], str] = {}
    for event in history:
        current[event.key] = event.label
    return sum(1 for label in current.values() if label == RELEVANT)


def precision(history: Sequence[LabelEvent], shown_count: int) -> float:
    """Sentences currently labeled relevant over sentences shown."""
    if shown_count == 0:
        raise NothingShown("no sentences have been shown")
    if shown_count < 0:
        raise ValueError("shown_count must be non-negative")
    return _current_relevant_count(history) / shown_count


def precision_vs_effort(
    history: Sequence[LabelEvent], total_sentences: int
) -> list[tuple[float, float]]:
    """One (effort, precision) point per batch that produced labels.

    Effort is cumulative sentences shown over the collection size; the
    shown count is recovered from presentation positions, which is exact
    whenever every shown sentence received a label.
    """
    if total_sentences < 1:
        raise ValueError("total_sentences must be >= 1")
    if not history:
        return []
    points = []
    for batch in sorted({event.batch for event in history}):
        prefix = [event for event in history if event.batch <= batch]
        shown = max(event.position for event in prefix)
        points.append(
            (shown / total_sentences, _current_relevant_count(prefix) / shown)
        )
    return points


def unigram_distribution(
    texts: Sequence[str], support: Sequence[str] | set[str]
) -> UnigramDistribution:
    """Add-one smoothed word-unigram distribution over the given support;
    tokens outside the support are ignored."""
    support_list = sorted(set(support))
    if not support_list:
        raise ValueError("support must be non-empty")
    support_set = set(support_list)
    counts = dict.fromkeys(support_list, 0)
    total = 0
    for text in texts:
        for token in embeddings.tokenize(text, WORD_UNIGRAM):
            if token in support_set:
                counts[token] += 1
                total += 1
    denominator = total + len(support_list)
    return UnigramDistribution(
        probabilities={t: (counts[t] + 1) / denominator for t in support_list}
    )


def kl_divergence(p: UnigramDistribution, q: UnigramDistribution) -> float:
    if p.support != q.support:
        raise SupportMismatch("distributions are over different supports")
    return sum(
        pt * math.log(pt / q.probabilities[t])
        for t, pt in p.probabilities.items()
    )


def questionnaire_score(resp: QuestionnaireResponse, scale: str) -> float:
    """Score Likert items: positive wording maps 1..5 to 0..4, negative
    wording to 4..0. ``raw`` sums item values; ``sus`` is the 10-item sum
    scaled by 2.5 onto 0..100."""
    if scale not in ("sus", "raw"):
        raise ValueError(f"unknown scale {scale!r}")
    if scale == "sus" and len(resp.items) != 10:
        raise WrongItemCount(f"sus requires exactly 10 items, got {len(resp.items)}")
    total = 0
    for response, polarity in resp.items:
        if not 1 <= response <= 5:
            raise ResponseOutOfRange(f"response {response} outside 1..5")
        if polarity == POSITIVE:
            total += response - 1
        elif polarity == NEGATIVE:
            total += 5 - response
        else:
            raise ValueError(f"unknown polarity {polarity!r}")
    return total * 2.5 if scale == "sus" else float(total)


def baseline_pr_curve(
    query: str,
    sentences: Sequence[Sentence],
    gold_labels: Mapping[tuple[str, int], bool],
    config: EmbeddingConfig,
) -> list[tuple[float, float]]:
    """Precision-recall curve of plain query ranking with the classifier
    disabled: rank once, sweep the cutoff from 1 to n."""
    total_relevant = sum(1 for s in sentences if gold_labels.get(s.key))
    if total_relevant == 0:
        raise NoRelevantGold("gold labels contain no relevant sentence")
    if config.kind == embeddings.EXTERNAL_DENSE:
        vectors = embeddings.embed_external([s.text for s in sentences], config)
        query_vector = embeddings.embed_external([query], config)[0]
    else:
        token_kind = embeddings.token_kind_for(config.kind)
        vocab = embeddings.fit_vocabulary(sentences, token_kind)
        vectors = [embeddings.embed(s.text, vocab) for s in sentences]
        query_vector = embeddings.embed(query, vocab)
    ranked = retrieval.vsm_rank(query_vector, list(zip(sentences, vectors)))
    curve = []
    found = 0
    for cutoff, item in enumerate(ranked, start=1):
        if gold_labels.get(item.sentence.key):
            found += 1
        curve.append((found / total_relevant, found / cutoff))
    return curve


def precision_at_recall(
    curve: Sequence[tuple[float, float]], target_recall: float
) -> float:
    """Precision at the first cutoff whose recall reaches the target."""
    for recall, prec in curve:
        if recall >= target_recall:
            return prec
    return 0.0


def average_pr_curve(
    curves: Sequence[Sequence[tuple[float, float]]],
    grid: Sequence[float] | None = None,
) -> list[tuple[float, float]]:
    """Average several PR curves by mean precision at fixed recall points."""
    if grid is None:
        grid = [i / 20 for i in range(21)]
    return [
        (r, sum(precision_at_recall(c, r) for c in curves) / len(curves))
        for r in grid
    ]


def series_to_csv(points: Sequence[tuple[float, float]], columns: tuple[str, str]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(columns)
    for row in points:
        writer.writerow(row)
    return buffer.getvalue().encode("utf-8")


def report_to_json(report: MetricsReport) -> bytes:
    return json.dumps(
        report.to_dict(), ensure_ascii=False, sort_keys=True, indent=2
    ).encode("utf-8")
