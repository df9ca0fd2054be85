"""Ranking primitives shared by the search phase and the explore loop.

Candidates must be supplied in canonical corpus order (document insertion
order, then sentence index); ties in score are broken by that order, so
ranking is deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

from .embeddings import Vector, similarity
from .ingestion import Sentence

PHASE_SEARCH = "search"
PHASE_EXPLORE = "explore"
PHASES = (PHASE_SEARCH, PHASE_EXPLORE)


@dataclass(frozen=True)
class RankedSentence:
    sentence: Sentence
    score: float


@dataclass(frozen=True)
class Batch:
    batch_number: int
    phase: str
    items: tuple[RankedSentence, ...]


def rank_candidates(scored: Iterable[tuple[Sentence, float]]) -> list[RankedSentence]:
    """Sort by score descending; stable, so canonical input order breaks ties."""
    ordered = sorted(scored, key=lambda pair: -pair[1])
    return [RankedSentence(sentence=s, score=score) for s, score in ordered]


def vsm_rank(
    query_vector: Vector | None,
    sentence_vectors: Sequence[tuple[Sentence, Vector]],
    exclude: set[tuple[str, int]] = frozenset(),
) -> list[RankedSentence]:
    """Rank all non-excluded sentences by cosine similarity to the query.

    A missing/zero query vector scores everything 0.0, leaving only the
    canonical tie-break order.
    """
    scored = []
    for sentence, vector in sentence_vectors:
        if sentence.key in exclude:
            continue
        score = 0.0 if query_vector is None else similarity(query_vector, vector)
        scored.append((sentence, score))
    return rank_candidates(scored)


def take_batch(
    ranked: Sequence[RankedSentence], k: int, batch_number: int, phase: str
) -> Batch:
    if k < 1:
        raise ValueError(f"batch size must be >= 1, got {k}")
    if phase not in PHASES:
        raise ValueError(f"unknown phase {phase!r}")
    return Batch(batch_number=batch_number, phase=phase, items=tuple(ranked[:k]))
