"""Vector representations for sentences and queries.

Three interchangeable representations: TF-IDF over word unigrams, TF-IDF
over character trigrams, and dense vectors fetched from an external
embedding provider over HTTP. TF-IDF uses raw term counts with smoothed
idf ln((1+N)/(1+df)) + 1 and L2 normalization; the idf "document" unit is
the sentence, since sentences are what the system ranks.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import requests

from .errors import DimensionMismatch, EmptyCorpus, ProviderUnavailable

WORD_UNIGRAM = "word-unigram"
CHAR_TRIGRAM = "char-trigram"
TOKEN_KINDS = (WORD_UNIGRAM, CHAR_TRIGRAM)

WORD_UNIGRAM_TFIDF = "word-unigram-tfidf"
CHAR_TRIGRAM_TFIDF = "char-trigram-tfidf"
EXTERNAL_DENSE = "external-dense"
EMBEDDING_KINDS = (WORD_UNIGRAM_TFIDF, CHAR_TRIGRAM_TFIDF, EXTERNAL_DENSE)

TRIGRAM_PAD = "#"

_WORD_RE = re.compile(r"[^\W_]+")


def tokenize(text: str, kind: str) -> list[str]:
    """Word unigrams are lowercase maximal alphanumeric runs; character
    trigrams slide over the lowercased text padded with one boundary
    marker on each side."""
    if kind == WORD_UNIGRAM:
        return _WORD_RE.findall(text.lower())
    if kind == CHAR_TRIGRAM:
        padded = TRIGRAM_PAD + text.lower() + TRIGRAM_PAD
        return [padded[i : i + 3] for i in range(len(padded) - 2)]
    raise ValueError(f"unknown token kind {kind!r}")


def token_kind_for(embedding_kind: str) -> str:
    if embedding_kind == WORD_UNIGRAM_TFIDF:
        return WORD_UNIGRAM
    if embedding_kind == CHAR_TRIGRAM_TFIDF:
        return CHAR_TRIGRAM
    raise ValueError(f"no token kind for embedding kind {embedding_kind!r}")


def _text_of(item) -> str:
    return item.text if hasattr(item, "text") else item


@dataclass(frozen=True)
class Vocabulary:
    """Term statistics fit on a sentence corpus.

    Indices are dense 0..|V|-1 in first-occurrence order; document
    frequency counts sentences containing the term, not occurrences.
    """

    kind: str
    term_to_index: Mapping[str, int]
    document_frequency: Mapping[str, int]
    corpus_size: int

    @property
    def size(self) -> int:
        return len(self.term_to_index)

    def idf(self, term: str) -> float:
        df = self.document_frequency[term]
        return math.log((1 + self.corpus_size) / (1 + df)) + 1.0

    def __contains__(self, term: str) -> bool:
        return term in self.term_to_index


def fit_vocabulary(sentences: Sequence, kind: str) -> Vocabulary:
    if not sentences:
        raise EmptyCorpus("cannot fit a vocabulary on an empty corpus")
    term_to_index: dict[str, int] = {}
    document_frequency: dict[str, int] = {}
    for sentence in sentences:
        tokens = tokenize(_text_of(sentence), kind)
        for token in tokens:
            if token not in term_to_index:
                term_to_index[token] = len(term_to_index)
        for token in set(tokens):
            document_frequency[token] = document_frequency.get(token, 0) + 1
    return Vocabulary(
        kind=kind,
        term_to_index=term_to_index,
        document_frequency=document_frequency,
        corpus_size=len(sentences),
    )


@dataclass(frozen=True)
class SparseVector:
    """L2-normalized sparse vector: entries sorted by index, weights
    non-zero; an empty entry tuple is the zero vector."""

    entries: tuple[tuple[int, float], ...]

    def is_zero(self) -> bool:
        return not self.entries

    def norm(self) -> float:
        return math.sqrt(sum(w * w for _, w in self.entries))

    def dot(self, other: "SparseVector") -> float:
        a, b = self.entries, other.entries
        i = j = 0
        total = 0.0
        while i < len(a) and j < len(b):
            ia, ib = a[i][0], b[j][0]
            if ia == ib:
                total += a[i][1] * b[j][1]
                i += 1
                j += 1
            elif ia < ib:
                i += 1
            else:
                j += 1
        return total


@dataclass(frozen=True)
class DenseVector:
    values: tuple[float, ...]

    def is_zero(self) -> bool:
        return all(v == 0.0 for v in self.values)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))

    def dot(self, other: "DenseVector") -> float:
        return sum(a * b for a, b in zip(self.values, other.values))


Vector = Union[SparseVector, DenseVector]


@dataclass(frozen=True)
class EmbeddingConfig:
    kind: str = WORD_UNIGRAM_TFIDF
    provider_endpoint: str | None = None

    def __post_init__(self):
        if self.kind not in EMBEDDING_KINDS:
            raise ValueError(f"unknown embedding kind {self.kind!r}")
        if (self.kind == EXTERNAL_DENSE) != (self.provider_endpoint is not None):
            raise ValueError(
                "provider_endpoint must be set exactly when kind is external-dense"
            )


def embed(text: str, vocab: Vocabulary, kind: str | None = None) -> SparseVector:
    """TF-IDF embed one text against a fit vocabulary.

    Out-of-vocabulary tokens are dropped; a text with no in-vocabulary
    tokens yields the zero vector.
    """
    if kind is not None and kind != vocab.kind:
        raise ValueError(
            f"vocabulary was fit with kind {vocab.kind!r}, not {kind!r}"
        )
    counts = Counter(tokenize(text, vocab.kind))
    entries = sorted(
        (vocab.term_to_index[t], count * vocab.idf(t))
        for t, count in counts.items()
        if t in vocab.term_to_index
    )
    norm = math.sqrt(sum(w * w for _, w in entries))
    if norm == 0.0:
        return SparseVector(entries=())
    return SparseVector(entries=tuple((i, w / norm) for i, w in entries))


def embed_external(
    texts: Sequence[str],
    config: EmbeddingConfig,
    cache: dict[str, DenseVector] | None = None,
    timeout: float = 30.0,
) -> list[DenseVector]:
    """Fetch dense vectors from the configured provider, one per text.

    Results are cached by text when a cache dict is supplied, so repeat
    texts never hit the provider twice in a session.
    """
    if config.kind != EXTERNAL_DENSE:
        raise ValueError("embed_external requires an external-dense config")
    if cache is None:
        cache = {}
    missing = [t for t in dict.fromkeys(texts) if t not in cache]
    if missing:
        fetched = _fetch_vectors(missing, config, timeout)
        known = {len(v.values) for v in cache.values()}
        new = {len(v.values) for v in fetched}
        if len(known | new) > 1:
            raise DimensionMismatch(
                f"provider returned mixed dimensions {sorted(known | new)}"
            )
        cache.update(zip(missing, fetched))
    return [cache[t] for t in texts]


def _fetch_vectors(
    texts: list[str], config: EmbeddingConfig, timeout: float
) -> list[DenseVector]:
    try:
        response = requests.post(
            config.provider_endpoint, json={"texts": texts}, timeout=timeout
        )
    except requests.RequestException as exc:
        raise ProviderUnavailable(f"provider request failed: {exc}") from exc
    if response.status_code != 200:
        raise ProviderUnavailable(
            f"provider returned status {response.status_code}"
        )
    try:
        vectors = response.json()["vectors"]
    except Exception as exc:
        raise ProviderUnavailable(f"malformed provider response: {exc}") from exc
    if not isinstance(vectors, list) or len(vectors) != len(texts):
        raise ProviderUnavailable(
            f"provider returned {len(vectors) if isinstance(vectors, list) else '?'}"
            f" vectors for {len(texts)} texts"
        )
    dims = {len(v) for v in vectors}
    if len(dims) > 1:
        raise DimensionMismatch(f"provider returned mixed dimensions {sorted(dims)}")
    out = []
    for vector in vectors:
        values = tuple(float(x) for x in vector)
        if any(not math.isfinite(v) for v in values):
            raise ProviderUnavailable("provider returned non-finite values")
        out.append(DenseVector(values=values))
    return out


def similarity(a: Vector, b: Vector) -> float:
    """Cosine similarity; zero if either vector is zero."""
    if isinstance(a, SparseVector) and isinstance(b, SparseVector):
        pass
    elif isinstance(a, DenseVector) and isinstance(b, DenseVector):
        if len(a.values) != len(b.values):
            raise DimensionMismatch(
                f"dense dimensions differ: {len(a.values)} vs {len(b.values)}"
            )
    else:
        raise DimensionMismatch(
            f"cannot compare {type(a).__name__} with {type(b).__name__}"
        )
    na, nb = a.norm(), b.norm()
    if na == 0.0 or nb == 0.0:
        return 0.0
    return a.dot(b) / (na * nb)
