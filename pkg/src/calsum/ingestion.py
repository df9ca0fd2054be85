"""Turn uploaded files into ordered, indexed sentences.

Extraction is pluggable: a built-in extractor decodes plain-text files,
anything else (PDFs in practice) is delegated to a configured external
command. Sentence segmentation is rule-based and deterministic: split on
sentence-final punctuation followed by whitespace and an uppercase letter
or digit, with a fixed abbreviation list suppressing false splits.
"""

from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

from .errors import EmptyDocument, ExtractionFailed, UnsupportedFormat

# Fragments with fewer word tokens than this are dropped as extraction
# noise (page numbers, stray headers).
DEFAULT_MIN_SENTENCE_TOKENS = 2

_WORD_RE = re.compile(r"[^\W_]+")
_BOUNDARY_RE = re.compile(r"([.!?])(\s+)")
_TRAILING_TOKEN_RE = re.compile(r"([A-Za-z]+(?:\.[A-Za-z]+)*)$")
_ET_AL_RE = re.compile(r"\bet\s+al$", re.IGNORECASE)

# Dotted forms normalized by stripping periods and lowercasing.
_ABBREVIATIONS = frozenset(
    {"eg", "ie", "fig", "sec", "eq", "dr", "vs", "no", "pp"}
)


@dataclass(frozen=True)
class Sentence:
    """One retrieval unit: (doc_id, index) is unique across a session."""

    doc_id: str
    index: int
    text: str

    @property
    def key(self) -> tuple[str, int]:
        return (self.doc_id, self.index)


@dataclass(frozen=True)
class Document:
    doc_id: str
    filename: str
    raw_text: str
    sentences: tuple[Sentence, ...]


class TextExtractor(Protocol):
    def claims(self, filename: str) -> bool: ...

    def extract(self, filename: str, content: bytes) -> str: ...


def _extension(filename: str) -> str:
    return Path(filename).suffix.lower()


@dataclass(frozen=True)
class BuiltinTextExtractor:
    """Decodes plain-text files as UTF-8, replacing invalid bytes."""

    extensions: tuple[str, ...] = (".txt", ".text", ".md")

    def claims(self, filename: str) -> bool:
        return _extension(filename) in self.extensions

    def extract(self, filename: str, content: bytes) -> str:
        return content.decode("utf-8", errors="replace")


@dataclass(frozen=True)
class ExternalCommandExtractor:
    """Runs an external command on a temp copy of the file, reads stdout.

    The command string is split shell-style and invoked with the file path
    appended as the final argument.
    """

    command: str
    extensions: tuple[str, ...] = (".pdf",)

    def claims(self, filename: str) -> bool:
        return _extension(filename) in self.extensions

    def extract(self, filename: str, content: bytes) -> str:
        suffix = _extension(filename) or ".bin"
        with tempfile.NamedTemporaryFile(suffix=suffix) as tmp:
            tmp.write(content)
            tmp.flush()
            argv = shlex.split(self.command) + [tmp.name]
            result = subprocess.run(argv, capture_output=True, timeout=120)
        if result.returncode != 0:
            detail = result.stderr.decode("utf-8", errors="replace").strip()
            raise RuntimeError(f"extractor exited {result.returncode}: {detail}")
        return result.stdout.decode("utf-8", errors="replace")


def build_extractors(config: str | None = None) -> list[TextExtractor]:
    """Extractor stack from a config string.

    ``None`` or ``"builtin-text"`` yields the plain-text extractor alone;
    any other value is treated as an external command handling PDFs.
    """
    extractors: list[TextExtractor] = [BuiltinTextExtractor()]
    if config and config != "builtin-text":
        extractors.append(ExternalCommandExtractor(command=config))
    return extractors


def extract_text(
    filename: str, content: bytes, extractors: Sequence[TextExtractor]
) -> str:
    if not content:
        raise EmptyDocument(f"{filename}: file is empty")
    for extractor in extractors:
        if not extractor.claims(filename):
            continue
        try:
            text = extractor.extract(filename, content)
        except Exception as exc:
            raise ExtractionFailed(f"{filename}: {exc}") from exc
        if not text.strip():
            raise EmptyDocument(f"{filename}: extracted text is empty")
        return text
    raise UnsupportedFormat(f"no extractor claims {filename!r}")


def _ends_with_abbreviation(prefix: str) -> bool:
    if _ET_AL_RE.search(prefix):
        return True
    match = _TRAILING_TOKEN_RE.search(prefix)
    if match is None:
        return False
    token = match.group(1).replace(".", "").lower()
    return token in _ABBREVIATIONS


def _word_count(text: str) -> int:
    return len(_WORD_RE.findall(text))


def segment_sentences(
    text: str, min_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS
) -> list[str]:
    """Split text into sentence strings, in order of appearance.

    Deterministic and whitespace-normalizing; fragments with fewer than
    ``min_tokens`` word tokens are dropped.
    """
    pieces: list[str] = []
    start = 0
    for match in _BOUNDARY_RE.finditer(text):
        follower_pos = match.end()
        if follower_pos >= len(text):
            break
        follower = text[follower_pos]
        if not (follower.isupper() or follower.isdigit()):
            continue
        if match.group(1) == "." and _ends_with_abbreviation(text[: match.start()]):
            continue
        pieces.append(text[start : match.end(1)])
        start = match.end()
    pieces.append(text[start:])

    sentences = []
    for piece in pieces:
        normalized = " ".join(piece.split())
        if normalized and _word_count(normalized) >= min_tokens:
            sentences.append(normalized)
    return sentences


def ingest_document(
    doc_id: str,
    filename: str,
    content: bytes,
    extractors: Sequence[TextExtractor],
    min_tokens: int = DEFAULT_MIN_SENTENCE_TOKENS,
) -> Document:
    """Full pipeline for one file: extract text, segment, index sentences."""
    text = extract_text(filename, content, extractors)
    sentence_texts = segment_sentences(text, min_tokens=min_tokens)
    sentences = tuple(
        Sentence(doc_id=doc_id, index=i, text=t)
        for i, t in enumerate(sentence_texts, start=1)
    )
    return Document(
        doc_id=doc_id, filename=filename, raw_text=text, sentences=sentences
    )
