"""Interactive query-focused summarization via continuous active learning.

Given a paragraph query and a small collection of documents, the package
splits the documents into sentences, embeds them, and alternates between
human relevance labels and classifier retraining until the reviewer stops
finding relevant material; the relevant sentences form the summary.
"""

from .classifiers import ClassifierConfig, LinearClassifier, train
from .embeddings import (
    DenseVector,
    EmbeddingConfig,
    SparseVector,
    Vocabulary,
    embed,
    embed_external,
    fit_vocabulary,
    similarity,
    tokenize,
)
from .ingestion import (
    Document,
    Sentence,
    build_extractors,
    extract_text,
    ingest_document,
    segment_sentences,
)
from .retrieval import Batch, RankedSentence, take_batch, vsm_rank
from .session import LabelEvent, Session, SessionSettings, StopState
from .persistence import (
    export_history_csv,
    export_state,
    export_summary_txt,
    import_state,
)

__version__ = "0.1.0"
