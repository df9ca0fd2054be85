"""Command-line driver: ingest corpora, run scripted simulations, evaluate
exported sessions, and launch the HTTP service.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

from . import metrics, persistence, simulate
from .classifiers import ClassifierConfig, LINEAR_SVM, LOGISTIC_REGRESSION, RELEVANT
from .embeddings import (
    CHAR_TRIGRAM_TFIDF,
    EXTERNAL_DENSE,
    EmbeddingConfig,
    WORD_UNIGRAM,
    WORD_UNIGRAM_TFIDF,
    tokenize,
)
from .errors import CalsumError, MalformedInput
from .ingestion import build_extractors, ingest_document
from .session import DEFAULT_BATCH_SIZE, DEFAULT_STOP_THRESHOLD, SessionSettings

EMBEDDING_FLAGS = {
    "word-unigram": WORD_UNIGRAM_TFIDF,
    "char-trigram": CHAR_TRIGRAM_TFIDF,
    "external-dense": EXTERNAL_DENSE,
}
CLASSIFIER_FLAGS = {
    "logreg": LOGISTIC_REGRESSION,
    "svm": LINEAR_SVM,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="calsum", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="extract and segment files into a corpus")
    p_ingest.add_argument("paths", nargs="+", help="input files (.txt/.md, or PDFs with --extractor)")
    p_ingest.add_argument("--out", required=True, help="corpus JSON output path")
    p_ingest.add_argument(
        "--extractor",
        default="builtin-text",
        help='"builtin-text" or an external command for PDFs',
    )
    p_ingest.add_argument("--min-tokens", type=int, default=2)

    p_sim = sub.add_parser("simulate", help="scripted-reviewer evaluation runs")
    p_sim.add_argument("--corpus", help="corpus JSON from the ingest command")
    p_sim.add_argument("--query", help="query paragraph")
    p_sim.add_argument("--query-file", help="file containing the query paragraph")
    p_sim.add_argument("--gold", help="gold CSV: document,sentence_index,label")
    p_sim.add_argument(
        "--synthetic", action="store_true",
        help="generate a planted-cluster collection per seed instead",
    )
    p_sim.add_argument("--docs", type=int, default=5)
    p_sim.add_argument("--sentences-per-doc", type=int, default=100)
    p_sim.add_argument("--relevant-fraction", type=float, default=0.1)
    p_sim.add_argument(
        "--embedding", choices=sorted(EMBEDDING_FLAGS), default="word-unigram"
    )
    p_sim.add_argument("--classifier", choices=sorted(CLASSIFIER_FLAGS), default="logreg")
    p_sim.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    p_sim.add_argument("--seeds", type=int, default=1, help="run seeds 0..N-1")
    p_sim.add_argument("--stop-threshold", type=int, default=DEFAULT_STOP_THRESHOLD)
    p_sim.add_argument("--provider-endpoint", help="dense embedding provider URL")
    p_sim.add_argument(
        "--no-baseline", action="store_true",
        help="skip the classifier-disabled comparison runs",
    )
    p_sim.add_argument("--recall-effort", type=float, default=0.3)
    p_sim.add_argument("--out", required=True, help="output directory")

    p_eval = sub.add_parser("evaluate", help="metrics report from an exported state file")
    p_eval.add_argument("state", help="state JSON exported from a session")
    p_eval.add_argument("--out", help="write the report here instead of stdout")
    p_eval.add_argument("--csv-dir", help="also write plot-ready CSV series")

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--extractor", default="builtin-text")
    p_serve.add_argument("--provider-endpoint")
    p_serve.add_argument("--max-documents", type=int, default=5)
    p_serve.add_argument("--session-ttl", type=float, default=24 * 3600.0)
    p_serve.add_argument("--static-dir", help="serve a built web UI from this directory")
    return parser


def cmd_ingest(args) -> int:
    extractors = build_extractors(args.extractor)
    documents = []
    for i, path in enumerate(args.paths, start=1):
        content = Path(path).read_bytes()
        documents.append(
            ingest_document(
                f"d{i:03d}",
                Path(path).name,
                content,
                extractors,
                min_tokens=args.min_tokens,
            )
        )
    Path(args.out).write_bytes(persistence.export_corpus(documents))
    total = sum(len(d.sentences) for d in documents)
    print(f"wrote {len(documents)} documents, {total} sentences to {args.out}")
    return 0


def _load_gold(path: str, documents) -> dict[tuple[str, int], bool]:
    by_filename = {d.filename: d.doc_id for d in documents}
    gold: dict[tuple[str, int], bool] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        required = {"document", "sentence_index", "label"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise MalformedInput(
                f"gold CSV must have columns {sorted(required)}"
            )
        for row in reader:
            document = row["document"]
            if document not in by_filename:
                raise MalformedInput(f"gold references unknown document {document!r}")
            key = (by_filename[document], int(row["sentence_index"]))
            gold[key] = row["label"].strip().lower() == RELEVANT
    return gold


def cmd_simulate(args) -> int:
    embedding_kind = EMBEDDING_FLAGS[args.embedding]
    endpoint = args.provider_endpoint if embedding_kind == EXTERNAL_DENSE else None
    if embedding_kind == EXTERNAL_DENSE and endpoint is None:
        raise UsageError("--embedding external-dense requires --provider-endpoint")
    settings = SessionSettings(
        embedding=EmbeddingConfig(kind=embedding_kind, provider_endpoint=endpoint),
        classifier=ClassifierConfig(kind=CLASSIFIER_FLAGS[args.classifier]),
        batch_size=args.batch_size,
    )
    seeds = list(range(args.seeds))

    if args.synthetic:
        collections = {
            seed: simulate.make_synthetic_collection(
                n_docs=args.docs,
                sentences_per_doc=args.sentences_per_doc,
                relevant_fraction=args.relevant_fraction,
                seed=seed,
            )
            for seed in seeds
        }
        documents_for_seed = lambda s: collections[s].documents
        query_for_seed = lambda s: collections[s].query
        gold_for_seed = lambda s: collections[s].gold
    else:
        if not (args.corpus and args.gold and (args.query or args.query_file)):
            raise UsageError(
                "simulate needs --corpus, --gold and --query/--query-file, "
                "or --synthetic"
            )
        documents = persistence.import_corpus(Path(args.corpus).read_bytes())
        query = args.query or Path(args.query_file).read_text(encoding="utf-8").strip()
        gold = _load_gold(args.gold, documents)
        documents_for_seed = lambda s: documents
        query_for_seed = lambda s: query
        gold_for_seed = lambda s: gold

    report = simulate.simulate(
        documents_for_seed,
        query_for_seed,
        gold_for_seed,
        settings,
        seeds,
        stop_threshold=args.stop_threshold,
        compare_baseline=not args.no_baseline,
        recall_effort=args.recall_effort,
    )

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_bytes(
        json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2).encode("utf-8")
    )
    buffer = io.StringIO()
    writer = csv.writer(buffer)
    writer.writerow(["seed", "mode", "batch", "phase", "effort", "precision", "recall"])
    for run in report["runs"]:
        for turn in run["turns"]:
            writer.writerow(
                [
                    run["seed"],
                    run["mode"],
                    turn["batch"],
                    turn["phase"],
                    turn["effort"],
                    turn["precision"],
                    turn["recall"],
                ]
            )
    (out_dir / "series.csv").write_bytes(buffer.getvalue().encode("utf-8"))
    if "baseline_pr_curve" in report:
        (out_dir / "pr_curve.csv").write_bytes(
            metrics.series_to_csv(
                [tuple(p) for p in report["baseline_pr_curve"]],
                ("recall", "precision"),
            )
        )
    if "summary" in report:
        summary = report["summary"]
        print(
            f"cal recall@{args.recall_effort:g}: {summary['mean_cal_recall']:.3f}  "
            f"baseline: {summary['mean_baseline_recall']:.3f}  "
            f"wins: {summary['wins']}/{summary['total']}"
        )
    print(f"report written to {out_dir}")
    return 0


def cmd_evaluate(args) -> int:
    session = persistence.import_state(Path(args.state).read_bytes())
    shown_count = len(session.shown)
    history = session.label_history
    total = len(session.sentences())

    collection_texts = [s.text for s in session.sentences()]
    summary_texts = [s.text for s in session.relevant_sentences()]
    support = set()
    for text in collection_texts + summary_texts:
        support.update(tokenize(text, WORD_UNIGRAM))
    if support:
        collection_dist = metrics.unigram_distribution(collection_texts, support)
        summary_dist = metrics.unigram_distribution(summary_texts, support)
        divergence = metrics.kl_divergence(summary_dist, collection_dist)
    else:
        divergence = 0.0

    report = metrics.MetricsReport(
        precision_overall=(
            metrics.precision(history, shown_count) if shown_count else None
        ),
        precision_vs_effort=(
            metrics.precision_vs_effort(history, total) if total else []
        ),
        kl_divergence=divergence,
        label_counts_per_document=session.label_counts_per_document(),
        shown_count=shown_count,
        total_sentences=total,
    )
    payload = metrics.report_to_json(report)
    if args.out:
        Path(args.out).write_bytes(payload)
    else:
        sys.stdout.write(payload.decode("utf-8") + "\n")
    if args.csv_dir:
        csv_dir = Path(args.csv_dir)
        csv_dir.mkdir(parents=True, exist_ok=True)
        (csv_dir / "precision_vs_effort.csv").write_bytes(
            metrics.series_to_csv(report.precision_vs_effort, ("effort", "precision"))
        )
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    if not 0 <= args.port <= 65535:
        raise UsageError(f"port {args.port} outside 0..65535")
    if args.static_dir and not Path(args.static_dir).is_dir():
        raise UsageError(f"static dir {args.static_dir!r} does not exist")
    app = create_app(
        ServiceConfig(
            extractors=build_extractors(args.extractor),
            provider_endpoint=args.provider_endpoint,
            max_documents=args.max_documents,
            session_ttl_seconds=args.session_ttl,
            static_dir=args.static_dir,
        )
    )
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "ingest":
            return cmd_ingest(args)
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "evaluate":
            return cmd_evaluate(args)
        if args.command == "serve":
            return cmd_serve(args)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as exc:
        print(f"calsum: {exc}", file=sys.stderr)
        return 1
    except (CalsumError, OSError) as exc:
        print(f"calsum: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
