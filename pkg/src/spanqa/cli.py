"""Command-line interface: the pipeline verbs.

Verbs compose the library modules into file-to-file pipeline stages:
``chunk`` -> ``index`` -> ``search`` for retrieval, ``genqueries`` for
synthetic benchmarks, ``extract`` -> ``eval`` for the span benchmark,
and ``serve`` for the HTTP service.

Exit codes: 0 success, 1 fatal error, 2 partial failure (some rows
failed but artifacts were written), 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
from dataclasses import replace
from pathlib import Path

from .chunker import ChunkerConfig, chunk_document
from .config import AppConfig, ConfigError, load_config, make_embedding_client, make_extractor, make_llm_client
from .corpus import (
    Chunk,
    CorpusError,
    GoldDataError,
    load_chunks,
    load_corpus,
    load_gold,
    load_results,
    save_chunks,
    save_results,
)
from .embeddings import EmbeddingError, HashEmbedder, create_embedding_client
from .extraction import ExtractionError, extract
from .llm import LlmError
from .metrics import EvaluationError, ThresholdGrid, evaluate, format_report
from .querygen import (
    QueryGenError,
    sample_chunks,
    sample_one_per_doc,
    save_queries,
    synthesize_queries,
)
from .retrieval import IndexStoreError, build_index, dense_search, hybrid_search, lexical_search, load_index, save_index
from .spans import CharSpan

logger = logging.getLogger(__name__)

USAGE_EXIT = 64

_FATAL = (
    ConfigError,
    CorpusError,
    GoldDataError,
    EvaluationError,
    IndexStoreError,
    EmbeddingError,
    LlmError,
    ExtractionError,
    QueryGenError,
    ValueError,
    OSError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 64 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def _thresholds(raw: str) -> tuple[float, ...]:
    try:
        values = tuple(float(part) for part in raw.split(","))
        ThresholdGrid(values)
        return values
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spanqa", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    sub = parser.add_subparsers(dest="verb", required=True, metavar="verb", parser_class=_Parser)

    p = sub.add_parser("chunk", help="chunk a markdown corpus into a JSONL chunk file")
    p.add_argument("--in", dest="in_dir", required=True, help="corpus directory")
    p.add_argument("--out", required=True, help="output chunk file (JSON lines)")
    p.add_argument("--min", type=int, default=None, help="minimum chunk characters")
    p.add_argument("--max", type=int, default=None, help="maximum chunk characters")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_chunk)

    p = sub.add_parser("index", help="build and persist the hybrid index")
    p.add_argument("--chunks", required=True, help="chunk file from the chunk verb")
    p.add_argument("--index-dir", required=True, help="output index directory")
    p.add_argument("--embedder", default=None, help="embedding client spec (e.g. mock://hash-v1)")
    p.add_argument("--dim", type=int, default=None, help="embedding dimensionality")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="query a persisted index")
    p.add_argument("--index-dir", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mode", choices=("lexical", "dense", "hybrid"), default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("genqueries", help="generate synthetic queries for chunks")
    p.add_argument("--chunks", required=True)
    p.add_argument("--n-chunks", type=int, default=None, help="sample size (default: one per document)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output query file (JSON lines)")
    p.add_argument("--llm", default=None, help="LLM client spec (e.g. fixture://responses.json)")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_genqueries)

    p = sub.add_parser("extract", help="extract spans for every row of a gold file")
    p.add_argument("--gold", required=True)
    p.add_argument("--backend", required=True, choices=("llm:default", "llm:paragraph", "scorer"))
    p.add_argument("--out", required=True, help="output predictions file")
    p.add_argument("--llm", default=None, help="LLM client spec override")
    p.add_argument("--scorer", default=None, help="token scorer spec override")
    p.add_argument("--diagnostics", default=None, help="optional diagnostics sidecar file")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="score predictions against a gold file")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--thresholds", type=_thresholds, default=(0.5, 0.8, 1.0))
    p.add_argument("--out", default=None, help="machine-readable report file")
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("serve", help="run the HTTP service over a persisted index")
    p.add_argument("--index-dir", default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--config", default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def _config(args: argparse.Namespace) -> AppConfig:
    return load_config(args.config)


def cmd_chunk(args: argparse.Namespace) -> int:
    config = _config(args)
    cfg = config.chunker
    if args.min is not None or args.max is not None:
        cfg = ChunkerConfig(
            min_chunk_chars=args.min if args.min is not None else cfg.min_chunk_chars,
            max_chunk_chars=args.max if args.max is not None else cfg.max_chunk_chars,
            prefix_separator=cfg.prefix_separator,
            prefix_terminator=cfg.prefix_terminator,
        )
    docs = load_corpus(args.in_dir)
    chunks = [chunk for doc in docs for chunk in chunk_document(doc, cfg)]
    save_chunks(chunks, args.out)
    oversize = sum(chunk.atomic_oversize for chunk in chunks)
    print(f"wrote {len(chunks)} chunks from {len(docs)} documents to {args.out}"
          + (f" ({oversize} atomic oversize)" if oversize else ""))
    return 0


def cmd_index(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.embedder or args.dim:
        config = replace(
            config,
            embedder=replace(
                config.embedder,
                endpoint=args.embedder or config.embedder.endpoint,
                dim=args.dim or config.embedder.dim,
            ),
        )
    chunks = load_chunks(args.chunks)
    embedder = make_embedding_client(config)
    lexical, dense = build_index(chunks, embedder)
    save_index(args.index_dir, lexical, dense, chunks)
    print(
        f"indexed {dense.doc_count} chunks ({len(lexical.postings)} terms, "
        f"dim {dense.dim}, embedder {dense.embedder_id}) into {args.index_dir}"
    )
    return 0


_MOCK_ID_RE = re.compile(r"^mock://(?P<name>[^?]+)\?dim=(?P<dim>\d+)$")


def _embedder_for(dense, args: argparse.Namespace, config: AppConfig):
    """An embedding client matching the index's embedder identity."""
    m = _MOCK_ID_RE.match(dense.embedder_id)
    if m:
        client = HashEmbedder(m.group("name"), dim=int(m.group("dim")))
    else:
        client = make_embedding_client(config)
    if client.embedder_id != dense.embedder_id:
        raise ConfigError(
            f"configured embedder {client.embedder_id!r} does not match "
            f"the index's embedder {dense.embedder_id!r}"
        )
    return client


def cmd_search(args: argparse.Namespace) -> int:
    config = _config(args)
    k = args.k if args.k is not None else config.retrieval.k
    mode = args.mode if args.mode is not None else config.retrieval.mode
    lexical, dense, chunks = load_index(args.index_dir)
    by_id = {chunk.chunk_id: chunk for chunk in chunks}
    if mode == "lexical":
        hits = lexical_search(lexical, args.query, k)
    else:
        embedder = _embedder_for(dense, args, config)
        if mode == "dense":
            hits = dense_search(dense, args.query, embedder, k)
        else:
            hits = hybrid_search(lexical, dense, args.query, embedder, k, config.retrieval.rrf_k)
    for rank, hit in enumerate(hits, start=1):
        title = " > ".join(by_id[hit.chunk_ref].title_path) if hit.chunk_ref in by_id else ""
        print(f"{rank:2d}. {hit.score:12.6f}  {hit.chunk_ref}  {title}")
    if not hits:
        print("no hits")
    return 0


def cmd_genqueries(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.llm:
        config = replace(config, llm=replace(config.llm, endpoint=args.llm))
    chunks = load_chunks(args.chunks)
    if args.n_chunks is not None:
        chunks = sample_chunks(chunks, args.n_chunks, args.seed)
    else:
        chunks = sample_one_per_doc(chunks, args.seed)
    llm = make_llm_client(config)
    queries, failures = synthesize_queries(chunks, llm)
    save_queries(queries, args.out)
    print(
        f"generated {len(queries)} queries from {len(chunks) - len(failures)} chunks "
        f"({len(failures)} failed) to {args.out}"
    )
    for failure in failures:
        logger.warning("failed chunk %s at %s: %s", failure.chunk_id, failure.stage, failure.reason)
    return 2 if failures else 0


def _gold_row_chunk(row) -> Chunk:
    doc_id = row.chunk_id.split("#", 1)[0]
    return Chunk(
        chunk_id=row.chunk_id,
        doc_id=doc_id,
        title_path=(),
        prefix="",
        body=row.chunk_text,
        source_range=CharSpan(0, len(row.chunk_text)),
    )


def cmd_extract(args: argparse.Namespace) -> int:
    config = _config(args)
    if args.llm:
        config = replace(config, llm=replace(config.llm, endpoint=args.llm))
    if args.scorer:
        config = replace(config, extraction=replace(config.extraction, scorer_endpoint=args.scorer))
    rows = load_gold(args.gold)
    backend = make_extractor(config, args.backend)

    results = []
    rejected = []
    errors = []
    total_latency = 0.0
    for row in rows:
        row_results, diagnostics = extract(
            row.query_text, [_gold_row_chunk(row)], backend, query_id=row.query_id
        )
        results.extend(row_results)
        rejected.extend(
            {"query_id": row.query_id, "chunk_id": cid, "span_text": text}
            for cid, text in diagnostics.rejected_spans
        )
        errors.extend(
            {"query_id": row.query_id, "chunk_id": cid, "reason": msg}
            for cid, msg in diagnostics.errors
        )
        total_latency += diagnostics.latency_seconds
    save_results(results, args.out)
    if args.diagnostics:
        payload = {
            "rejected_spans": rejected,
            "errors": errors,
            "total_latency_seconds": round(total_latency, 6),
        }
        Path(args.diagnostics).write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    abstained = sum(r.abstained for r in results)
    print(
        f"extracted {sum(len(r.spans) for r in results)} spans over {len(results)} rows "
        f"({abstained} abstentions, {len(rejected)} rejected spans, {len(errors)} failed rows) "
        f"to {args.out}"
    )
    return 2 if errors else 0


def cmd_eval(args: argparse.Namespace) -> int:
    gold = load_gold(args.gold)
    preds = load_results(args.pred)
    report = evaluate(gold, preds, ThresholdGrid(tuple(args.thresholds)))
    print(format_report(report), end="")
    if args.out:
        Path(args.out).write_text(
            json.dumps(report.to_dict(), ensure_ascii=False, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    config = _config(args)
    if args.index_dir:
        config = replace(config, index_dir=args.index_dir)
    host = args.host if args.host is not None else config.server.host
    port = args.port if args.port is not None else config.server.port
    try:
        app = create_app(config)
    except RuntimeError as exc:
        logger.error("%s", exc)
        return 1
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except _FATAL as exc:
        logger.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
