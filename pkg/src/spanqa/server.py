"""HTTP service: search, extraction, and the composed query endpoint.

The index is loaded once at startup and never mutated; request handling
is read-only and safe under concurrency. Endpoints:

* ``GET  /health`` — liveness and index size
* ``GET  /search?q=&k=&mode=`` — ranked chunk hits
* ``POST /extract`` — spans for a query over named or inline chunks
* ``POST /query`` — search then extract, one round trip
* ``GET  /chunks/{chunk_id}`` — stored chunk by id

Every span returned anywhere is re-checked to be an exact substring of
the chunk body shipped in the same response.
"""

from __future__ import annotations

import logging
import time

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware

from .config import AppConfig, make_embedding_client, make_extractor
from .corpus import Chunk, chunk_to_record
from .embeddings import EmbeddingClient
from .extraction import SpanExtractor, extract
from .retrieval import (
    DenseIndex,
    LexicalIndex,
    SearchHit,
    dense_search,
    hybrid_search,
    lexical_search,
    load_index,
)
from .spans import CharSpan

logger = logging.getLogger(__name__)


class _State:
    """Immutable service state shared by all requests."""

    def __init__(
        self,
        config: AppConfig,
        lexical: LexicalIndex,
        dense: DenseIndex,
        chunks: list[Chunk],
        embedder: EmbeddingClient,
        extractor: SpanExtractor,
    ) -> None:
        self.config = config
        self.lexical = lexical
        self.dense = dense
        self.chunks = {chunk.chunk_id: chunk for chunk in chunks}
        self.embedder = embedder
        self.extractor = extractor

    def search(self, query: str, k: int, mode: str) -> list[SearchHit]:
        if mode == "lexical":
            return lexical_search(self.lexical, query, k)
        if mode == "dense":
            return dense_search(self.dense, query, self.embedder, k)
        if mode == "hybrid":
            return hybrid_search(
                self.lexical, self.dense, query, self.embedder, k, self.config.retrieval.rrf_k
            )
        raise ValueError(f"unknown search mode {mode!r}")


def _hit_payload(state: _State, hit: SearchHit) -> dict:
    chunk = state.chunks.get(hit.chunk_ref)
    return {
        "chunk_id": hit.chunk_ref,
        "score": hit.score,
        "lexical_rank": hit.lexical_rank,
        "dense_rank": hit.dense_rank,
        "title_path": list(chunk.title_path) if chunk else [],
    }


def _checked_spans(spans: tuple[CharSpan, ...], body: str, chunk_id: str) -> list[list[int]]:
    for span in spans:
        span.validate_against(body, label=f"span for {chunk_id}")
    return [[span.start, span.end] for span in spans]


def create_app(
    config: AppConfig,
    *,
    lexical: LexicalIndex | None = None,
    dense: DenseIndex | None = None,
    chunks: list[Chunk] | None = None,
    embedder: EmbeddingClient | None = None,
    extractor: SpanExtractor | None = None,
) -> FastAPI:
    """Build the service; component overrides are for tests.

    Raises:
        RuntimeError: If no index exists at ``config.index_dir`` and no
            prebuilt components are supplied.
    """
    if lexical is None or dense is None or chunks is None:
        try:
            lexical, dense, chunks = load_index(config.index_dir)
        except Exception as exc:
            raise RuntimeError(
                f"no usable index at {config.index_dir!r} ({exc}); "
                "run the index command first"
            ) from exc
    state = _State(
        config,
        lexical,
        dense,
        chunks,
        embedder if embedder is not None else make_embedding_client(config),
        extractor if extractor is not None else make_extractor(config, "llm:default"),
    )

    app = FastAPI(title="spanqa", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=list(config.server.cors_origins),
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "chunk_count": len(state.chunks)}

    @app.get("/search")
    def search(q: str = "", k: int | None = None, mode: str | None = None) -> dict:
        k = state.config.retrieval.k if k is None else k
        mode = state.config.retrieval.mode if mode is None else mode
        try:
            hits = state.search(q, k, mode)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        return {"query": q, "mode": mode, "hits": [_hit_payload(state, h) for h in hits]}

    @app.get("/chunks/{chunk_id:path}")
    def get_chunk(chunk_id: str) -> dict:
        chunk = state.chunks.get(chunk_id)
        if chunk is None:
            raise HTTPException(status_code=404, detail=f"no chunk with id {chunk_id!r}")
        return chunk_to_record(chunk)

    async def _json_body(request: Request) -> dict:
        try:
            body = await request.json()
        except Exception as exc:
            raise HTTPException(status_code=400, detail=f"body is not valid JSON: {exc}") from exc
        if not isinstance(body, dict):
            raise HTTPException(status_code=400, detail="body must be a JSON object")
        return body

    def _resolve_chunks(body: dict) -> list[Chunk]:
        if "chunk_ids" in body:
            ids = body["chunk_ids"]
            if not isinstance(ids, list) or not all(isinstance(i, str) for i in ids) or not ids:
                raise HTTPException(status_code=400, detail="chunk_ids must be a non-empty string array")
            missing = [i for i in ids if i not in state.chunks]
            if missing:
                raise HTTPException(status_code=404, detail=f"unknown chunk id(s): {missing}")
            return [state.chunks[i] for i in ids]
        if "chunks" in body:
            raw = body["chunks"]
            if not isinstance(raw, list) or not raw:
                raise HTTPException(status_code=400, detail="chunks must be a non-empty array")
            inline = []
            for i, item in enumerate(raw):
                if not isinstance(item, dict) or not isinstance(item.get("body"), str) or not item["body"]:
                    raise HTTPException(
                        status_code=400, detail=f"chunks[{i}] needs a non-empty string body"
                    )
                chunk_id = item.get("chunk_id", f"inline_{i}")
                inline.append(
                    Chunk(
                        chunk_id=chunk_id,
                        doc_id=str(item.get("doc_id", chunk_id)),
                        title_path=(),
                        prefix="",
                        body=item["body"],
                        source_range=CharSpan(0, len(item["body"])),
                    )
                )
            return inline
        raise HTTPException(status_code=400, detail="provide chunk_ids or inline chunks")

    def _run_extraction(query: str, targets: list[Chunk]) -> tuple[list[dict], dict]:
        results, diagnostics = extract(query, targets, state.extractor, query_id="adhoc")
        by_id = {r.chunk_id: r for r in results}
        payload = []
        for chunk in targets:
            result = by_id.get(chunk.chunk_id)
            if result is None:
                reason = next(
                    (msg for cid, msg in diagnostics.errors if cid == chunk.chunk_id),
                    "backend error",
                )
                payload.append({"chunk_id": chunk.chunk_id, "error": reason})
                continue
            payload.append(
                {
                    "chunk_id": chunk.chunk_id,
                    "spans": _checked_spans(result.spans, chunk.body, chunk.chunk_id),
                    "abstained": result.abstained,
                    "backend": result.backend,
                }
            )
        diag = {
            "rejected_spans": [
                {"chunk_id": cid, "span_text": text} for cid, text in diagnostics.rejected_spans
            ],
            "errors": [{"chunk_id": cid, "reason": msg} for cid, msg in diagnostics.errors],
            "extraction_ms": round(diagnostics.latency_seconds * 1000, 3),
        }
        return payload, diag

    @app.post("/extract")
    async def extract_endpoint(request: Request) -> dict:
        body = await _json_body(request)
        query = body.get("query")
        if not isinstance(query, str) or not query.strip():
            raise HTTPException(status_code=400, detail="query must be a non-empty string")
        targets = _resolve_chunks(body)
        results, diag = _run_extraction(query, targets)
        return {"query": query, "results": results, "diagnostics": diag}

    @app.post("/query")
    async def query_endpoint(request: Request) -> dict:
        body = await _json_body(request)
        query = body.get("query")
        if not isinstance(query, str) or not query.strip():
            raise HTTPException(status_code=400, detail="query must be a non-empty string")
        k = body.get("k", state.config.retrieval.k)
        if not isinstance(k, int) or isinstance(k, bool) or k < 1:
            raise HTTPException(status_code=400, detail="k must be a positive integer")

        started = time.perf_counter()
        try:
            hits = state.search(query, k, state.config.retrieval.mode)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        retrieval_ms = round((time.perf_counter() - started) * 1000, 3)

        hit_payloads = []
        extraction_ms = 0.0
        if hits:
            targets = [state.chunks[h.chunk_ref] for h in hits]
            results, diag = _run_extraction(query, targets)
            extraction_ms = diag["extraction_ms"]
            by_id = {r["chunk_id"]: r for r in results}
            for hit in hits:
                chunk = state.chunks[hit.chunk_ref]
                result = by_id[hit.chunk_ref]
                payload = {
                    "chunk_id": hit.chunk_ref,
                    "title_path": list(chunk.title_path),
                    "chunk_body": chunk.body,
                    "score": hit.score,
                    "spans": result.get("spans", []),
                    "abstained": result.get("abstained", True),
                }
                if "error" in result:
                    payload["error"] = result["error"]
                hit_payloads.append(payload)
        return {
            "query": query,
            "hits": hit_payloads,
            "timing": {"retrieval_ms": retrieval_ms, "extraction_ms": extraction_ms},
        }

    return app
