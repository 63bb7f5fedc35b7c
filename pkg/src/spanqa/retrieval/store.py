"""Index construction and versioned on-disk persistence.

Directory layout: ``manifest.json`` (format version, embedder identity,
counts, per-file SHA-256 checksums), ``lexical.json`` (postings),
``dense.npy`` (vectors), and ``chunks.jsonl`` (the indexed chunks, so a
loaded index can serve chunk bodies). The manifest is checked before any
data file is read: a version or checksum mismatch fails loudly with no
partial state.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from ..chunker import render_chunk_text
from ..corpus import Chunk, load_chunks, save_chunks
from ..embeddings import EmbeddingClient, EmbeddingError
from .dense import DenseIndex
from .lexical import LexicalIndex, build_lexical_index

logger = logging.getLogger(__name__)

INDEX_FORMAT_VERSION = 1
_EMBED_BATCH_SIZE = 32

MANIFEST_FILE = "manifest.json"
LEXICAL_FILE = "lexical.json"
DENSE_FILE = "dense.npy"
CHUNKS_FILE = "chunks.jsonl"


class IndexStoreError(Exception):
    """Corrupt or unreadable index directory."""


class IndexVersionError(IndexStoreError):
    """On-disk format version differs from this build's format."""


def build_index(
    chunks: list[Chunk],
    embed: EmbeddingClient,
    *,
    k1: float = 1.2,
    b: float = 0.75,
) -> tuple[LexicalIndex, DenseIndex]:
    """Index chunks both lexically and densely over their rendered text.

    Raises:
        ValueError: On duplicate chunk_ids.
        EmbeddingError: If embedding fails; the message names the chunks
            of the failed batch.
    """
    refs = [chunk.chunk_id for chunk in chunks]
    duplicates = {ref for ref in refs if refs.count(ref) > 1} if len(set(refs)) != len(refs) else set()
    if duplicates:
        raise ValueError(f"duplicate chunk_ids: {sorted(duplicates)}")
    texts = [render_chunk_text(chunk) for chunk in chunks]
    lexical = build_lexical_index(texts, refs, k1=k1, b=b)

    rows = []
    for start in range(0, len(texts), _EMBED_BATCH_SIZE):
        batch = texts[start : start + _EMBED_BATCH_SIZE]
        try:
            rows.append(embed.embed(batch))
        except EmbeddingError as exc:
            failed = ", ".join(refs[start : start + len(batch)])
            raise EmbeddingError(f"embedding failed for chunks [{failed}]: {exc}") from exc
    if rows:
        vectors = np.vstack(rows)
    else:
        vectors = np.zeros((0, embed.dim), dtype=np.float64)
    dense = DenseIndex(embedder_id=embed.embedder_id, vectors=vectors, chunk_refs=tuple(refs))
    return lexical, dense


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def save_index(
    directory: str | Path, lexical: LexicalIndex, dense: DenseIndex, chunks: list[Chunk]
) -> None:
    """Persist an index directory; overwrites existing files in place."""
    if tuple(lexical.chunk_refs) != tuple(dense.chunk_refs):
        raise ValueError("lexical and dense indexes cover different chunk sets")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    save_chunks(chunks, directory / CHUNKS_FILE)
    lexical_payload = {
        "k1": lexical.k1,
        "b": lexical.b,
        "chunk_refs": list(lexical.chunk_refs),
        "doc_lengths": list(lexical.doc_lengths),
        "postings": {term: rows for term, rows in sorted(lexical.postings.items())},
    }
    with open(directory / LEXICAL_FILE, "w", encoding="utf-8") as handle:
        json.dump(lexical_payload, handle, ensure_ascii=False, sort_keys=True, indent=None)
        handle.write("\n")
    np.save(directory / DENSE_FILE, dense.vectors.astype(np.float64, copy=False))

    manifest = {
        "format_version": INDEX_FORMAT_VERSION,
        "embedder_id": dense.embedder_id,
        "dim": dense.dim,
        "chunk_count": dense.doc_count,
        "term_count": len(lexical.postings),
        "checksums": {
            name: _sha256(directory / name) for name in (CHUNKS_FILE, LEXICAL_FILE, DENSE_FILE)
        },
    }
    with open(directory / MANIFEST_FILE, "w", encoding="utf-8") as handle:
        json.dump(manifest, handle, ensure_ascii=False, sort_keys=True, indent=2)
        handle.write("\n")
    logger.info(
        "saved index: %d chunks, %d terms, dim %d at %s",
        dense.doc_count,
        len(lexical.postings),
        dense.dim,
        directory,
    )


def load_index(directory: str | Path) -> tuple[LexicalIndex, DenseIndex, list[Chunk]]:
    """Load a persisted index directory, verifying version and checksums.

    Raises:
        IndexVersionError: Format version mismatch; re-run indexing.
        IndexStoreError: Missing files or checksum mismatches.
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_FILE
    if not manifest_path.is_file():
        raise IndexStoreError(f"no index manifest at {manifest_path}")
    with open(manifest_path, encoding="utf-8") as handle:
        manifest = json.load(handle)

    version = manifest.get("format_version")
    if version != INDEX_FORMAT_VERSION:
        raise IndexVersionError(
            f"index format version {version} != supported {INDEX_FORMAT_VERSION}; "
            "re-run the index command to rebuild"
        )
    for name, expected in sorted(manifest.get("checksums", {}).items()):
        path = directory / name
        if not path.is_file():
            raise IndexStoreError(f"index file missing: {path}")
        actual = _sha256(path)
        if actual != expected:
            raise IndexStoreError(
                f"checksum mismatch for {name}: expected {expected}, got {actual}; "
                "the index is truncated or corrupted"
            )

    with open(directory / LEXICAL_FILE, encoding="utf-8") as handle:
        payload = json.load(handle)
    lexical = LexicalIndex(
        postings={term: [tuple(row) for row in rows] for term, rows in payload["postings"].items()},
        doc_lengths=tuple(payload["doc_lengths"]),
        chunk_refs=tuple(payload["chunk_refs"]),
        k1=payload["k1"],
        b=payload["b"],
    )
    vectors = np.load(directory / DENSE_FILE)
    dense = DenseIndex(
        embedder_id=manifest["embedder_id"],
        vectors=vectors,
        chunk_refs=tuple(payload["chunk_refs"]),
    )
    if dense.dim != manifest.get("dim") or dense.doc_count != manifest.get("chunk_count"):
        raise IndexStoreError("manifest counts disagree with the dense vectors file")
    chunks = load_chunks(directory / CHUNKS_FILE)
    return lexical, dense, chunks
