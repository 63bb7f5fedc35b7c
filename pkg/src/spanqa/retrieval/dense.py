"""Exact dense vector search over unit-normalized chunk embeddings.

Scores are cosine similarities, which reduce to dot products because all
vectors are unit-normalized at build time. Search is a full scan: exact
by construction, and fast enough for desk-scale corpora.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..embeddings import EmbeddingClient
from .lexical import SearchHit, rank_hits

_NORM_TOLERANCE = 1e-6


@dataclass(frozen=True)
class DenseIndex:
    embedder_id: str
    vectors: np.ndarray  # shape (doc_count, dim)
    chunk_refs: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.vectors.ndim != 2:
            raise ValueError(f"vectors must be 2-dimensional, got shape {self.vectors.shape}")
        if len(self.chunk_refs) != self.vectors.shape[0]:
            raise ValueError(
                f"{len(self.chunk_refs)} chunk_refs for {self.vectors.shape[0]} vectors"
            )
        if self.vectors.shape[0]:
            norms = np.linalg.norm(self.vectors, axis=1)
            worst = float(np.max(np.abs(norms - 1.0)))
            if worst > _NORM_TOLERANCE:
                raise ValueError(f"vectors are not unit-normalized (worst deviation {worst:.2e})")

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    @property
    def doc_count(self) -> int:
        return int(self.vectors.shape[0])


def dense_search(
    index: DenseIndex, query: str, embed: EmbeddingClient, k: int
) -> list[SearchHit]:
    """Top-k chunks by cosine similarity to the embedded query.

    Raises:
        ValueError: If ``k < 1`` or the client dimensionality differs
            from the index dimensionality.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if embed.dim != index.dim:
        raise ValueError(
            f"embedding client dim {embed.dim} does not match index dim {index.dim}"
        )
    if index.doc_count == 0:
        return []
    query_vector = embed.embed([query])[0]
    scores = index.vectors @ query_vector
    by_ref = {ref: float(score) for ref, score in zip(index.chunk_refs, scores)}
    hits = rank_hits(by_ref, k)
    return [
        SearchHit(hit.chunk_ref, hit.score, dense_rank=rank)
        for rank, hit in enumerate(hits, start=1)
    ]
