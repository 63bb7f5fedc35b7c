"""Reciprocal-rank fusion of the lexical and dense rankings.

Each sub-ranking contributes 1 / (rrf_k + rank) per chunk, rank 1-based.
RRF is scale-free: it never compares BM25 scores with cosines, only
positions, so the fused order is stable under any monotone rescoring of
either input list.
"""

from __future__ import annotations

from ..embeddings import EmbeddingClient
from .dense import DenseIndex, dense_search
from .lexical import LexicalIndex, SearchHit, lexical_search

DEFAULT_RRF_K = 60
_CANDIDATE_FLOOR = 50


def rrf_fuse(rankings: list[list[SearchHit]], k: int, rrf_k: int = DEFAULT_RRF_K) -> list[SearchHit]:
    """Fuse ranked hit lists; top-k by summed reciprocal ranks."""
    if rrf_k < 0:
        raise ValueError(f"rrf_k must be >= 0, got {rrf_k}")
    fused: dict[str, float] = {}
    lexical_ranks: dict[str, int] = {}
    dense_ranks: dict[str, int] = {}
    for ranking in rankings:
        for position, hit in enumerate(ranking, start=1):
            fused[hit.chunk_ref] = fused.get(hit.chunk_ref, 0.0) + 1.0 / (rrf_k + position)
            if hit.lexical_rank is not None:
                lexical_ranks[hit.chunk_ref] = hit.lexical_rank
            if hit.dense_rank is not None:
                dense_ranks[hit.chunk_ref] = hit.dense_rank
    ordered = sorted(fused.items(), key=lambda item: (-item[1], item[0]))
    return [
        SearchHit(
            chunk_ref,
            score,
            lexical_rank=lexical_ranks.get(chunk_ref),
            dense_rank=dense_ranks.get(chunk_ref),
        )
        for chunk_ref, score in ordered[:k]
    ]


def hybrid_search(
    lex: LexicalIndex,
    dense: DenseIndex,
    query: str,
    embed: EmbeddingClient,
    k: int,
    rrf_k: int = DEFAULT_RRF_K,
) -> list[SearchHit]:
    """Fused top-k over both indexes, drawing candidates from each top max(k, 50).

    Raises:
        ValueError: If ``k < 1``.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    depth = max(k, _CANDIDATE_FLOOR)
    lexical_hits = lexical_search(lex, query, depth)
    dense_hits = dense_search(dense, query, embed, depth)
    return rrf_fuse([lexical_hits, dense_hits], k, rrf_k)
