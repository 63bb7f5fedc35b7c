"""Hybrid retrieval: lexical BM25, exact dense search, and rank fusion."""

from .dense import DenseIndex, dense_search
from .fusion import DEFAULT_RRF_K, hybrid_search, rrf_fuse
from .lexical import (
    LexicalIndex,
    SearchHit,
    build_lexical_index,
    lexical_search,
    rank_hits,
    tokenize,
)
from .store import (
    INDEX_FORMAT_VERSION,
    IndexStoreError,
    IndexVersionError,
    build_index,
    load_index,
    save_index,
)

__all__ = [
    "DEFAULT_RRF_K",
    "INDEX_FORMAT_VERSION",
    "DenseIndex",
    "IndexStoreError",
    "IndexVersionError",
    "LexicalIndex",
    "SearchHit",
    "build_index",
    "build_lexical_index",
    "dense_search",
    "hybrid_search",
    "lexical_search",
    "load_index",
    "rank_hits",
    "rrf_fuse",
    "save_index",
    "tokenize",
]
