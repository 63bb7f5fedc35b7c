"""BM25 lexical index over chunk texts.

Tokenization is unicode-aware lowercasing into letter/digit runs — no
stemming, no stopwords — so rankings are reproducible across platforms
and technical vocabulary stays intact. Scoring is BM25 with the usual
(k1, b) saturation/length-normalization parameters and a non-negative
idf; repeated query tokens contribute once per occurrence.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Lowercase unicode word tokens (letters and digits, no underscores)."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True, slots=True)
class SearchHit:
    chunk_ref: str
    score: float
    lexical_rank: int | None = None
    dense_rank: int | None = None


def rank_hits(scored: dict[str, float], k: int) -> list[SearchHit]:
    """Top-k hits sorted by descending score, ties by chunk_ref ascending."""
    ordered = sorted(scored.items(), key=lambda item: (-item[1], item[0]))
    return [SearchHit(chunk_ref, score) for chunk_ref, score in ordered[:k]]


@dataclass(frozen=True, slots=True)
class LexicalIndex:
    postings: dict[str, list[tuple[int, int]]]  # term -> [(doc position, tf)]
    doc_lengths: tuple[int, ...]
    chunk_refs: tuple[str, ...]
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if len(self.doc_lengths) != len(self.chunk_refs):
            raise ValueError(
                f"doc_lengths has {len(self.doc_lengths)} entries "
                f"for {len(self.chunk_refs)} chunks"
            )

    @property
    def doc_count(self) -> int:
        return len(self.chunk_refs)

    @property
    def avg_doc_length(self) -> float:
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths) / len(self.doc_lengths)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log((self.doc_count - df + 0.5) / (df + 0.5) + 1.0)


def build_lexical_index(
    texts: list[str], chunk_refs: list[str], *, k1: float = 1.2, b: float = 0.75
) -> LexicalIndex:
    postings: dict[str, list[tuple[int, int]]] = {}
    doc_lengths = []
    for position, text in enumerate(texts):
        tokens = tokenize(text)
        doc_lengths.append(len(tokens))
        for term, tf in sorted(Counter(tokens).items()):
            postings.setdefault(term, []).append((position, tf))
    return LexicalIndex(
        postings=postings,
        doc_lengths=tuple(doc_lengths),
        chunk_refs=tuple(chunk_refs),
        k1=k1,
        b=b,
    )


def lexical_search(index: LexicalIndex, query: str, k: int) -> list[SearchHit]:
    """Top-k chunks by BM25 score for the query's tokens.

    Raises:
        ValueError: If ``k < 1`` or the query tokenizes to zero terms.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    terms = tokenize(query)
    if not terms:
        raise ValueError(f"empty query: {query!r} has no indexable terms")
    avgdl = index.avg_doc_length
    scores: dict[int, float] = {}
    for term in terms:
        rows = index.postings.get(term)
        if not rows:
            continue
        idf = index.idf(term)
        for position, tf in rows:
            if avgdl > 0:
                norm = index.k1 * (1.0 - index.b + index.b * index.doc_lengths[position] / avgdl)
            else:
                norm = index.k1
            scores[position] = scores.get(position, 0.0) + idf * tf * (index.k1 + 1.0) / (tf + norm)
    by_ref = {index.chunk_refs[position]: score for position, score in scores.items()}
    hits = rank_hits(by_ref, k)
    return [
        SearchHit(hit.chunk_ref, hit.score, lexical_rank=rank)
        for rank, hit in enumerate(hits, start=1)
    ]
