"""Extractive question answering over markdown corpora.

Pipeline: chunk markdown documents along their section structure, index
the chunks lexically and densely, retrieve per query, extract verbatim
evidence spans, and evaluate span predictions against gold annotations
with overlap-tolerant metrics.
"""

from .corpus import Chunk, Document, ExtractionResult, GoldRow, SectionNode
from .spans import CharSpan

__version__ = "0.1.0"

__all__ = [
    "CharSpan",
    "Chunk",
    "Document",
    "ExtractionResult",
    "GoldRow",
    "SectionNode",
    "__version__",
]
