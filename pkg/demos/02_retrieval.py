"""Hybrid retrieval: BM25, dense cosine, and reciprocal-rank fusion.

Run: python3 demos/02_retrieval.py
"""

from spanqa.chunker import ChunkerConfig, chunk_document
from spanqa.corpus import Document
from spanqa.embeddings import HashEmbedder
from spanqa.retrieval import build_index, dense_search, hybrid_search, lexical_search

DOCS = {
    "sourdough": """\
# Sourdough Starter Maintenance

A starter is a stable culture of wild yeast and lactic acid bacteria.
Feed it flour and water on a schedule; the rise-and-fall curve tells you
when it is ready. A neglected starter smells of acetone and needs two or
three feedings to recover its leavening power before baking day.
""",
    "telescope": """\
# Collimating a Newtonian Telescope

Collimation aligns the primary and secondary mirrors so starlight comes
to focus on the eyepiece axis. Center-spot the primary mirror, aim a
laser or sight tube down the focuser, and walk the adjustment screws
until the reflection sits dead center. Check again after transport.
""",
    "compost": """\
# Hot Composting in Small Yards

A hot pile needs a carbon to nitrogen ratio near thirty to one, steady
moisture, and enough mass to insulate itself. Turn the pile when the
core cools below fifty degrees Celsius; finished compost smells like
forest soil and no longer heats after turning.
""",
}


def show(label: str, hits, by_id) -> None:
    print(f"{label}:")
    for rank, hit in enumerate(hits, start=1):
        title = " > ".join(by_id[hit.chunk_ref].title_path)
        print(f"  {rank}. {hit.score:10.6f}  {hit.chunk_ref:<18} {title}")
    print()


def main() -> None:
    cfg = ChunkerConfig(min_chunk_chars=120, max_chunk_chars=800)
    chunks = []
    for doc_id, markdown in DOCS.items():
        doc = Document(doc_id=doc_id, source_path=f"{doc_id}.md", title="", markdown=markdown)
        chunks.extend(chunk_document(doc, cfg))
    by_id = {chunk.chunk_id: chunk for chunk in chunks}

    embedder = HashEmbedder("demo", dim=64)
    lexical, dense = build_index(chunks, embedder)
    print(f"indexed {dense.doc_count} chunks, {len(lexical.postings)} lexical terms, dim {dense.dim}\n")

    query = "when is the starter ready for baking"
    print(f"query: {query!r}\n")
    show("lexical (BM25)", lexical_search(lexical, query, 3), by_id)
    show("dense (cosine over mock embeddings)", dense_search(dense, query, embedder, 3), by_id)
    show("hybrid (reciprocal-rank fusion)", hybrid_search(lexical, dense, query, embedder, 3), by_id)

    print("fusion only compares ranks, never raw scores, so it is stable\n"
          "under any monotone rescaling of either ranking.")


if __name__ == "__main__":
    main()
