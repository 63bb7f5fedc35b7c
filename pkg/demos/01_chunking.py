"""Section-aware chunking: bounds, title prefixes, verbatim source ranges.

Run: python3 demos/01_chunking.py
"""

from spanqa.chunker import ChunkerConfig, chunk_document, render_chunk_text
from spanqa.corpus import Document

MARKDOWN = """\
# Field Notes on Espresso Extraction

Espresso is a percolation process: hot water is forced through a bed of
finely ground coffee at roughly nine bars of pressure. Grind size, dose,
and contact time jointly determine how much soluble material ends up in
the cup.

## Grind and Dose

A finer grind exposes more surface area and slows the flow. Doses between
16 and 20 grams are typical for a double basket. If the puck is uneven,
water channels through the path of least resistance and the shot tastes
simultaneously sour and bitter.

| dose (g) | yield (g) | time (s) |
|----------|-----------|----------|
| 16       | 32        | 27       |
| 18       | 36        | 29       |
| 20       | 40        | 31       |

## Temperature

Water temperature shifts the balance of extracted compounds. Lower
temperatures favor acids; higher temperatures pull more bitter phenolics.
Most machines settle between 90 and 96 degrees Celsius, and single-degree
changes are tastable in lighter roasts.
"""


def main() -> None:
    doc = Document(
        doc_id="espresso",
        source_path="espresso.md",
        title="Field Notes on Espresso Extraction",
        markdown=MARKDOWN,
    )
    cfg = ChunkerConfig(min_chunk_chars=200, max_chunk_chars=600)
    chunks = chunk_document(doc, cfg)

    print(f"{len(chunks)} chunks, bounds [{cfg.min_chunk_chars}, {cfg.max_chunk_chars}]\n")
    for chunk in chunks:
        rendered = render_chunk_text(chunk)
        print(f"-- {chunk.chunk_id}  ({len(rendered)} chars"
              + (", atomic oversize" if chunk.atomic_oversize else "") + ")")
        print(f"   title path : {' > '.join(chunk.title_path)}")
        print(f"   source     : [{chunk.source_range.start}, {chunk.source_range.end})")
        print(f"   body starts: {chunk.body[:60]!r}\n")

    # the body is a verbatim slice of the source document, always
    for chunk in chunks:
        sliced = doc.markdown[chunk.source_range.start : chunk.source_range.end]
        assert sliced == chunk.body
    print("every chunk body is a verbatim slice of the source markdown")

    # tables never split across chunks
    table_holders = [c for c in chunks if "| dose (g) |" in c.body]
    assert len(table_holders) == 1 and "| 20       |" in table_holders[0].body
    print("the table travels whole inside a single chunk")


if __name__ == "__main__":
    main()
