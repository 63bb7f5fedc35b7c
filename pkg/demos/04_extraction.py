"""Verbatim span extraction: location, rejection, and token scoring.

Two backends produce evidence spans. The LLM backend asks for quotes and
then refuses anything it cannot locate verbatim in the chunk — the model
never gets to invent text. The scorer backend thresholds per-token
evidence scores into spans. Both run offline here.

Run: python3 demos/04_extraction.py
"""

import json

from spanqa.corpus import Chunk
from spanqa.extraction import (
    LlmSpanExtractor,
    OverlapTokenScorer,
    PostProcessConfig,
    PromptMode,
    TokenScorerExtractor,
    build_prompt,
    extract,
)
from spanqa.llm import ScriptedLlmClient, prompt_digest
from spanqa.spans import CharSpan

BODY = (
    "Cast iron pans are seasoned by polymerizing thin layers of oil. "
    "Heat the pan past the oil's smoke point so the film bonds; repeat "
    "three or four times for a new pan. Soap does not strip a cured "
    "season, but soaking overnight will rust the bare metal."
)

CHUNK = Chunk(
    chunk_id="castiron#0000",
    doc_id="castiron",
    title_path=("Cast Iron Care",),
    prefix="",
    body=BODY,
    source_range=CharSpan(0, len(BODY)),
)

QUERY = "how do you season a cast iron pan"


def llm_backend() -> LlmSpanExtractor:
    """Scripted responses: two true quotes and one paraphrase."""
    payload = json.dumps({
        "doc_0": [
            "seasoned by polymerizing thin layers of oil",
            "Heat the pan past the oil's smoke point",
            "warm the skillet until the oil smokes",  # paraphrase: not in the text
        ]
    })
    prompt = build_prompt(PromptMode.DEFAULT, QUERY, [("doc_0", CHUNK.body)])
    client = ScriptedLlmClient({prompt_digest(prompt): payload})
    return LlmSpanExtractor(client, PromptMode.DEFAULT, PostProcessConfig())


def main() -> None:
    results, diagnostics = extract(QUERY, [CHUNK], llm_backend(), query_id="demo")
    (result,) = results

    print(f"query: {QUERY!r}\n")
    print("LLM backend located spans:")
    for span in result.spans:
        print(f"  [{span.start:3d}, {span.end:3d})  {CHUNK.body[span.start:span.end]!r}")
    print("\nrejected as non-verbatim:")
    for chunk_id, text in diagnostics.rejected_spans:
        print(f"  {chunk_id}: {text!r}")

    # the guarantee: every span is a literal slice of the chunk body
    for span in result.spans:
        assert CHUNK.body[span.start : span.end] in CHUNK.body

    scorer = TokenScorerExtractor(
        OverlapTokenScorer(),
        PostProcessConfig(min_span_chars=1, merge_gap_chars=8, decode_threshold=0.45),
    )
    results, _ = extract(QUERY, [CHUNK], scorer, query_id="demo")
    (result,) = results
    print("\ntoken-scorer backend (query-overlap scores, threshold 0.45):")
    if result.abstained:
        print("  abstained: no token run cleared the threshold")
    for span in result.spans:
        print(f"  [{span.start:3d}, {span.end:3d})  {CHUNK.body[span.start:span.end]!r}")


if __name__ == "__main__":
    main()
