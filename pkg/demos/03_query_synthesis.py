"""Synthetic query generation: classify -> generate -> rewrite, offline.

The three-stage pipeline normally talks to a chat-completions endpoint.
Here a scripted client replays canned responses keyed by prompt digest,
which is exactly how the test suite and the fixture:// endpoint work, so
the demo runs without any network access or API key.

Run: python3 demos/03_query_synthesis.py
"""

import json

from spanqa.chunker import ChunkerConfig, chunk_document
from spanqa.corpus import Document
from spanqa.llm import ScriptedLlmClient, prompt_digest
from spanqa.prompts import (
    CLASSIFY_TYPES,
    GENERATE_QUESTION,
    REWRITE_QUERY,
    fill,
    load_template,
)
from spanqa.querygen import QUESTION_TYPE_CATALOG, synthesize_queries

MARKDOWN = """\
# Seed Saving for Tomatoes

Tomato seeds ferment in their own gel for two to three days before
drying. Fermentation dissolves the germination-inhibiting coat and kills
several seed-borne pathogens. Dry seeds on a labeled paper plate for two
weeks; fully dry seeds snap rather than bend and store for five years or
more in a cool, dark cupboard.
"""

CHOSEN_TYPES = ["Definition", "Instrumental/Procedural", "Quantification"]

ANSWERS = {
    "Definition": "What is seed fermentation in tomato seed saving?",
    "Instrumental/Procedural": "How are tomato seeds dried after fermentation?",
    "Quantification": "How long do properly dried tomato seeds store?",
}


def scripted_client(chunk_body: str) -> ScriptedLlmClient:
    """Script the full three-stage conversation for one chunk."""
    responses = {}
    classify_prompt = fill(load_template(CLASSIFY_TYPES), {"{chunk}": chunk_body})
    responses[prompt_digest(classify_prompt)] = json.dumps(CHOSEN_TYPES)
    for entry in QUESTION_TYPE_CATALOG:
        if entry.name not in ANSWERS:
            continue
        question = ANSWERS[entry.name]
        generate_prompt = fill(
            load_template(GENERATE_QUESTION),
            {
                "{chunk}": chunk_body,
                "{q_type}": entry.name,
                "{q_def}": entry.definition,
                "{q_ex}": entry.example,
            },
        )
        responses[prompt_digest(generate_prompt)] = question
        rewrite_prompt = fill(load_template(REWRITE_QUERY), {"{question}": question})
        responses[prompt_digest(rewrite_prompt)] = " ".join(
            question.lower().rstrip("?").split()[:5]
        )
    return ScriptedLlmClient(responses)


def main() -> None:
    doc = Document(doc_id="seeds", source_path="seeds.md", title="", markdown=MARKDOWN)
    (chunk,) = chunk_document(doc, ChunkerConfig(min_chunk_chars=100, max_chunk_chars=800))

    queries, failures = synthesize_queries([chunk], scripted_client(chunk.body))
    assert not failures

    print(f"chunk {chunk.chunk_id}: {len(queries)} synthetic queries\n")
    for query in queries:
        print(f"  [{query.question_type}]")
        print(f"    question : {query.question}")
        print(f"    query    : {query.query}")
        print(f"    traced as: {query.provenance}\n")

    print("a chunk contributes either every requested query or none:\n"
          "any stage failing after retries voids the chunk's whole batch,\n"
          "so downstream benchmarks never see half-generated rows.")


if __name__ == "__main__":
    main()
