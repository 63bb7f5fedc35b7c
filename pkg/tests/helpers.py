"""Shared builders for test fixtures: chunks, scripted LLM scripts."""

from __future__ import annotations

from spanqa.corpus import Chunk
from spanqa.extraction import PromptMode, build_prompt
from spanqa.llm import ScriptedLlmClient, prompt_digest
from spanqa.prompts import (
    CLASSIFY_TYPES,
    GENERATE_QUESTION,
    REWRITE_QUERY,
    fill,
    load_template,
)
from spanqa.querygen import QUESTION_TYPE_CATALOG
from spanqa.spans import CharSpan


def make_chunk(
    body: str,
    chunk_id: str = "doc#0000",
    doc_id: str = "doc",
    title_path: tuple[str, ...] = ("Title",),
    prefix: str = "",
    start: int = 0,
    atomic_oversize: bool = False,
) -> Chunk:
    return Chunk(
        chunk_id=chunk_id,
        doc_id=doc_id,
        title_path=title_path,
        prefix=prefix,
        body=body,
        source_range=CharSpan(start, start + len(body)),
        atomic_oversize=atomic_oversize,
    )


def classify_prompt(chunk_body: str) -> str:
    return fill(load_template(CLASSIFY_TYPES), {"{chunk}": chunk_body})


def generate_prompt(chunk_body: str, type_name: str) -> str:
    entry = next(e for e in QUESTION_TYPE_CATALOG if e.name == type_name)
    return fill(
        load_template(GENERATE_QUESTION),
        {
            "{chunk}": chunk_body,
            "{q_type}": entry.name,
            "{q_def}": entry.definition,
            "{q_ex}": entry.example,
        },
    )


def rewrite_prompt(question: str) -> str:
    return fill(load_template(REWRITE_QUERY), {"{question}": question})


def synthesis_script(
    chunks: list[Chunk],
    type_names: list[str],
    question_for: callable = None,
    query_for: callable = None,
) -> dict[str, str]:
    """Script a full classify -> generate -> rewrite chain for each chunk."""
    question_for = question_for or (lambda c, t: f"What does the {t.lower()} part of {c.chunk_id} say?")
    query_for = query_for or (lambda q: " ".join(q.lower().rstrip("?").split()[:4]))
    script: dict[str, str] = {}
    names_json = "[" + ", ".join(f'"{n}"' for n in type_names) + "]"
    for chunk in chunks:
        script[prompt_digest(classify_prompt(chunk.body))] = names_json
        for name in type_names:
            question = question_for(chunk, name)
            script[prompt_digest(generate_prompt(chunk.body, name))] = question
            script[prompt_digest(rewrite_prompt(question))] = query_for(question)
    return script


def synthesis_client(chunks: list[Chunk], type_names: list[str], **kw) -> ScriptedLlmClient:
    return ScriptedLlmClient(synthesis_script(chunks, type_names, **kw), model_id="scripted")


def extraction_script(
    query: str, chunks: list[Chunk], payload: str, mode: PromptMode = PromptMode.DEFAULT
) -> dict[str, str]:
    """Script one multi-document extraction call returning ``payload``."""
    docs = [(f"doc_{i}", c.body) for i, c in enumerate(chunks)]
    return {prompt_digest(build_prompt(mode, query, docs)): payload}
