"""Synthetic query generation: classify, generate, rewrite.

Each chunk yields three search queries through a three-stage LLM
pipeline: pick the three best-fitting question types from an 18-type
catalog, generate one full question per type, then rewrite each question
into the short, fragmented form users actually type. The catalog's
names and definitions are parsed out of the classification template so
prompt and code cannot drift apart.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass

from .corpus import Chunk
from .llm import LlmClient, LlmError
from .prompts import CLASSIFY_TYPES, GENERATE_QUESTION, PROMPTS_VERSION, REWRITE_QUERY, fill, load_template

logger = logging.getLogger(__name__)

TYPES_PER_CHUNK = 3
DEFAULT_RETRY_BUDGET = 2
CLASSIFY_TEMPERATURE = 0.0
GENERATE_TEMPERATURE = 0.7
REWRITE_TEMPERATURE = 0.0


class QueryGenError(Exception):
    """A pipeline stage failed after its retry budget."""

    def __init__(self, message: str, *, stage: str = "pipeline") -> None:
        super().__init__(message)
        self.stage = stage


@dataclass(frozen=True, slots=True)
class QuestionType:
    name: str
    definition: str
    example: str


_CATALOG_LINE_RE = re.compile(r"^(\d{1,2})\.\s+(.+?):\s+(.+)$")

# Illustrative questions per type, used to fill the generation prompt's
# example slot; the names and definitions come from the template itself.
_TYPE_EXAMPLES = {
    "Verification": "Does the tagger use pretrained word embeddings?",
    "Disjunctive": "Was the corpus annotated manually or automatically?",
    "Concept Completion": "What dataset was used to train the parser?",
    "Example": "What are examples of low-resource languages covered by multilingual benchmarks?",
    "Feature Specification": "What are the characteristics of the attention mechanism used?",
    "Quantification": "How many documents does the training corpus contain?",
    "Definition": "What is a subword token?",
    "Comparison": "How does the proposed model differ from the bilinear baseline?",
    "Interpretation": "What does the accuracy drop on long inputs indicate?",
    "Causal Antecedent": "Why does the model fail on sentences with negation?",
    "Causal Consequence": "What happens to recall when the decision threshold increases?",
    "Goal Orientation": "What is the purpose of the auxiliary reconstruction loss?",
    "Instrumental/Procedural": "How is the silver training data generated?",
    "Enablement": "What resources are required to reproduce the experiments?",
    "Expectation": "Why did the ensemble not outperform the single model?",
    "Judgmental": "Is the evaluation methodology adequate for morphologically rich languages?",
    "Assertion": "I could not find the inter-annotator agreement for the test set.",
    "Request/Directive": "Summarize the main findings of the error analysis.",
}


def _load_catalog() -> tuple[QuestionType, ...]:
    entries = []
    for line in load_template(CLASSIFY_TYPES).splitlines():
        m = _CATALOG_LINE_RE.match(line.strip())
        if m:
            name = m.group(2)
            entries.append(QuestionType(name, m.group(3), _TYPE_EXAMPLES[name]))
    if len(entries) != 18 or len({e.name for e in entries}) != 18:
        raise RuntimeError("classification template does not define 18 unique question types")
    return tuple(entries)


QUESTION_TYPE_CATALOG: tuple[QuestionType, ...] = _load_catalog()
_CATALOG_BY_LOWER = {entry.name.lower(): entry for entry in QUESTION_TYPE_CATALOG}


def catalog_names() -> list[str]:
    return [entry.name for entry in QUESTION_TYPE_CATALOG]


@dataclass(frozen=True, slots=True)
class SyntheticQuery:
    query_id: str
    chunk_id: str
    question_type: str
    question: str
    query: str
    provenance: str

    def __post_init__(self) -> None:
        if self.question_type.lower() not in _CATALOG_BY_LOWER:
            raise ValueError(f"unknown question_type {self.question_type!r}")
        if not self.question or not self.query:
            raise ValueError(f"query {self.query_id}: question and query must be non-empty")


@dataclass(frozen=True, slots=True)
class ChunkFailure:
    chunk_id: str
    stage: str
    reason: str


def _first_json_array(text: str) -> list | None:
    """Salvage the first top-level JSON array from free-form output."""
    depth = 0
    start = None
    in_string = False
    escaped = False
    for i, ch in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "[":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "]" and depth:
            depth -= 1
            if depth == 0 and start is not None:
                try:
                    return json.loads(text[start : i + 1])
                except json.JSONDecodeError:
                    return None
    return None


def _names_from_array(items: list) -> list[str]:
    names = []
    for item in items:
        if isinstance(item, str):
            names.append(item)
        elif isinstance(item, dict):
            for key in ("type", "name", "question_type"):
                if isinstance(item.get(key), str):
                    names.append(item[key])
                    break
            else:
                for value in item.values():
                    if isinstance(value, str):
                        names.append(value)
                        break
    return names


def classify_question_types(
    chunk_text: str, llm: LlmClient, *, retry_budget: int = DEFAULT_RETRY_BUDGET
) -> list[str]:
    """Pick the three catalog types that best fit the chunk.

    Returns exactly three canonical catalog names (deduplicated, order
    as produced). Unparseable or invalid output consumes a retry; the
    final failure raises QueryGenError.
    """
    if not chunk_text:
        raise ValueError("chunk_text must be non-empty")
    prompt = fill(load_template(CLASSIFY_TYPES), {"{chunk}": chunk_text})
    last_problem = "no attempt made"
    for _ in range(retry_budget + 1):
        try:
            response = llm.complete(prompt, temperature=CLASSIFY_TEMPERATURE)
        except LlmError as exc:
            last_problem = str(exc)
            continue
        try:
            parsed = json.loads(response)
        except json.JSONDecodeError:
            parsed = _first_json_array(response)
        if not isinstance(parsed, list):
            last_problem = f"no JSON array in response: {response[:80]!r}"
            continue
        names = []
        invalid = None
        for raw in _names_from_array(parsed):
            entry = _CATALOG_BY_LOWER.get(raw.strip().lower())
            if entry is None:
                invalid = raw
            elif entry.name not in names:
                names.append(entry.name)
        if invalid is not None:
            last_problem = f"name outside the catalog: {invalid!r}"
            continue
        if len(names) < TYPES_PER_CHUNK:
            last_problem = f"only {len(names)} unique valid type names"
            continue
        return names[:TYPES_PER_CHUNK]
    raise QueryGenError(
        f"classification failed after {retry_budget + 1} attempts: {last_problem}",
        stage="classify",
    )


_QUOTE_PAIRS = [('"', '"'), ("'", "'"), ("“", "”"), ("‘", "’")]
_LABEL_RE = re.compile(r"^(question|query|answer|search query)\s*:\s*", re.IGNORECASE)


def _strip_decorations(line: str) -> str:
    line = line.strip()
    line = _LABEL_RE.sub("", line).strip()
    for left, right in _QUOTE_PAIRS:
        if len(line) >= 2 and line.startswith(left) and line.endswith(right):
            line = line[1:-1].strip()
    return line


def generate_question(
    chunk_text: str, qtype: str, llm: LlmClient, *, retry_budget: int = DEFAULT_RETRY_BUDGET
) -> str:
    """Generate one question of the given catalog type about the chunk."""
    entry = _CATALOG_BY_LOWER.get(qtype.strip().lower())
    if entry is None:
        raise ValueError(f"question type {qtype!r} is not in the catalog")
    prompt = fill(
        load_template(GENERATE_QUESTION),
        {
            "{chunk}": chunk_text,
            "{q_type}": entry.name,
            "{q_def}": entry.definition,
            "{q_ex}": entry.example,
        },
    )
    last_problem = "no attempt made"
    for _ in range(retry_budget + 1):
        try:
            response = llm.complete(prompt, temperature=GENERATE_TEMPERATURE)
        except LlmError as exc:
            last_problem = str(exc)
            continue
        lines = [l for l in (line.strip() for line in response.splitlines()) if l]
        if len(lines) != 1:
            last_problem = f"expected a single question line, got {len(lines)}"
            continue
        question = _strip_decorations(lines[0])
        if question:
            return question
        last_problem = "empty question after normalization"
    raise QueryGenError(
        f"question generation failed after {retry_budget + 1} attempts: {last_problem}",
        stage="generate",
    )


def rewrite_query(
    question: str, llm: LlmClient, *, retry_budget: int = DEFAULT_RETRY_BUDGET
) -> str:
    """Rewrite a full question into a short search-engine query."""
    if not question:
        raise ValueError("question must be non-empty")
    prompt = fill(load_template(REWRITE_QUERY), {"{question}": question})
    last_problem = "no attempt made"
    for _ in range(retry_budget + 1):
        try:
            response = llm.complete(prompt, temperature=REWRITE_TEMPERATURE)
        except LlmError as exc:
            last_problem = str(exc)
            continue
        lines = [l for l in (line.strip() for line in response.splitlines()) if l]
        if len(lines) > 1:
            logger.warning("rewrite returned %d lines; taking the first", len(lines))
        if lines:
            query = _strip_decorations(lines[0])
            if query:
                return query
        last_problem = "empty query after normalization"
    raise QueryGenError(
        f"query rewriting failed after {retry_budget + 1} attempts: {last_problem}",
        stage="rewrite",
    )


def synthesize_for_chunk(
    chunk: Chunk, llm: LlmClient, *, retry_budget: int = DEFAULT_RETRY_BUDGET
) -> list[SyntheticQuery]:
    """Run classify, generate, rewrite for one chunk; three records out."""
    provenance = f"{llm.model_id}+prompts_{PROMPTS_VERSION}"
    types = classify_question_types(chunk.body, llm, retry_budget=retry_budget)
    records = []
    for i, qtype in enumerate(types):
        question = generate_question(chunk.body, qtype, llm, retry_budget=retry_budget)
        query = rewrite_query(question, llm, retry_budget=retry_budget)
        records.append(
            SyntheticQuery(
                query_id=f"{chunk.chunk_id}::q{i}",
                chunk_id=chunk.chunk_id,
                question_type=qtype,
                question=question,
                query=query,
                provenance=provenance,
            )
        )
    return records


def synthesize_queries(
    chunks: list[Chunk], llm: LlmClient, *, retry_budget: int = DEFAULT_RETRY_BUDGET
) -> tuple[list[SyntheticQuery], list[ChunkFailure]]:
    """Run the pipeline over many chunks, isolating per-chunk failures.

    Output is sorted by (chunk_id, query_id); a chunk either contributes
    its full triple of queries or one failure entry, never a partial set.
    """
    queries: list[SyntheticQuery] = []
    failures: list[ChunkFailure] = []
    for chunk in chunks:
        try:
            queries.extend(synthesize_for_chunk(chunk, llm, retry_budget=retry_budget))
        except (QueryGenError, LlmError) as exc:
            stage = exc.stage if isinstance(exc, QueryGenError) else "llm"
            failures.append(ChunkFailure(chunk.chunk_id, stage, str(exc)))
            logger.warning("chunk %s failed query synthesis: %s", chunk.chunk_id, exc)
    queries.sort(key=lambda q: (q.chunk_id, q.query_id))
    failures.sort(key=lambda f: f.chunk_id)
    if failures:
        logger.warning("query synthesis: %d chunk(s) failed, %d queries emitted", len(failures), len(queries))
    return queries, failures


def sample_chunks(chunks: list[Chunk], n: int, seed: int) -> list[Chunk]:
    """Sample up to *n* chunks, uniform over documents then over chunks.

    Each draw picks a document uniformly among those with unchosen
    chunks left, then a chunk uniformly within it, so large documents
    do not dominate the sample. Deterministic for a fixed
    (chunks, n, seed).
    """
    rng = random.Random(seed)
    by_doc: dict[str, list[Chunk]] = {}
    for chunk in sorted(chunks, key=lambda c: c.chunk_id):
        by_doc.setdefault(chunk.doc_id, []).append(chunk)
    picked: list[Chunk] = []
    while len(picked) < n and by_doc:
        doc_id = rng.choice(sorted(by_doc))
        pool = by_doc[doc_id]
        picked.append(pool.pop(rng.randrange(len(pool))))
        if not pool:
            del by_doc[doc_id]
    return sorted(picked, key=lambda c: c.chunk_id)


def sample_one_per_doc(chunks: list[Chunk], seed: int) -> list[Chunk]:
    """One uniformly chosen chunk from every document; deterministic."""
    rng = random.Random(seed)
    by_doc: dict[str, list[Chunk]] = {}
    for chunk in sorted(chunks, key=lambda c: c.chunk_id):
        by_doc.setdefault(chunk.doc_id, []).append(chunk)
    picked = [rng.choice(by_doc[doc_id]) for doc_id in sorted(by_doc)]
    return sorted(picked, key=lambda c: c.chunk_id)


# --------------------------------------------------------------------------
# query file (JSON lines)


def save_queries(queries: list[SyntheticQuery], file_path) -> None:
    with open(file_path, "w", encoding="utf-8") as fh:
        for q in queries:
            record = {
                "query_id": q.query_id,
                "chunk_id": q.chunk_id,
                "question_type": q.question_type,
                "question": q.question,
                "query": q.query,
                "provenance": q.provenance,
            }
            fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_queries(file_path) -> list[SyntheticQuery]:
    queries = []
    with open(file_path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                queries.append(SyntheticQuery(**json.loads(line)))
    return queries
