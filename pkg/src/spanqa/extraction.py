"""Verbatim span extraction with pluggable backends.

Two backend families produce candidate evidence for a query:

* LLM extraction — one multi-document prompt (two shipped template
  modes); returned strings must be located verbatim in their chunk, and
  anything that cannot be located is rejected, never repaired.
* Token-score decoding — an external scorer assigns a probability per
  token; tokens at or above a threshold are coalesced into spans.

Both paths end in the same positional post-processing, so every emitted
span is, by construction, an exact substring of its chunk.
"""

from __future__ import annotations

import enum
import json
import logging
import re
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field, replace

import httpx

from .corpus import Chunk, ExtractionResult
from .llm import LlmClient, LlmError
from .prompts import EXTRACT_DEFAULT, EXTRACT_PARAGRAPH, fill, load_template
from .retrieval.lexical import tokenize
from .spans import CharSpan, merge_overlapping

logger = logging.getLogger(__name__)


class ExtractionError(Exception):
    """Backend produced no usable output for a call."""


class PromptMode(enum.Enum):
    DEFAULT = "default_extraction"
    PARAGRAPH = "paragraph_extraction"

    @property
    def template_name(self) -> str:
        return EXTRACT_DEFAULT if self is PromptMode.DEFAULT else EXTRACT_PARAGRAPH

    @property
    def backend_tag(self) -> str:
        return "llm:default" if self is PromptMode.DEFAULT else "llm:paragraph"


@dataclass(frozen=True, slots=True)
class TokenScore:
    range: CharSpan
    prob: float

    def __post_init__(self) -> None:
        if not (self.prob == self.prob and abs(self.prob) != float("inf")):
            raise ValueError(f"token probability must be finite, got {self.prob}")


@dataclass(frozen=True, slots=True)
class PostProcessConfig:
    min_span_chars: int = 10
    merge_gap_chars: int = 20
    decode_threshold: float = 0.2

    def __post_init__(self) -> None:
        if self.min_span_chars < 1:
            raise ValueError(f"min_span_chars must be >= 1, got {self.min_span_chars}")
        if self.merge_gap_chars < 0:
            raise ValueError(f"merge_gap_chars must be >= 0, got {self.merge_gap_chars}")
        if not 0.0 < self.decode_threshold < 1.0:
            raise ValueError(f"decode_threshold must be in (0,1), got {self.decode_threshold}")


# --------------------------------------------------------------------------
# prompt construction and response parsing


def build_prompt(mode: PromptMode, question: str, docs: list[tuple[str, str]]) -> str:
    """Fill the mode's template with the question and tagged documents."""
    if not docs:
        raise ValueError("at least one document is required")
    tags = [tag for tag, _ in docs]
    if len(set(tags)) != len(tags):
        raise ValueError(f"doc tags must be unique, got {tags}")
    rendered = "\n\n".join(f"[{tag}]\n{text}" for tag, text in docs)
    return fill(
        load_template(mode.template_name),
        {"{{ question }}": question, "{{ documents }}": rendered},
    )


_FENCED_JSON_RE = re.compile(r"```(?:json)?\s*\n(.*?)```", re.DOTALL)


def parse_extraction(llm_response: str, docs: list[tuple[str, str]]) -> dict[str, list[str]]:
    """Parse the doc_tag -> spans object an extraction prompt demands.

    Unknown tags are dropped with a warning; tags the model omitted come
    back as empty lists, in the order of ``docs``.

    Raises:
        ExtractionError: Response is not a JSON object even after one
            fenced-block salvage attempt.
    """
    candidates = [llm_response]
    fenced = _FENCED_JSON_RE.search(llm_response)
    if fenced:
        candidates.append(fenced.group(1))
    parsed = None
    for candidate in candidates:
        try:
            parsed = json.loads(candidate)
            break
        except json.JSONDecodeError:
            continue
    if not isinstance(parsed, dict):
        raise ExtractionError(f"extraction response is not a JSON object: {llm_response[:120]!r}")

    known = {tag for tag, _ in docs}
    out: dict[str, list[str]] = {tag: [] for tag, _ in docs}
    for tag, value in parsed.items():
        if tag not in known:
            logger.warning("dropping spans for unknown doc tag %r", tag)
            continue
        if not isinstance(value, list):
            raise ExtractionError(f"value for {tag} is not an array: {value!r}")
        out[tag] = [str(item) for item in value]
    return out


# --------------------------------------------------------------------------
# verbatim location


def _normalize_with_map(text: str) -> tuple[str, list[int]]:
    chars: list[str] = []
    index_map: list[int] = []
    in_run = False
    for i, ch in enumerate(text):
        if ch.isspace():
            if not in_run:
                chars.append(" ")
                index_map.append(i)
                in_run = True
        else:
            chars.append(ch)
            index_map.append(i)
            in_run = False
    return "".join(chars), index_map


def locate_verbatim(span_text: str, chunk_text: str) -> CharSpan | None:
    """Find the span's character range in the chunk, or None (rejection).

    Exact substring match first; failing that, a whitespace-normalized
    match (runs collapsed on both sides) mapped back to original
    offsets. Always the leftmost occurrence.
    """
    if not span_text:
        raise ValueError("span_text must be non-empty")
    pos = chunk_text.find(span_text)
    if pos >= 0:
        return CharSpan(pos, pos + len(span_text))

    needle = " ".join(span_text.split())
    if not needle:
        return None
    haystack, index_map = _normalize_with_map(chunk_text)
    pos = haystack.find(needle)
    if pos < 0:
        return None
    start = index_map[pos]
    last = index_map[pos + len(needle) - 1]
    end = last + 1
    # a trailing normalized space stands for a whole whitespace run; the
    # needle never ends in one because it was built with split/join
    return CharSpan(start, end)


# --------------------------------------------------------------------------
# token-score decoding and span post-processing


def post_process(spans: list[CharSpan], cfg: PostProcessConfig) -> list[CharSpan]:
    """Merge near-adjacent spans (to a fixpoint), then drop short ones.

    Input spans must be sorted and non-overlapping. Output spans never
    fall below ``min_span_chars`` and no two are within
    ``merge_gap_chars`` of each other.
    """
    for a, b in zip(spans, spans[1:]):
        if b.start < a.end:
            raise ValueError(f"spans must be sorted and non-overlapping: {a}, {b}")
    current = list(spans)
    while True:
        merged: list[CharSpan] = []
        for span in current:
            if merged and span.start - merged[-1].end <= cfg.merge_gap_chars:
                merged[-1] = CharSpan(merged[-1].start, span.end)
            else:
                merged.append(span)
        if merged == current:
            break
        current = merged
    return [span for span in current if len(span) >= cfg.min_span_chars]


def decode_spans(scores: list[TokenScore], cfg: PostProcessConfig) -> list[CharSpan]:
    """Threshold token probabilities and decode into character spans.

    A maximal run of selected tokens (no unselected token in between)
    becomes one raw span from the first token's start to the last
    token's end, interior non-token characters included; raw spans then
    go through :func:`post_process`.
    """
    for a, b in zip(scores, scores[1:]):
        if b.range.start < a.range.end:
            raise ValueError(f"token ranges must be ordered, non-overlapping: {a}, {b}")
    raw: list[CharSpan] = []
    run_start: int | None = None
    run_end = 0
    for score in scores:
        if score.prob >= cfg.decode_threshold:
            if run_start is None:
                run_start = score.range.start
            run_end = score.range.end
        elif run_start is not None:
            raw.append(CharSpan(run_start, run_end))
            run_start = None
    if run_start is not None:
        raw.append(CharSpan(run_start, run_end))
    return post_process(raw, cfg)


# --------------------------------------------------------------------------
# token scorer clients


class TokenScorerClient(ABC):
    """Assigns an evidence probability to each token of a chunk."""

    @property
    @abstractmethod
    def scorer_id(self) -> str:
        """Stable identifier of the scoring model/service."""

    @abstractmethod
    def score(self, question: str, chunk_text: str) -> list[TokenScore]:
        """Score the chunk's tokens against the question.

        Returned scores are ordered and non-overlapping.

        Raises:
            ExtractionError: If the backend fails.
        """


class OverlapTokenScorer(TokenScorerClient):
    """Deterministic offline scorer: probability 1 for tokens that occur
    in the question (case-insensitive), 0 otherwise. A crude lexical
    baseline, useful for offline pipelines and reproducible tests.
    """

    _WORD_RE = re.compile(r"\S+")

    @property
    def scorer_id(self) -> str:
        return "mock://overlap"

    def score(self, question: str, chunk_text: str) -> list[TokenScore]:
        vocabulary = set(tokenize(question))
        scores = []
        for m in self._WORD_RE.finditer(chunk_text):
            word_terms = set(tokenize(m.group()))
            prob = 1.0 if word_terms and word_terms <= vocabulary else 0.0
            scores.append(TokenScore(CharSpan(m.start(), m.end()), prob))
        return scores


class HttpTokenScorer(TokenScorerClient):
    """Client for an HTTP token-scoring service.

    Request: ``POST {endpoint}`` with ``{"question", "chunk_text"}``;
    response: ``{"scores": [{"start", "end", "prob"}, ...]}``.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        timeout_seconds: float = 30.0,
        transport: httpx.BaseTransport | None = None,
    ) -> None:
        self._endpoint = endpoint
        self._client = httpx.Client(timeout=timeout_seconds, transport=transport)

    @property
    def scorer_id(self) -> str:
        return self._endpoint

    def score(self, question: str, chunk_text: str) -> list[TokenScore]:
        try:
            response = self._client.post(
                self._endpoint, json={"question": question, "chunk_text": chunk_text}
            )
            response.raise_for_status()
            rows = response.json()["scores"]
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ExtractionError(f"token scorer request failed: {exc}") from exc
        return [TokenScore(CharSpan(r["start"], r["end"]), float(r["prob"])) for r in rows]


def create_token_scorer(spec: str) -> TokenScorerClient:
    if spec == "mock://overlap":
        return OverlapTokenScorer()
    if spec.startswith(("http://", "https://")):
        return HttpTokenScorer(spec)
    raise ValueError(f"unsupported token scorer spec: {spec!r}")


# --------------------------------------------------------------------------
# extraction entry point


@dataclass(slots=True)
class ExtractDiagnostics:
    rejected_spans: list[tuple[str, str]] = field(default_factory=list)  # (chunk_id, span_text)
    errors: list[tuple[str, str]] = field(default_factory=list)  # (chunk_id, reason)
    latency_seconds: float = 0.0

    @property
    def rejection_count(self) -> int:
        return len(self.rejected_spans)


class SpanExtractor(ABC):
    """Produces located, post-processed spans per chunk for one query."""

    @property
    @abstractmethod
    def backend_tag(self) -> str:
        """Label recorded on every result this backend produces."""

    @abstractmethod
    def extract(
        self, query: str, chunks: list[Chunk], diagnostics: ExtractDiagnostics
    ) -> dict[str, list[CharSpan]]:
        """Map chunk_id to located spans; failures land in diagnostics."""


class LlmSpanExtractor(SpanExtractor):
    """LLM extraction: one multi-document call, verbatim location after.

    Located spans are canonicalized positionally (sorted, overlaps
    united) and near-adjacent ones merged; the short-span drop is not
    applied to deliberate LLM quotations.
    """

    def __init__(self, llm: LlmClient, mode: PromptMode, cfg: PostProcessConfig) -> None:
        self._llm = llm
        self._mode = mode
        self._cfg = cfg

    @property
    def backend_tag(self) -> str:
        return self._mode.backend_tag

    def extract(
        self, query: str, chunks: list[Chunk], diagnostics: ExtractDiagnostics
    ) -> dict[str, list[CharSpan]]:
        docs = [(f"doc_{i}", chunk.body) for i, chunk in enumerate(chunks)]
        prompt = build_prompt(self._mode, query, docs)
        try:
            response = self._llm.complete(prompt)
            by_tag = parse_extraction(response, docs)
        except (LlmError, ExtractionError) as exc:
            for chunk in chunks:
                diagnostics.errors.append((chunk.chunk_id, str(exc)))
            return {}
        out: dict[str, list[CharSpan]] = {}
        merge_only = replace(self._cfg, min_span_chars=1)
        for i, chunk in enumerate(chunks):
            located = []
            for span_text in by_tag[f"doc_{i}"]:
                if not span_text:
                    continue
                span = locate_verbatim(span_text, chunk.body)
                if span is None:
                    diagnostics.rejected_spans.append((chunk.chunk_id, span_text))
                    logger.warning(
                        "rejected non-verbatim span for chunk %s: %.60r",
                        chunk.chunk_id,
                        span_text,
                    )
                else:
                    located.append(span)
            out[chunk.chunk_id] = post_process(merge_overlapping(located), merge_only)
        return out


class TokenScorerExtractor(SpanExtractor):
    """Threshold decoding of an external scorer's per-token evidence."""

    def __init__(self, scorer: TokenScorerClient, cfg: PostProcessConfig) -> None:
        self._scorer = scorer
        self._cfg = cfg

    @property
    def backend_tag(self) -> str:
        return "scorer"

    def extract(
        self, query: str, chunks: list[Chunk], diagnostics: ExtractDiagnostics
    ) -> dict[str, list[CharSpan]]:
        out: dict[str, list[CharSpan]] = {}
        for chunk in chunks:
            try:
                scores = self._scorer.score(query, chunk.body)
                out[chunk.chunk_id] = decode_spans(scores, self._cfg)
            except (ExtractionError, ValueError) as exc:
                diagnostics.errors.append((chunk.chunk_id, str(exc)))
        return out


def extract(
    query: str,
    chunks: list[Chunk],
    backend: SpanExtractor,
    *,
    query_id: str = "",
) -> tuple[list[ExtractionResult], ExtractDiagnostics]:
    """Extract evidence spans for one query over the given chunks.

    Every chunk the backend answered for yields one ExtractionResult
    (abstained when no spans survived); chunks that failed appear only
    in the diagnostics' error list.
    """
    if not chunks:
        raise ValueError("chunks must be non-empty")
    diagnostics = ExtractDiagnostics()
    started = time.perf_counter()
    by_chunk = backend.extract(query, chunks, diagnostics)
    diagnostics.latency_seconds = time.perf_counter() - started
    results = []
    for chunk in chunks:
        if chunk.chunk_id not in by_chunk:
            continue
        spans = tuple(by_chunk[chunk.chunk_id])
        for span in spans:
            span.validate_against(chunk.body, label=f"extracted span for {chunk.chunk_id}")
        results.append(
            ExtractionResult(
                query_id=query_id,
                chunk_id=chunk.chunk_id,
                spans=spans,
                backend=backend.backend_tag,
                abstained=not spans,
            )
        )
    return results, diagnostics
