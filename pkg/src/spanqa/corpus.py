"""Core data model: documents, sections, chunks, gold rows, predictions.

File formats handled here:

* corpus        -- a directory tree of ``.md`` files, one Document each
* gold file     -- JSON array of query/chunk rows with labelled spans
* predictions   -- JSON array of per-(query, chunk) extraction results
* chunk file    -- JSON lines, one chunk per line

All offsets in every format count unicode scalar values. A gold file may
declare ``offset_unit: "bytes"`` (see :func:`load_gold`), in which case
offsets are converted on ingestion.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .spans import CharSpan, validate_disjoint_sorted

logger = logging.getLogger(__name__)

MARKDOWN_EXTENSIONS = (".md", ".markdown")
RELEVANCE_VALUES = ("relevant", "irrelevant", "unjudgeable")

_HEADING_RE = re.compile(r"^#{1,6}\s+(.+?)\s*$", re.MULTILINE)


class CorpusError(Exception):
    """Fatal problem with a corpus directory."""


class GoldDataError(ValueError):
    """A gold or predictions file violates its schema."""


@dataclass(frozen=True, slots=True)
class Document:
    doc_id: str
    source_path: str
    title: str
    markdown: str

    @property
    def length_chars(self) -> int:
        return len(self.markdown)


@dataclass(frozen=True, slots=True)
class SectionNode:
    """Node of a document's heading tree.

    ``start``/``end`` delimit the node's full extent in the document,
    heading line included; the extent of the root (level 0) is the whole
    document and may be empty. Children are ordered by start offset and
    contained in the parent extent.
    """

    level: int
    title: str
    start: int
    end: int
    children: tuple["SectionNode", ...] = ()

    @property
    def body_range(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True, slots=True)
class Chunk:
    chunk_id: str
    doc_id: str
    title_path: tuple[str, ...]
    prefix: str
    body: str
    source_range: CharSpan
    atomic_oversize: bool = False

    def __post_init__(self) -> None:
        if len(self.body) != len(self.source_range):
            raise ValueError(
                f"chunk {self.chunk_id}: body length {len(self.body)} does not "
                f"match source_range length {len(self.source_range)}"
            )


@dataclass(frozen=True, slots=True)
class GoldRow:
    query_id: str
    query_text: str
    chunk_id: str
    chunk_text: str
    relevance: str
    gold_spans: tuple[CharSpan, ...] = ()

    def __post_init__(self) -> None:
        if self.relevance not in RELEVANCE_VALUES:
            raise GoldDataError(
                f"row {self.query_id}/{self.chunk_id}: relevance "
                f"{self.relevance!r} not in {RELEVANCE_VALUES}"
            )
        if self.relevance != "relevant" and self.gold_spans:
            raise GoldDataError(
                f"row {self.query_id}/{self.chunk_id}: relevance "
                f"{self.relevance!r} requires empty gold_spans"
            )
        for span in self.gold_spans:
            if span.end > len(self.chunk_text):
                raise GoldDataError(
                    f"row {self.query_id}/{self.chunk_id}: span "
                    f"[{span.start}, {span.end}) exceeds chunk of "
                    f"length {len(self.chunk_text)}"
                )
        try:
            validate_disjoint_sorted(list(self.gold_spans), label="gold_spans")
        except ValueError as exc:
            raise GoldDataError(f"row {self.query_id}/{self.chunk_id}: {exc}") from exc


@dataclass(frozen=True, slots=True)
class ExtractionResult:
    query_id: str
    chunk_id: str
    spans: tuple[CharSpan, ...]
    backend: str
    abstained: bool

    def __post_init__(self) -> None:
        if self.abstained != (len(self.spans) == 0):
            raise ValueError(
                f"result {self.query_id}/{self.chunk_id}: abstained must be "
                "true exactly when spans is empty"
            )


@dataclass(frozen=True, slots=True)
class GoldCounts:
    rows: int
    relevant: int
    irrelevant: int
    unjudgeable: int
    spans: int


# --------------------------------------------------------------------------
# corpus loading


def _derive_title(markdown: str, fallback: str) -> str:
    m = _HEADING_RE.search(markdown)
    return m.group(1) if m else fallback


def load_corpus(directory_path: str | Path) -> list[Document]:
    """Load every markdown file under *directory_path* as a Document.

    Files that cannot be decoded as UTF-8 are skipped with a warning;
    an unreadable directory is fatal. doc_ids are the extension-less
    relative paths, and the result is ordered by doc_id.
    """
    root = Path(directory_path)
    if not root.is_dir():
        raise CorpusError(f"corpus directory not readable: {root}")

    paths = sorted(
        p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in MARKDOWN_EXTENSIONS
    )
    docs: list[Document] = []
    skipped = 0
    for path in paths:
        try:
            text = path.read_text(encoding="utf-8")
        except (UnicodeDecodeError, OSError) as exc:
            skipped += 1
            logger.warning("skipping unreadable markdown file %s: %s", path, exc)
            continue
        rel = path.relative_to(root)
        doc_id = str(rel.with_suffix("")).replace("\\", "/")
        docs.append(
            Document(
                doc_id=doc_id,
                source_path=str(path),
                title=_derive_title(text, fallback=rel.stem),
                markdown=text,
            )
        )
    if skipped:
        logger.warning("corpus load skipped %d undecodable file(s)", skipped)
    if not docs:
        raise CorpusError(f"no readable markdown files found under {root}")
    seen: set[str] = set()
    for doc in docs:
        if doc.doc_id in seen:
            raise CorpusError(f"duplicate doc_id in corpus: {doc.doc_id}")
        seen.add(doc.doc_id)
    return docs


# --------------------------------------------------------------------------
# gold file


def _byte_to_char_map(text: str) -> dict[int, int]:
    mapping = {}
    offset = 0
    for i, ch in enumerate(text):
        mapping[offset] = i
        offset += len(ch.encode("utf-8"))
    mapping[offset] = len(text)
    return mapping


def _parse_span_pair(raw: object, row_label: str) -> tuple[int, int]:
    if (
        not isinstance(raw, (list, tuple))
        or len(raw) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) for v in raw)
    ):
        raise GoldDataError(f"row {row_label}: malformed span {raw!r}, expected [start, end]")
    return raw[0], raw[1]


def _convert_offsets(
    pairs: list[tuple[int, int]], chunk_text: str, offset_unit: str, row_label: str
) -> list[CharSpan]:
    if offset_unit == "chars":
        converted = pairs
    elif offset_unit == "bytes":
        byte_map = _byte_to_char_map(chunk_text)
        converted = []
        for start, end in pairs:
            if start not in byte_map or end not in byte_map:
                raise GoldDataError(
                    f"row {row_label}: byte offset ({start}, {end}) not on a "
                    "character boundary"
                )
            converted.append((byte_map[start], byte_map[end]))
    else:
        raise GoldDataError(f"unknown offset_unit {offset_unit!r}")
    spans = []
    for start, end in converted:
        if start < 0 or end <= start:
            raise GoldDataError(f"row {row_label}: invalid span [{start}, {end})")
        spans.append(CharSpan(start, end))
    return spans


def load_gold(file_path: str | Path) -> list[GoldRow]:
    """Parse and validate a gold benchmark file.

    The file is either a JSON array of rows, or an object
    ``{"offset_unit": "chars"|"bytes", "rows": [...]}`` when the span
    offsets were produced with a different counting convention.
    """
    path = Path(file_path)
    data = json.loads(path.read_text(encoding="utf-8"))
    offset_unit = "chars"
    if isinstance(data, dict):
        offset_unit = data.get("offset_unit", "chars")
        data = data.get("rows")
    if not isinstance(data, list):
        raise GoldDataError(f"{path}: expected a JSON array of gold rows")

    rows: list[GoldRow] = []
    for i, raw in enumerate(data):
        if not isinstance(raw, dict):
            raise GoldDataError(f"{path}: row {i} is not an object")
        label = str(raw.get("query_id", f"#{i}")) + "/" + str(raw.get("chunk_id", "?"))
        try:
            chunk_text = raw["chunk_text"]
            pairs = [_parse_span_pair(p, label) for p in raw.get("gold_spans", [])]
            spans = _convert_offsets(pairs, chunk_text, offset_unit, label)
            rows.append(
                GoldRow(
                    query_id=raw["query_id"],
                    query_text=raw["query_text"],
                    chunk_id=raw["chunk_id"],
                    chunk_text=chunk_text,
                    relevance=raw["relevance"],
                    gold_spans=tuple(spans),
                )
            )
        except KeyError as exc:
            raise GoldDataError(f"row {label}: missing field {exc}") from exc
    counts = gold_counts(rows)
    logger.info(
        "loaded gold file %s: %d rows (%d relevant, %d irrelevant, %d unjudgeable), %d spans",
        path,
        counts.rows,
        counts.relevant,
        counts.irrelevant,
        counts.unjudgeable,
        counts.spans,
    )
    return rows


def gold_counts(rows: list[GoldRow]) -> GoldCounts:
    return GoldCounts(
        rows=len(rows),
        relevant=sum(r.relevance == "relevant" for r in rows),
        irrelevant=sum(r.relevance == "irrelevant" for r in rows),
        unjudgeable=sum(r.relevance == "unjudgeable" for r in rows),
        spans=sum(len(r.gold_spans) for r in rows),
    )


def save_gold(rows: list[GoldRow], file_path: str | Path) -> None:
    payload = [
        {
            "query_id": r.query_id,
            "query_text": r.query_text,
            "chunk_id": r.chunk_id,
            "chunk_text": r.chunk_text,
            "relevance": r.relevance,
            "gold_spans": [[s.start, s.end] for s in r.gold_spans],
        }
        for r in rows
    ]
    _write_json(payload, file_path)


# --------------------------------------------------------------------------
# predictions file


def save_results(results: list[ExtractionResult], file_path: str | Path) -> None:
    """Write predictions as a deterministic JSON array (input order kept)."""
    payload = [
        {
            "query_id": r.query_id,
            "chunk_id": r.chunk_id,
            "spans": [[s.start, s.end] for s in r.spans],
            "backend": r.backend,
            "abstained": r.abstained,
        }
        for r in results
    ]
    _write_json(payload, file_path)


def load_results(file_path: str | Path) -> list[ExtractionResult]:
    path = Path(file_path)
    data = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise GoldDataError(f"{path}: expected a JSON array of results")
    results = []
    for i, raw in enumerate(data):
        label = str(raw.get("query_id", f"#{i}")) + "/" + str(raw.get("chunk_id", "?"))
        pairs = [_parse_span_pair(p, label) for p in raw.get("spans", [])]
        try:
            results.append(
                ExtractionResult(
                    query_id=raw["query_id"],
                    chunk_id=raw["chunk_id"],
                    spans=tuple(CharSpan(s, e) for s, e in pairs),
                    backend=raw["backend"],
                    abstained=raw["abstained"],
                )
            )
        except KeyError as exc:
            raise GoldDataError(f"row {label}: missing field {exc}") from exc
    return results


# --------------------------------------------------------------------------
# chunk file (JSON lines)


def chunk_to_record(chunk: Chunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "doc_id": chunk.doc_id,
        "title_path": list(chunk.title_path),
        "prefix": chunk.prefix,
        "body": chunk.body,
        "source_range": [chunk.source_range.start, chunk.source_range.end],
        "atomic_oversize": chunk.atomic_oversize,
    }


def chunk_from_record(record: dict) -> Chunk:
    start, end = record["source_range"]
    return Chunk(
        chunk_id=record["chunk_id"],
        doc_id=record["doc_id"],
        title_path=tuple(record["title_path"]),
        prefix=record["prefix"],
        body=record["body"],
        source_range=CharSpan(start, end),
        atomic_oversize=record["atomic_oversize"],
    )


def save_chunks(chunks: list[Chunk], file_path: str | Path) -> None:
    path = Path(file_path)
    with path.open("w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk_to_record(chunk), ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def load_chunks(file_path: str | Path) -> list[Chunk]:
    path = Path(file_path)
    chunks = []
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                chunks.append(chunk_from_record(json.loads(line)))
    return chunks


def _write_json(payload: object, file_path: str | Path) -> None:
    path = Path(file_path)
    text = json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2)
    path.write_text(text + "\n", encoding="utf-8")
