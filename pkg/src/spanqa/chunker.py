"""Markdown section parsing and size-bounded, structure-preserving chunking.

Documents are split along section boundaries, each chunk carrying the
section-title path as a retrieval prefix. Tables and fenced code blocks
are never split. Heading lines are structural: their text travels in the
title path, so chunk bodies start after the heading line (a heading may
still appear inside a chunk when small sibling sections are merged).

Size bounds apply to ``prefix + body``. Oversize sections are split at
block boundaries with greedy packing; undersize segments are merged with
neighbours, preferring same-parent siblings. Bounds can be genuinely
unattainable (a document shorter than the minimum, or atomic blocks
coarser than the budget); such chunks are emitted rather than dropped,
with atomic oversize ones flagged ``atomic_oversize``.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass

from .corpus import Chunk, Document, SectionNode
from .spans import CharSpan

logger = logging.getLogger(__name__)

_ATX_RE = re.compile(r"^ {0,3}(#{1,6})(?:\s+(.*?))?\s*#*\s*$")
_SETEXT_EQ_RE = re.compile(r"^ {0,3}=+\s*$")
# two dashes minimum so stray single '-' lines stay paragraph text
_SETEXT_DASH_RE = re.compile(r"^ {0,3}-{2,}\s*$")
_FENCE_OPEN_RE = re.compile(r"^ {0,3}(`{3,}|~{3,})\s*([^`~]*)$")
_LIST_ITEM_RE = re.compile(r"^ {0,3}(?:[-*+]|\d{1,9}[.)])\s+")
_IMAGE_LINE_RE = re.compile(r"^ {0,3}!\[[^\]]*\]\([^)]*\)\s*$")
_COMMENT_LINE_RE = re.compile(r"^\s*<!--.*-->\s*$")

ATOMIC_KINDS = frozenset({"table", "code_fence"})


@dataclass(frozen=True, slots=True)
class ChunkerConfig:
    min_chunk_chars: int = 500
    max_chunk_chars: int = 5000
    prefix_separator: str = " > "
    prefix_terminator: str = "\n\n"

    def __post_init__(self) -> None:
        if not 0 < self.min_chunk_chars < self.max_chunk_chars:
            raise ValueError(
                "require 0 < min_chunk_chars < max_chunk_chars, got "
                f"{self.min_chunk_chars}/{self.max_chunk_chars}"
            )


@dataclass(frozen=True, slots=True)
class Block:
    kind: str
    range: CharSpan

    @property
    def atomic(self) -> bool:
        return self.kind in ATOMIC_KINDS


# --------------------------------------------------------------------------
# line scanning shared by section parsing and block segmentation


@dataclass(frozen=True, slots=True)
class _Line:
    start: int
    end: int  # includes the trailing newline when present
    text: str  # without the trailing newline


def _split_lines(text: str) -> list[_Line]:
    lines = []
    pos = 0
    while pos < len(text):
        nl = text.find("\n", pos)
        end = len(text) if nl < 0 else nl + 1
        raw = text[pos : len(text) if nl < 0 else nl]
        lines.append(_Line(pos, end, raw))
        pos = end
    return lines


def _fence_flags(lines: list[_Line]) -> tuple[list[bool], bool]:
    """Per-line flag: inside a fenced code block (delimiters included).

    Returns (flags, unterminated).
    """
    flags = [False] * len(lines)
    fence_char = ""
    fence_len = 0
    open_fence = False
    for i, line in enumerate(lines):
        if not open_fence:
            m = _FENCE_OPEN_RE.match(line.text)
            if m:
                open_fence = True
                fence_char = m.group(1)[0]
                fence_len = len(m.group(1))
                flags[i] = True
        else:
            flags[i] = True
            stripped = line.text.strip()
            if (
                stripped
                and set(stripped) == {fence_char}
                and len(stripped) >= fence_len
                and line.text.lstrip() == stripped
                and len(line.text) - len(line.text.lstrip()) <= 3
            ):
                open_fence = False
    return flags, open_fence


@dataclass(frozen=True, slots=True)
class _Heading:
    first_line: int
    last_line: int  # setext headings span two lines
    level: int
    title: str
    start: int
    end: int


def _find_headings(lines: list[_Line], fenced: list[bool]) -> list[_Heading]:
    headings: list[_Heading] = []
    consumed: set[int] = set()
    for i, line in enumerate(lines):
        if fenced[i] or i in consumed:
            continue
        m = _ATX_RE.match(line.text)
        if m:
            headings.append(
                _Heading(i, i, len(m.group(1)), (m.group(2) or "").strip(), line.start, line.end)
            )
            consumed.add(i)
            continue
        if i == 0 or fenced[i - 1] or (i - 1) in consumed:
            continue
        prev = lines[i - 1]
        prev_text = prev.text.strip()
        if not prev_text:
            continue
        if (
            prev_text.startswith("|")
            or _ATX_RE.match(prev.text)
            or _LIST_ITEM_RE.match(prev.text)
            or _FENCE_OPEN_RE.match(prev.text)
        ):
            continue
        if _SETEXT_EQ_RE.match(line.text):
            level = 1
        elif _SETEXT_DASH_RE.match(line.text):
            level = 2
        else:
            continue
        headings.append(_Heading(i - 1, i, level, prev_text, prev.start, line.end))
        consumed.add(i - 1)
        consumed.add(i)
    return headings


# --------------------------------------------------------------------------
# section tree


def parse_sections(doc: Document) -> SectionNode:
    """Build the heading tree of a document; any text yields a root node."""
    return parse_sections_text(doc.markdown, doc.title)


def parse_sections_text(markdown: str, root_title: str = "") -> SectionNode:
    lines = _split_lines(markdown)
    fenced, _ = _fence_flags(lines)
    headings = _find_headings(lines, fenced)

    class _Builder:
        __slots__ = ("level", "title", "start", "end", "children")

        def __init__(self, level: int, title: str, start: int) -> None:
            self.level = level
            self.title = title
            self.start = start
            self.end = len(markdown)
            self.children: list[_Builder] = []

    root = _Builder(0, root_title, 0)
    stack = [root]
    for h in headings:
        while stack[-1].level >= h.level:
            stack.pop().end = h.start
        node = _Builder(h.level, h.title, h.start)
        stack[-1].children.append(node)
        stack.append(node)

    def freeze(b: _Builder) -> SectionNode:
        return SectionNode(
            level=b.level,
            title=b.title,
            start=b.start,
            end=b.end,
            children=tuple(freeze(c) for c in b.children),
        )

    return freeze(root)


def iter_sections(root: SectionNode):
    """Yield (node, parent, own_end, title_path) in document order.

    ``own_end`` closes the node's direct content: the heading line plus
    any text before the first child section.
    """

    def _extend(path: tuple[str, ...], title: str) -> tuple[str, ...]:
        t = title.strip()
        if not t or (path and path[-1] == t):
            return path
        return path + (t,)

    def walk(node: SectionNode, parent: SectionNode | None, path: tuple[str, ...]):
        own_path = _extend(path, node.title)
        own_end = node.children[0].start if node.children else node.end
        yield node, parent, own_end, own_path
        for child in node.children:
            yield from walk(child, node, own_path)

    yield from walk(root, None, ())


# --------------------------------------------------------------------------
# block segmentation


def segment_blocks(section_body: str, base_offset: int = 0) -> list[Block]:
    """Partition one section's raw text into typed blocks.

    Every character lands in exactly one block; blank separator lines
    attach to the preceding block (or the following one at the start).
    An unterminated code fence extends to the end of the body.
    """
    lines = _split_lines(section_body)
    if not lines:
        return []
    fenced, unterminated = _fence_flags(lines)
    if unterminated:
        logger.warning("unterminated code fence; treating it as running to end of section")
    heading_at = {h.first_line: h for h in _find_headings(lines, fenced)}

    blocks: list[Block] = []
    carry_start: int | None = None  # offset of leading blank lines awaiting a block
    n = len(lines)

    def emit(kind: str, first_line: int, last_line: int) -> None:
        nonlocal carry_start
        start = lines[first_line].start if carry_start is None else carry_start
        carry_start = None
        blocks.append(Block(kind, CharSpan(base_offset + start, base_offset + lines[last_line].end)))

    def table_run(i: int) -> int:
        j = i
        while j < n and not fenced[j] and lines[j].text.strip().startswith("|"):
            j += 1
        return j - i

    i = 0
    while i < n:
        text = lines[i].text
        if not text.strip():
            if blocks:
                last = blocks[-1]
                blocks[-1] = Block(last.kind, CharSpan(last.range.start, base_offset + lines[i].end))
            elif carry_start is None:
                carry_start = lines[i].start
            i += 1
            continue
        if fenced[i]:
            j = i
            while j + 1 < n and fenced[j + 1]:
                j += 1
            emit("code_fence", i, j)
            i = j + 1
            continue
        if i in heading_at:
            h = heading_at[i]
            emit("heading", h.first_line, h.last_line)
            i = h.last_line + 1
            continue
        run = table_run(i)
        if run >= 2:
            emit("table", i, i + run - 1)
            i += run
            continue
        if _IMAGE_LINE_RE.match(text) or _COMMENT_LINE_RE.match(text):
            emit("caption_placeholder", i, i)
            i += 1
            continue
        if _LIST_ITEM_RE.match(text):
            j = i + 1
            while j < n and lines[j].text.strip() and not fenced[j] and (
                _LIST_ITEM_RE.match(lines[j].text) or lines[j].text.startswith("  ")
            ):
                j += 1
            emit("list", i, j - 1)
            i = j
            continue
        j = i
        while (
            j + 1 < n
            and lines[j + 1].text.strip()
            and not fenced[j + 1]
            and (j + 1) not in heading_at
            and table_run(j + 1) < 2
            and not _IMAGE_LINE_RE.match(lines[j + 1].text)
            and not _COMMENT_LINE_RE.match(lines[j + 1].text)
            and not _LIST_ITEM_RE.match(lines[j + 1].text)
        ):
            j += 1
        emit("paragraph", i, j)
        i = j + 1
    return blocks


# --------------------------------------------------------------------------
# chunk assembly


@dataclass(frozen=True, slots=True)
class _CBlock:
    """Content block with whitespace-trimmed bounds, ready for packing."""

    start: int
    end: int
    tstart: int
    tend: int
    atomic: bool


class _Piece:
    """A chunk under construction: contiguous blocks plus title metadata."""

    __slots__ = ("title_path", "prefix", "blocks", "oversize", "last_seg")

    def __init__(
        self,
        title_path: tuple[str, ...],
        prefix: str,
        blocks: list[_CBlock],
        seg: int,
        oversize: bool = False,
    ) -> None:
        self.title_path = title_path
        self.prefix = prefix
        self.blocks = blocks
        self.last_seg = seg
        self.oversize = oversize

    @property
    def tstart(self) -> int:
        return self.blocks[0].tstart

    @property
    def tend(self) -> int:
        return self.blocks[-1].tend

    def length(self) -> int:
        return len(self.prefix) + self.tend - self.tstart


def render_prefix(title_path: tuple[str, ...], cfg: ChunkerConfig) -> str:
    if not title_path:
        return ""
    return cfg.prefix_separator.join(title_path) + cfg.prefix_terminator


def render_chunk_text(chunk: Chunk) -> str:
    """The text a chunk contributes to indexing: title prefix plus body."""
    return chunk.prefix + chunk.body


def _trimmed(text: str, start: int, end: int) -> tuple[int, int]:
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


def _content_blocks(text: str, blocks: list[Block]) -> list[_CBlock]:
    out = []
    for b in blocks:
        if b.kind == "heading":
            continue
        tstart, tend = _trimmed(text, b.range.start, b.range.end)
        if tstart == tend:
            continue
        out.append(_CBlock(b.range.start, b.range.end, tstart, tend, b.atomic))
    return out


def _carve_head(text: str, block: _CBlock, cap: int) -> tuple[_CBlock | None, _CBlock | None]:
    """Split a non-atomic block so the head's trimmed length is <= cap.

    Cuts at the last whitespace inside the window (line breaks first),
    falling back to a hard cut. Either part may vanish after trimming.
    """
    window_end = block.tstart + cap
    cut = text.rfind("\n", block.tstart + 1, window_end + 1)
    if cut <= block.tstart:
        cut = text.rfind(" ", block.tstart + 1, window_end + 1)
    if cut <= block.tstart:
        cut = window_end

    def _sub(raw_start: int, raw_end: int) -> _CBlock | None:
        ts, te = _trimmed(text, raw_start, raw_end)
        return _CBlock(raw_start, raw_end, ts, te, False) if ts < te else None

    return _sub(block.tstart, cut), _sub(cut, block.tend)


class _Packer:
    """Greedy assembly of the document-order block stream into pieces.

    A piece normally closes at the next section boundary; it stays open
    across the boundary only while shorter than the minimum, and blocks
    are carved at whitespace when the minimum cannot otherwise be met
    under the maximum. Atomic blocks are never carved: one larger than
    the budget becomes its own ``atomic_oversize`` piece.
    """

    def __init__(self, text: str, cfg: ChunkerConfig) -> None:
        self._text = text
        self._cfg = cfg
        self.pieces: list[_Piece] = []
        self._cur: _Piece | None = None

    def _close(self) -> None:
        """Emit the open piece, resolving an unavoidable short one backward.

        A short piece first tries to merge into the previous piece, then
        to pull whole blocks back from it, then to carve its trailing
        block at whitespace; if nothing fits it is emitted as-is.
        """
        cur = self._cur
        if cur is None:
            return
        self._cur = None
        cfg = self._cfg
        prev = self.pieces[-1] if self.pieces else None
        if cur.length() >= cfg.min_chunk_chars or prev is None:
            self.pieces.append(cur)
            return

        if prev.oversize or len(prev.prefix) + cur.tend - prev.tstart <= cfg.max_chunk_chars:
            prev.blocks.extend(cur.blocks)
            return

        while (
            cur.length() < cfg.min_chunk_chars
            and len(prev.blocks) > 1
            and len(prev.prefix) + prev.blocks[-2].tend - prev.tstart >= cfg.min_chunk_chars
            and len(cur.prefix) + cur.tend - prev.blocks[-1].tstart <= cfg.max_chunk_chars
        ):
            cur.blocks.insert(0, prev.blocks.pop())

        if cur.length() < cfg.min_chunk_chars and not prev.blocks[-1].atomic:
            self._carve_tail(prev, cur)
        self.pieces.append(cur)

    def push(self, block: _CBlock, seg: int, title_path: tuple[str, ...], prefix: str) -> None:
        cfg = self._cfg
        current: _CBlock | None = block
        while current is not None:
            if self._cur is None:
                cap = max(1, cfg.max_chunk_chars - len(prefix))
                if current.tend - current.tstart > cap:
                    if current.atomic:
                        piece = _Piece(title_path, prefix, [current], seg, oversize=True)
                        # a preceding stuck short joins the flagged chunk
                        prev = self.pieces[-1] if self.pieces else None
                        if prev is not None and not prev.oversize and prev.length() < cfg.min_chunk_chars:
                            self.pieces.pop()
                            piece = _Piece(
                                prev.title_path, prev.prefix, prev.blocks + [current], seg, oversize=True
                            )
                        self.pieces.append(piece)
                        return
                    head, rest = _carve_head(self._text, current, cap)
                    if head is not None:
                        self._cur = _Piece(title_path, prefix, [head], seg)
                    current = rest
                    continue
                self._cur = _Piece(title_path, prefix, [current], seg)
                return

            cur = self._cur
            cur_len = cur.length()
            fused_len = len(cur.prefix) + current.tend - cur.tstart
            if fused_len <= cfg.max_chunk_chars:
                if seg != cur.last_seg and cur_len >= cfg.min_chunk_chars:
                    self._close()
                    continue
                cur.blocks.append(current)
                cur.last_seg = seg
                return
            if cur_len >= cfg.min_chunk_chars or current.atomic:
                self._close()
                continue
            room = cfg.max_chunk_chars - len(cur.prefix) - (current.tstart - cur.tstart)
            if room < 1:
                self._close()
                continue
            head, rest = _carve_head(self._text, current, room)
            if head is not None:
                cur.blocks.append(head)
                cur.last_seg = seg
            self._close()
            current = rest

    def finish(self) -> list[_Piece]:
        self._close()
        return self.pieces

    def _carve_tail(self, prev: _Piece, cur: _Piece) -> None:
        cfg = self._cfg
        tail = prev.blocks[-1]
        # cut so prev keeps >= min while cur reaches [min, max]
        lo = max(
            tail.tstart + 1,
            prev.tstart + cfg.min_chunk_chars - len(prev.prefix),
            cur.tend - (cfg.max_chunk_chars - len(cur.prefix)),
        )
        hi = min(tail.tend - 1, cur.tend - (cfg.min_chunk_chars - len(cur.prefix)))
        cut = -1
        for pos in range(min(hi, len(self._text) - 1), lo - 1, -1):
            if self._text[pos].isspace():
                cut = pos
                break
        if cut < 0:
            return
        kept_ts, kept_te = _trimmed(self._text, tail.tstart, cut)
        given_ts, given_te = _trimmed(self._text, cut, tail.tend)
        if kept_ts >= kept_te or given_ts >= given_te:
            return
        kept = _CBlock(tail.start, cut, kept_ts, kept_te, False)
        given = _CBlock(cut, tail.end, given_ts, given_te, False)
        if (
            len(prev.prefix) + kept.tend - prev.tstart >= cfg.min_chunk_chars
            and len(cur.prefix) + cur.tend - given.tstart <= cfg.max_chunk_chars
        ):
            prev.blocks[-1] = kept
            cur.blocks.insert(0, given)


def chunk_document(doc: Document, cfg: ChunkerConfig | None = None) -> list[Chunk]:
    """Chunk one document; a pure function of (document, config)."""
    cfg = cfg or ChunkerConfig()
    text = doc.markdown
    root = parse_sections(doc)

    packer = _Packer(text, cfg)
    for seg, (node, _parent, own_end, title_path) in enumerate(iter_sections(root)):
        if node.start >= own_end:
            continue
        blocks = segment_blocks(text[node.start : own_end], node.start)
        content = _content_blocks(text, blocks)
        if not content:
            continue
        prefix = render_prefix(title_path, cfg)
        for block in content:
            packer.push(block, seg, title_path, prefix)

    chunks = []
    for ordinal, piece in enumerate(packer.finish()):
        body = text[piece.tstart : piece.tend]
        chunks.append(
            Chunk(
                chunk_id=f"{doc.doc_id}#{ordinal:04d}",
                doc_id=doc.doc_id,
                title_path=piece.title_path,
                prefix=piece.prefix,
                body=body,
                source_range=CharSpan(piece.tstart, piece.tend),
                atomic_oversize=piece.oversize,
            )
        )
    return chunks
