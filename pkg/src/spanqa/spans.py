"""Character spans and interval arithmetic shared by every other module.

A span is a half-open interval [start, end) of unicode scalar values
(Python string indices), never bytes. All span sets handled here are
plain lists of CharSpan.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, slots=True, order=True)
class CharSpan:
    """Half-open character interval [start, end), end strictly greater."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"span start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise ValueError(f"span end must exceed start, got [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def slice(self, text: str) -> str:
        return text[self.start : self.end]

    def validate_against(self, text: str, *, label: str = "span") -> None:
        """Raise ValueError unless the span lies inside *text*."""
        if self.end > len(text):
            raise ValueError(
                f"{label} [{self.start}, {self.end}) exceeds text of length {len(text)}"
            )


def overlap_length(a: CharSpan, b: CharSpan) -> int:
    """Number of characters shared by the two intervals."""
    return max(0, min(a.end, b.end) - max(a.start, b.start))


def overlap_with_union(span: CharSpan, others: list[CharSpan]) -> int:
    """Characters of *span* that fall inside the union of *others*.

    *others* may overlap each other; double counting is avoided by
    merging first.
    """
    return sum(overlap_length(span, m) for m in merge_overlapping(others))


def merge_overlapping(spans: list[CharSpan]) -> list[CharSpan]:
    """Sort and union overlapping or touching intervals."""
    if not spans:
        return []
    out: list[CharSpan] = []
    for s in sorted(spans):
        if out and s.start <= out[-1].end:
            if s.end > out[-1].end:
                out[-1] = CharSpan(out[-1].start, s.end)
        else:
            out.append(s)
    return out


def validate_disjoint_sorted(spans: list[CharSpan], *, label: str = "spans") -> None:
    """Raise ValueError unless spans are sorted by start and non-overlapping."""
    for prev, cur in zip(spans, spans[1:]):
        if cur.start < prev.end:
            raise ValueError(
                f"{label} must be sorted and non-overlapping: "
                f"[{prev.start}, {prev.end}) then [{cur.start}, {cur.end})"
            )


def total_length(spans: list[CharSpan]) -> int:
    """Characters covered by the union of *spans*."""
    return sum(len(s) for s in merge_overlapping(spans))
