/** Code-point string helpers.
 *
 * The service counts characters as unicode scalar values, so a span
 * offset of 10 means "after the 10th code point". JavaScript string
 * indexing counts UTF-16 code units instead, which drifts past any
 * astral character (emoji, rare CJK, musical symbols): "🍊" has
 * length 2 but is one code point. Every slice of a chunk body in this
 * app must go through these helpers, never String.prototype.slice.
 */

/** Number of unicode code points in `text`. */
export function codePointLength(text: string): number {
  let n = 0;
  // for..of iterates code points, not UTF-16 units.
  for (const _ of text) {
    n += 1;
  }
  return n;
}

/** Slice `text` by code-point offsets, half-open [start, end). */
export function sliceCodePoints(text: string, start: number, end: number): string {
  return Array.from(text).slice(start, end).join("");
}

/**
 * Split `text` into maximal runs that are alternately outside and
 * inside the given spans. Spans must be sorted, disjoint, in-bounds
 * code-point ranges (validate first — see validateSpans).
 *
 * The concatenation of all segment texts is exactly `text`, so a
 * renderer that emits one node per segment preserves the body
 * verbatim.
 */
export interface Segment {
  text: string;
  emphasized: boolean;
}

export function segmentByCodePoints(text: string, spans: readonly [number, number][]): Segment[] {
  const points = Array.from(text);
  const segments: Segment[] = [];
  let cursor = 0;
  for (const [start, end] of spans) {
    if (start > cursor) {
      segments.push({ text: points.slice(cursor, start).join(""), emphasized: false });
    }
    segments.push({ text: points.slice(start, end).join(""), emphasized: true });
    cursor = end;
  }
  if (cursor < points.length) {
    segments.push({ text: points.slice(cursor).join(""), emphasized: false });
  }
  return segments;
}

/**
 * Check spans against a body of `length` code points. Returns null
 * when every span is an in-bounds, non-empty, integer range and the
 * list is sorted and non-overlapping; otherwise a human-readable
 * reason. The UI never repairs bad spans — a non-null reason means
 * the hit is rendered unhighlighted with a data-error badge.
 */
export function validateSpans(spans: readonly [number, number][], length: number): string | null {
  let previousEnd = 0;
  for (const [index, span] of spans.entries()) {
    const [start, end] = span;
    if (!Number.isInteger(start) || !Number.isInteger(end)) {
      return `span ${index} has non-integer offsets [${start}, ${end})`;
    }
    if (start < 0 || end > length) {
      return `span ${index} [${start}, ${end}) is outside the body (length ${length})`;
    }
    if (start >= end) {
      return `span ${index} [${start}, ${end}) is empty or reversed`;
    }
    if (start < previousEnd) {
      return `span ${index} [${start}, ${end}) overlaps the previous span`;
    }
    previousEnd = end;
  }
  return null;
}
