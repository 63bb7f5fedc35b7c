/** Render a chunk body with its evidence spans emphasized.
 *
 * Pure view: offsets come from the service response and are used
 * as-is, with character-exact boundaries (no word snapping). Spans
 * become <mark data-evidence> nodes; the text between them stays in
 * the DOM inside dimmed <span data-dim> nodes, so the full body is
 * always present and `container.textContent === body`.
 *
 * Bad offsets never throw: the body is rendered unhighlighted and the
 * caller shows a data-error badge with the returned reason.
 */

import { codePointLength, segmentByCodePoints, validateSpans } from "./codepoints.js";
import type { SpanPair } from "./types.js";

export interface HighlightResult {
  fragment: DocumentFragment;
  /** Non-null when spans were rejected; the fragment is then plain text. */
  spanError: string | null;
}

export function renderHighlights(body: string, spans: readonly SpanPair[]): HighlightResult {
  const fragment = document.createDocumentFragment();
  const spanError = validateSpans(spans, codePointLength(body));
  if (spanError !== null) {
    const plain = document.createElement("span");
    plain.className = "plain";
    plain.textContent = body;
    fragment.append(plain);
    return { fragment, spanError };
  }
  for (const segment of segmentByCodePoints(body, spans)) {
    if (segment.emphasized) {
      const mark = document.createElement("mark");
      mark.className = "evidence";
      mark.dataset.evidence = "";
      mark.textContent = segment.text;
      fragment.append(mark);
    } else {
      const dim = document.createElement("span");
      dim.className = "dim";
      dim.dataset.dim = "";
      dim.textContent = segment.text;
      fragment.append(dim);
    }
  }
  return { fragment, spanError: null };
}
