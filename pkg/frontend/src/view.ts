/** DOM builders: hit cards, badges, timing, history, banners.
 *
 * Everything here sets text via textContent (never innerHTML), so
 * chunk bodies render verbatim no matter what markup they contain,
 * and tests can equate DOM-extracted text with response payloads.
 */

import { renderHighlights } from "./highlight.js";
import type { HistoryEntry } from "./session.js";
import type { ChunkRecord, QueryHit, QueryResponse, SearchResponse } from "./types.js";

function badge(className: string, text: string, tooltip?: string): HTMLSpanElement {
  const el = document.createElement("span");
  el.className = `badge ${className}`;
  el.textContent = text;
  if (tooltip !== undefined) {
    el.title = tooltip;
  }
  return el;
}

/** Build one hit card: header, badges, highlighted body, actions. */
export function renderHitCard(hit: QueryHit, index: number): HTMLElement {
  const card = document.createElement("article");
  card.className = "hit";
  card.dataset.chunkId = hit.chunk_id;
  card.dataset.index = String(index);

  const header = document.createElement("header");
  const title = document.createElement("span");
  title.className = "title-path";
  title.textContent = hit.title_path.length > 0 ? hit.title_path.join(" › ") : hit.chunk_id;
  const score = document.createElement("span");
  score.className = "score";
  score.textContent = hit.score.toFixed(3);
  header.append(title, score);
  card.append(header);

  const { fragment, spanError } = renderHighlights(hit.chunk_body, hit.spans);

  const badges = document.createElement("div");
  badges.className = "badges";
  if (spanError !== null) {
    const dataError = badge("data-error", "invalid span data", spanError);
    dataError.dataset.error = spanError;
    badges.append(dataError);
  }
  if (hit.error !== undefined) {
    badges.append(badge("backend-error", `extraction failed: ${hit.error}`));
  } else if (hit.abstained && hit.spans.length === 0) {
    badges.append(badge("no-evidence", "no verbatim evidence found"));
  }
  if (badges.childElementCount > 0) {
    card.append(badges);
  }

  const body = document.createElement("p");
  body.className = "chunk-body";
  body.append(fragment);
  card.append(body);

  const actions = document.createElement("div");
  actions.className = "actions";
  const evidence = Array.from(body.querySelectorAll("mark.evidence"), (m) => m.textContent ?? "");
  if (evidence.length > 0 && typeof navigator !== "undefined" && navigator.clipboard) {
    const copy = document.createElement("button");
    copy.type = "button";
    copy.className = "copy-evidence";
    copy.textContent = "copy evidence";
    copy.addEventListener("click", (event) => {
      event.stopPropagation();
      void navigator.clipboard.writeText(evidence.join("\n"));
    });
    actions.append(copy);
  }
  const details = document.createElement("button");
  details.type = "button";
  details.className = "details-toggle";
  details.textContent = "chunk details";
  actions.append(details);
  card.append(actions);

  const slot = document.createElement("div");
  slot.className = "details-slot";
  slot.hidden = true;
  card.append(slot);

  return card;
}

/** Replace `container` contents with the full query response view. */
export function renderResponse(response: QueryResponse, container: HTMLElement): void {
  container.replaceChildren();

  const timing = document.createElement("p");
  timing.className = "timing";
  timing.textContent =
    `retrieval ${response.timing.retrieval_ms.toFixed(1)} ms · ` +
    `extraction ${response.timing.extraction_ms.toFixed(1)} ms`;
  container.append(timing);

  if (response.hits.length === 0) {
    const empty = document.createElement("p");
    empty.className = "empty-note";
    empty.textContent = "no chunks matched this query";
    container.append(empty);
    return;
  }
  for (const [index, hit] of response.hits.entries()) {
    container.append(renderHitCard(hit, index));
  }
}

/** Replace `container` contents with a compact retrieval-only list. */
export function renderSearchResults(response: SearchResponse, container: HTMLElement): void {
  container.replaceChildren();
  const heading = document.createElement("p");
  heading.className = "timing";
  heading.textContent = `${response.hits.length} hits · mode ${response.mode}`;
  container.append(heading);
  const list = document.createElement("ol");
  list.className = "search-hits";
  for (const hit of response.hits) {
    const item = document.createElement("li");
    item.className = "search-hit";
    item.dataset.chunkId = hit.chunk_id;
    const title = document.createElement("span");
    title.className = "title-path";
    title.textContent = hit.title_path.length > 0 ? hit.title_path.join(" › ") : hit.chunk_id;
    const score = document.createElement("span");
    score.className = "score";
    score.textContent = hit.score.toFixed(3);
    item.append(title, score);
    list.append(item);
  }
  container.append(list);
}

/** Fill a details slot with the stored chunk record. */
export function renderChunkDetails(record: ChunkRecord, slot: HTMLElement): void {
  slot.replaceChildren();
  const rows: [string, string][] = [
    ["chunk id", record.chunk_id],
    ["document", record.doc_id],
    ["source range", `[${record.source_range[0]}, ${record.source_range[1]})`],
    ["prefix", record.prefix === "" ? "(none)" : record.prefix],
    ["atomic oversize", record.atomic_oversize ? "yes" : "no"],
  ];
  const table = document.createElement("dl");
  table.className = "chunk-details";
  for (const [label, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = label;
    const dd = document.createElement("dd");
    dd.textContent = value;
    table.append(dt, dd);
  }
  slot.append(table);
}

/** Rebuild the history list; newest entry first, each re-runnable. */
export function renderHistoryList(
  history: readonly HistoryEntry[],
  container: HTMLElement,
  onReplay: (entry: HistoryEntry) => void,
): void {
  container.replaceChildren();
  for (const entry of history) {
    const item = document.createElement("li");
    const button = document.createElement("button");
    button.type = "button";
    button.className = "history-entry";
    button.dataset.query = entry.query;
    button.dataset.k = String(entry.k);
    button.textContent = `${entry.query} (k=${entry.k})`;
    button.addEventListener("click", () => onReplay(entry));
    item.append(button);
    container.append(item);
  }
}

export function showErrorBanner(banner: HTMLElement, message: string): void {
  banner.textContent = message;
  banner.hidden = false;
}

export function hideErrorBanner(banner: HTMLElement): void {
  banner.textContent = "";
  banner.hidden = true;
}
