/** In-memory state of one interactive query session.
 *
 * Holds the current query text, the last response, the selected hit,
 * and the history of submitted queries. The invariant the rest of the
 * app leans on: whatever is rendered as a highlight came verbatim
 * from `lastResponse` — the state layer stores responses untouched
 * and never derives or adjusts offsets.
 */

import type { QueryResponse } from "./types.js";

export interface HistoryEntry {
  query: string;
  k: number;
  submittedAt: number;
}

export class SessionState {
  currentQuery = "";
  lastResponse: QueryResponse | null = null;
  selectedHit: number | null = null;
  readonly history: HistoryEntry[] = [];

  /** Record a submission; newest entries come first. */
  pushHistory(query: string, k: number, now = Date.now()): HistoryEntry {
    const entry: HistoryEntry = { query, k, submittedAt: now };
    this.history.unshift(entry);
    return entry;
  }

  /** Store a response and clear the hit selection. */
  recordResponse(response: QueryResponse): void {
    this.lastResponse = response;
    this.selectedHit = null;
  }

  /** Select a hit by index, or clear with null. */
  selectHit(index: number | null): void {
    if (index !== null) {
      const hits = this.lastResponse?.hits ?? [];
      if (index < 0 || index >= hits.length) {
        return;
      }
    }
    this.selectedHit = index;
  }
}
