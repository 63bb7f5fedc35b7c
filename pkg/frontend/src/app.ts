/** Application controller: builds the shell, wires events, owns the
 * single in-flight request.
 *
 * Concurrency: one query may be outstanding at a time. A new submit
 * aborts the previous request and bumps a flight token; responses
 * arriving for a stale token are dropped without rendering, so a slow
 * earlier response can never overwrite a newer one.
 */

import { ServiceClient, ServiceError } from "./api.js";
import { SessionState, type HistoryEntry } from "./session.js";
import {
  hideErrorBanner,
  renderChunkDetails,
  renderHistoryList,
  renderResponse,
  renderSearchResults,
  showErrorBanner,
} from "./view.js";

const DEFAULT_K = 5;

export interface AppOptions {
  /** Initial value for the k input. */
  k?: number;
}

export class App {
  readonly state = new SessionState();
  readonly client: ServiceClient;

  private readonly queryInput: HTMLInputElement;
  private readonly kInput: HTMLInputElement;
  private readonly retrievalOnly: HTMLInputElement;
  private readonly validationHint: HTMLElement;
  private readonly banner: HTMLElement;
  private readonly results: HTMLElement;
  private readonly historyList: HTMLElement;

  private inFlight: AbortController | null = null;
  private flight = 0;

  constructor(root: HTMLElement, client: ServiceClient, options: AppOptions = {}) {
    this.client = client;
    root.replaceChildren();
    root.insertAdjacentHTML(
      "afterbegin",
      `
      <form class="query-form">
        <input type="text" class="query-input" placeholder="ask about the corpus" autocomplete="off" />
        <input type="number" class="k-input" min="1" value="${options.k ?? DEFAULT_K}" />
        <label class="retrieval-only-label">
          <input type="checkbox" class="retrieval-only" /> retrieval only
        </label>
        <button type="submit" class="submit-query">search</button>
        <span class="validation-hint" role="alert" hidden></span>
      </form>
      <div class="error-banner" role="alert" hidden></div>
      <main class="results"></main>
      <aside class="history">
        <h2>history</h2>
        <ul class="history-list"></ul>
      </aside>
      `,
    );
    const pick = <T extends HTMLElement>(selector: string): T => {
      const el = root.querySelector<T>(selector);
      if (el === null) {
        throw new Error(`shell is missing ${selector}`);
      }
      return el;
    };
    this.queryInput = pick<HTMLInputElement>(".query-input");
    this.kInput = pick<HTMLInputElement>(".k-input");
    this.retrievalOnly = pick<HTMLInputElement>(".retrieval-only");
    this.validationHint = pick<HTMLElement>(".validation-hint");
    this.banner = pick<HTMLElement>(".error-banner");
    this.results = pick<HTMLElement>(".results");
    this.historyList = pick<HTMLElement>(".history-list");

    pick<HTMLFormElement>(".query-form").addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submitFromForm();
    });
    this.queryInput.addEventListener("input", () => {
      this.state.currentQuery = this.queryInput.value;
      this.clearValidationHint();
    });
    this.results.addEventListener("click", (event) => {
      this.handleResultsClick(event);
    });
  }

  /** Read the form and submit; used by the submit handler. */
  submitFromForm(): Promise<void> {
    const k = Number.parseInt(this.kInput.value, 10);
    return this.submitQuery(this.queryInput.value, Number.isNaN(k) ? DEFAULT_K : k);
  }

  /**
   * Validate, record history, send the request, render the outcome.
   * An empty (or whitespace-only) query shows an inline hint and
   * sends nothing. Errors show the banner and leave previous results
   * and history untouched in the DOM.
   */
  async submitQuery(text: string, k: number): Promise<void> {
    const query = text.trim();
    if (query === "") {
      this.queryInput.setAttribute("aria-invalid", "true");
      this.validationHint.textContent = "enter a query first";
      this.validationHint.hidden = false;
      return;
    }
    this.clearValidationHint();
    this.state.currentQuery = query;

    this.inFlight?.abort();
    const controller = new AbortController();
    this.inFlight = controller;
    const token = ++this.flight;

    if (this.retrievalOnly.checked) {
      try {
        const response = await this.client.search(query, k, undefined, controller.signal);
        if (token !== this.flight) {
          return;
        }
        hideErrorBanner(this.banner);
        renderSearchResults(response, this.results);
      } catch (error) {
        this.reportError(error, token);
      }
      return;
    }

    this.state.pushHistory(query, k);
    renderHistoryList(this.state.history, this.historyList, (entry) => {
      void this.replay(entry);
    });
    try {
      const response = await this.client.query(query, k, controller.signal);
      if (token !== this.flight) {
        return;
      }
      this.state.recordResponse(response);
      hideErrorBanner(this.banner);
      renderResponse(response, this.results);
    } catch (error) {
      this.reportError(error, token);
    }
  }

  /** Re-run a history entry exactly as first submitted. */
  replay(entry: HistoryEntry): Promise<void> {
    this.queryInput.value = entry.query;
    this.kInput.value = String(entry.k);
    this.retrievalOnly.checked = false;
    return this.submitQuery(entry.query, entry.k);
  }

  private reportError(error: unknown, token: number): void {
    if (error instanceof DOMException && error.name === "AbortError") {
      return; // superseded by a newer submit
    }
    if (token !== this.flight) {
      return;
    }
    const message =
      error instanceof ServiceError ? error.message : `unexpected error: ${String(error)}`;
    showErrorBanner(this.banner, message);
  }

  private clearValidationHint(): void {
    this.queryInput.removeAttribute("aria-invalid");
    this.validationHint.hidden = true;
    this.validationHint.textContent = "";
  }

  private handleResultsClick(event: Event): void {
    const target = event.target as HTMLElement;
    const card = target.closest<HTMLElement>("article.hit");
    if (card === null) {
      return;
    }
    if (target.closest("button.details-toggle") !== null) {
      void this.toggleDetails(card);
      return;
    }
    const index = Number.parseInt(card.dataset.index ?? "", 10);
    if (!Number.isNaN(index)) {
      this.state.selectHit(index);
      for (const other of this.results.querySelectorAll("article.hit")) {
        other.classList.toggle("selected", other === card);
      }
    }
  }

  private async toggleDetails(card: HTMLElement): Promise<void> {
    const slot = card.querySelector<HTMLElement>(".details-slot");
    const chunkId = card.dataset.chunkId;
    if (slot === null || chunkId === undefined) {
      return;
    }
    if (slot.childElementCount > 0) {
      slot.hidden = !slot.hidden;
      return;
    }
    try {
      const record = await this.client.chunk(chunkId);
      renderChunkDetails(record, slot);
    } catch (error) {
      slot.textContent =
        error instanceof ServiceError ? error.message : `unexpected error: ${String(error)}`;
    }
    slot.hidden = false;
  }
}

export function initApp(root: HTMLElement, client: ServiceClient, options?: AppOptions): App {
  return new App(root, client, options);
}
