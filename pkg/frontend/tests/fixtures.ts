/** A recording fixture server: stubs global fetch with canned
 * responses keyed by method + path, and logs every request so tests
 * can assert on the exact wire traffic (the request-log assertions).
 *
 * Handlers may return a Response directly or a promise the test
 * resolves later; the dispatcher deliberately does NOT race the abort
 * signal, so tests can verify the app drops stale responses on its
 * own rather than relying on fetch cancellation.
 */

import type { QueryHit, QueryResponse } from "../src/types.js";

export interface RecordedRequest {
  method: string;
  url: string;
  body: string | null;
  signal: AbortSignal | null;
}

type Handler = (url: URL, body: unknown) => Response | Promise<Response>;

export function jsonResponse(status: number, payload: unknown): Response {
  return new Response(JSON.stringify(payload), {
    status,
    headers: { "content-type": "application/json" },
  });
}

export class FixtureServer {
  readonly requests: RecordedRequest[] = [];
  private readonly handlers: { method: string; path: string; handler: Handler }[] = [];
  private original: typeof globalThis.fetch | null = null;

  on(method: string, path: string, handler: Handler): this {
    this.handlers.push({ method: method.toUpperCase(), path, handler });
    return this;
  }

  install(): this {
    this.original = globalThis.fetch;
    globalThis.fetch = (input, init) => this.dispatch(input, init);
    return this;
  }

  restore(): void {
    if (this.original !== null) {
      globalThis.fetch = this.original;
      this.original = null;
    }
  }

  private async dispatch(input: RequestInfo | URL, init?: RequestInit): Promise<Response> {
    const raw = typeof input === "string" ? input : input instanceof URL ? input.href : input.url;
    const method = (init?.method ?? "GET").toUpperCase();
    const body = typeof init?.body === "string" ? init.body : null;
    this.requests.push({ method, url: raw, body, signal: init?.signal ?? null });
    if (init?.signal?.aborted) {
      throw new DOMException("The operation was aborted.", "AbortError");
    }
    const url = new URL(raw, "http://fixture.invalid");
    const match = this.handlers.find((h) => h.method === method && h.path === url.pathname);
    if (match === undefined) {
      return jsonResponse(404, { detail: `no fixture route for ${method} ${url.pathname}` });
    }
    return match.handler(url, body === null ? null : JSON.parse(body));
  }
}

/** Build a QueryHit with sensible defaults; abstained tracks spans. */
export function makeHit(overrides: Partial<QueryHit> & { chunk_body: string }): QueryHit {
  const spans = overrides.spans ?? [];
  return {
    chunk_id: "doc#0000",
    title_path: ["Document", "Section"],
    score: 1.0,
    abstained: spans.length === 0,
    ...overrides,
    spans,
  };
}

export function makeResponse(query: string, hits: QueryHit[]): QueryResponse {
  return {
    query,
    hits,
    timing: { retrieval_ms: 1.25, extraction_ms: 8.5 },
  };
}

/** Code-point length, written out independently of src/ helpers. */
export function cp(text: string): number {
  return Array.from(text).length;
}

/** Code-point slice oracle used by the fidelity assertions. */
export function cpSlice(text: string, start: number, end: number): string {
  return Array.from(text).slice(start, end).join("");
}
