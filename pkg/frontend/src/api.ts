/** Typed client for the spanqa HTTP service.
 *
 * The base URL is configurable so the static bundle can be served
 * from anywhere (same origin by default). Every method resolves to
 * the parsed JSON payload or rejects with ServiceError carrying the
 * HTTP status and the service's `detail` message when present.
 */

import type { ChunkRecord, QueryResponse, SearchResponse } from "./types.js";

export class ServiceError extends Error {
  readonly status: number | null;

  constructor(message: string, status: number | null = null) {
    super(message);
    this.name = "ServiceError";
    this.status = status;
  }
}

async function errorFromResponse(response: Response): Promise<ServiceError> {
  let detail = `${response.status} ${response.statusText}`.trim();
  try {
    const payload = (await response.json()) as { detail?: unknown };
    if (typeof payload.detail === "string" && payload.detail) {
      detail = payload.detail;
    }
  } catch {
    // Non-JSON error body; keep the status line.
  }
  return new ServiceError(detail, response.status);
}

export class ServiceClient {
  /** Base URL without a trailing slash, e.g. "http://localhost:8080". */
  readonly baseUrl: string;

  constructor(baseUrl = "") {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, init);
    } catch (cause) {
      if (cause instanceof DOMException && cause.name === "AbortError") {
        throw cause;
      }
      throw new ServiceError(`service unreachable: ${String(cause)}`);
    }
    if (!response.ok) {
      throw await errorFromResponse(response);
    }
    return (await response.json()) as T;
  }

  /** GET /search — ranked chunk ids without extraction. */
  search(query: string, k?: number, mode?: string, signal?: AbortSignal): Promise<SearchResponse> {
    const params = new URLSearchParams({ q: query });
    if (k !== undefined) {
      params.set("k", String(k));
    }
    if (mode !== undefined) {
      params.set("mode", mode);
    }
    return this.request<SearchResponse>(`/search?${params.toString()}`, { signal });
  }

  /** POST /query — search then extract in one round trip. */
  query(query: string, k?: number, signal?: AbortSignal): Promise<QueryResponse> {
    const body: { query: string; k?: number } = { query };
    if (k !== undefined) {
      body.k = k;
    }
    return this.request<QueryResponse>("/query", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
  }

  /** GET /chunks/{id} — stored chunk by id (ids may contain '#'). */
  chunk(chunkId: string, signal?: AbortSignal): Promise<ChunkRecord> {
    return this.request<ChunkRecord>(`/chunks/${encodeURIComponent(chunkId)}`, { signal });
  }
}
