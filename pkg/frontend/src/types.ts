/** Wire types for the spanqa HTTP service.
 *
 * These mirror the JSON payloads exactly; the UI is a pure view over
 * them and never recomputes offsets or scores. All span offsets count
 * unicode scalar values (code points), not UTF-16 code units — see
 * codepoints.ts for the slicing helpers that honour that convention.
 */

/** A half-open character range [start, end) in code-point offsets. */
export type SpanPair = [number, number];

/** One ranked hit from GET /search. */
export interface SearchHit {
  chunk_id: string;
  score: number;
  lexical_rank: number | null;
  dense_rank: number | null;
  title_path: string[];
}

/** Response of GET /search?q=&k=&mode=. */
export interface SearchResponse {
  query: string;
  mode: string;
  hits: SearchHit[];
}

/** One hit in a POST /query response: chunk text plus evidence spans. */
export interface QueryHit {
  chunk_id: string;
  title_path: string[];
  chunk_body: string;
  score: number;
  spans: SpanPair[];
  abstained: boolean;
  /** Present when extraction failed for this chunk; spans will be empty. */
  error?: string;
}

/** Per-stage timing reported by POST /query. */
export interface QueryTiming {
  retrieval_ms: number;
  extraction_ms: number;
}

/** Response of POST /query. */
export interface QueryResponse {
  query: string;
  hits: QueryHit[];
  timing: QueryTiming;
}

/** Stored chunk record from GET /chunks/{id}. */
export interface ChunkRecord {
  chunk_id: string;
  doc_id: string;
  title_path: string[];
  prefix: string;
  body: string;
  source_range: [number, number];
  atomic_oversize: boolean;
}
