/**
 * Typed client for the mathkb HTTP service.
 *
 * Every method returns the response body as-is after a shape check; the UI
 * renders only fields that came back from the wire, never synthesized ones.
 */

export interface ConceptSuggestion {
  id: string;
  label: string;
  lang: string;
  kind: string;
}

export interface SearchHit {
  docId: string;
  segmentId: string;
  score: number;
  /** Node paths when formulaId is set, (start, end) text spans otherwise. */
  highlights: number[][];
  explain: string[];
  formulaId?: string;
  mathml?: string;
}

export interface SearchResponse {
  buildStamp: string;
  hits: SearchHit[];
}

export interface SuggestResponse {
  buildStamp: string;
  suggestions: ConceptSuggestion[];
}

export interface Recommendation {
  docId: string;
  score: number;
}

export interface RecommendResponse {
  buildStamp: string;
  profile: string;
  recommendations: Recommendation[];
}

export interface DocumentFormula {
  id: string;
  source: string;
  unparsed: boolean;
}

export interface DocumentSegment {
  id: string;
  type: string;
  text: string;
  span: number[];
  formulas: DocumentFormula[];
}

export interface DocumentResponse {
  id: string;
  title: string;
  authors: string[];
  language: string;
  keywords: string[];
  segments: DocumentSegment[];
  relations: { src: string; kind: string; dst: string }[];
  abstract?: string;
  buildStamp: string;
}

export interface FormulaQuery {
  mode: "syntactic" | "semantic";
  pattern?: string;
  concepts?: string[];
  scope?: string;
  expand?: boolean;
}

/** Abort detection by name: works across the Node/jsdom DOMException realms. */
export function isAbortError(err: unknown): boolean {
  return (
    typeof err === "object" &&
    err !== null &&
    (err as { name?: unknown }).name === "AbortError"
  );
}

/** A service error envelope, or the client-side UNREACHABLE stand-in. */
export class ApiError extends Error {
  constructor(
    readonly code: string,
    message: string,
    readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

function isErrorEnvelope(
  body: unknown,
): body is { error: { code: string; message: string } } {
  if (typeof body !== "object" || body === null) return false;
  const err = (body as { error?: unknown }).error;
  return (
    typeof err === "object" &&
    err !== null &&
    typeof (err as { code?: unknown }).code === "string" &&
    typeof (err as { message?: unknown }).message === "string"
  );
}

export class ApiClient {
  constructor(readonly baseUrl: string) {}

  searchFormula(q: FormulaQuery, signal?: AbortSignal): Promise<SearchResponse> {
    const params = new URLSearchParams();
    params.set("mode", q.mode);
    if (q.mode === "syntactic") {
      params.set("pattern", q.pattern ?? "");
    } else {
      params.set("concepts", (q.concepts ?? []).join(","));
      if (q.expand === false) params.set("expand", "false");
    }
    if (q.scope) params.set("scope", q.scope);
    return this.get<SearchResponse>("/search/formula", params, signal);
  }

  suggest(
    prefix: string,
    opts?: { lang?: string; limit?: number },
    signal?: AbortSignal,
  ): Promise<SuggestResponse> {
    const params = new URLSearchParams({ q: prefix });
    if (opts?.lang) params.set("lang", opts.lang);
    if (opts?.limit !== undefined) params.set("limit", String(opts.limit));
    return this.get<SuggestResponse>("/ontology/suggest", params, signal);
  }

  recommend(
    docId: string,
    profile: string,
    k: number,
    signal?: AbortSignal,
  ): Promise<RecommendResponse> {
    const params = new URLSearchParams({ profile, k: String(k) });
    return this.get<RecommendResponse>(
      `/recommend/${encodeURIComponent(docId)}`,
      params,
      signal,
    );
  }

  getDocument(docId: string, signal?: AbortSignal): Promise<DocumentResponse> {
    return this.get<DocumentResponse>(
      `/documents/${encodeURIComponent(docId)}`,
      new URLSearchParams(),
      signal,
    );
  }

  private async get<T>(
    path: string,
    params: URLSearchParams,
    signal?: AbortSignal,
  ): Promise<T> {
    const encoded = params.toString();
    const query = encoded === "" ? "" : `?${encoded}`;
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}${path}${query}`, { signal });
    } catch (err) {
      if (isAbortError(err)) throw err;
      const detail = err instanceof Error ? err.message : String(err);
      throw new ApiError("UNREACHABLE", `service unreachable: ${detail}`, 0);
    }
    let body: unknown;
    try {
      body = await response.json();
    } catch {
      throw new ApiError(
        "BAD_RESPONSE",
        `expected JSON from ${path}, got HTTP ${response.status}`,
        response.status,
      );
    }
    if (!response.ok) {
      if (isErrorEnvelope(body)) {
        throw new ApiError(body.error.code, body.error.message, response.status);
      }
      throw new ApiError(
        "BAD_RESPONSE",
        `HTTP ${response.status} without an error envelope`,
        response.status,
      );
    }
    return body as T;
  }
}
