/** Thin typed client for the casegraph HTTP API.
 *
 * Every call goes through request(), which counts round-trips so tests can
 * assert interaction budgets (e.g. a neighborhood recenter must cost at most
 * two requests).
 */

import type {
  ApiError,
  ContextAction,
  GraphViewPage,
  JobInfo,
  Mention,
  Position,
  SearchHit,
} from "./types.js";
import { type FilterState, toQueryParams } from "./filters.js";

export class ApiRequestError extends Error {
  constructor(
    public readonly status: number,
    public readonly body: ApiError,
  ) {
    super(`${body.code}: ${body.message}`);
  }
}

export interface SearchRequest {
  text: string;
  modes?: string[];
  fuzzy_max_edits?: number;
  ontology_max_depth?: number;
  scope?: string;
  filter?: FilterState;
}

export class ApiClient {
  requestCount = 0;

  constructor(
    private readonly baseUrl: string,
    private readonly token: string | null = null,
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    this.requestCount += 1;
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) headers.authorization = `Bearer ${this.token}`;
    const response = await fetch(`${this.baseUrl}${path}`, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) throw new ApiRequestError(response.status, payload as ApiError);
    return payload as T;
  }

  private query(params: Record<string, string>): string {
    const qs = new URLSearchParams(params).toString();
    return qs ? `?${qs}` : "";
  }

  health(): Promise<{ status: string; log_head_hash: string; entries: number }> {
    return this.request("GET", "/healthz");
  }

  schema(): Promise<Record<string, unknown>> {
    return this.request("GET", "/schema");
  }

  ingest(content: Uint8Array, mediaType: string, title?: string, timestamp?: number): Promise<JobInfo> {
    return this.request("POST", "/ingest", {
      content_base64: Buffer.from(content).toString("base64"),
      media_type: mediaType,
      title,
      timestamp,
    });
  }

  job(jobId: string): Promise<JobInfo> {
    return this.request("GET", `/jobs/${jobId}`);
  }

  /** One page of the filtered overview. */
  graphView(filter: FilterState, cursor?: string, limit?: number): Promise<GraphViewPage> {
    const params = toQueryParams(filter);
    if (cursor) params.cursor = cursor;
    if (limit) params.limit = String(limit);
    return this.request("GET", `/graph/view${this.query(params)}`);
  }

  neighborhood(center: string, k: number, filter: FilterState, limit?: number): Promise<GraphViewPage> {
    const params = { ...toQueryParams(filter), center, k: String(k) };
    if (limit) (params as Record<string, string>).limit = String(limit);
    return this.request("GET", `/graph/neighborhood${this.query(params)}`);
  }

  item(itemId: string, includeHidden = false): Promise<Record<string, unknown>> {
    const params: Record<string, string> = includeHidden ? { include_hidden: "true" } : {};
    return this.request("GET", `/items/${itemId}${this.query(params)}`);
  }

  hide(itemId: string, reason: string): Promise<{ hidden: string[] }> {
    return this.request("POST", `/items/${itemId}/hide`, { reason });
  }

  review(itemId: string, newGrade?: string): Promise<{ id: string; reviewed: boolean }> {
    return this.request("POST", `/items/${itemId}/review`, { new_grade: newGrade });
  }

  annotate(itemId: string, comment: string, disposition = "none"): Promise<{ id: string; annotations: number }> {
    return this.request("POST", `/items/${itemId}/annotate`, { comment, disposition });
  }

  trace(itemId: string): Promise<{ item: string; entries: unknown[] }> {
    return this.request("GET", `/items/${itemId}/trace`);
  }

  itemActions(itemId: string): Promise<{ item: string; actions: ContextAction[]; preview: unknown }> {
    return this.request("GET", `/items/${itemId}/actions`);
  }

  runAction(moduleId: string, action: string, item: string, params: Record<string, unknown>): Promise<{ superseded: string[] }> {
    return this.request("POST", `/actions/${moduleId}/${action}`, { item, params });
  }

  mentions(docId: string): Promise<{ document: string; mentions: Mention[] }> {
    return this.request("GET", `/documents/${docId}/mentions`);
  }

  search(query: SearchRequest): Promise<{ hits: SearchHit[] }> {
    const { filter, ...rest } = query;
    return this.request("POST", "/search", {
      ...rest,
      filter: filter ? toQueryParams(filter) : undefined,
    });
  }

  ontology(): Promise<{ version: number; concepts: string[]; links: [string, string, string][] }> {
    return this.request("GET", "/ontology");
  }

  editOntology(edits: Record<string, unknown>[]): Promise<{ version: number }> {
    return this.request("POST", "/ontology", { edits });
  }

  layout(filter: FilterState, params?: Record<string, unknown>): Promise<{ positions: Position[] }> {
    return this.request("POST", "/layout", { filter: toQueryParams(filter), params });
  }

  report(items: string[], title = "Case report"): Promise<Record<string, unknown>> {
    return this.request("GET", `/report${this.query({ items: items.join(","), title })}`);
  }
}
