/** Typed client for the documented REST + WebSocket surface (nothing else). */

import type { QueryPayload } from "./model.js";
import type { ResultRow, WsMessage } from "./protocol.js";

export interface QueryResponse {
  protocol_version: number;
  results: ResultRow[];
  objects: { object_id: string; score: number }[];
}

export interface RefineRequest {
  session_id: string;
  weights?: Record<string, number>;
  media_filter?: string[] | null;
}

export interface ApiOptions {
  baseUrl?: string;
  token?: string;
  fetchImpl?: typeof fetch;
}

export class ApiClient {
  private baseUrl: string;
  private token: string;
  private fetchImpl: typeof fetch;

  constructor(options: ApiOptions = {}) {
    this.baseUrl = options.baseUrl ?? "";
    this.token = options.token ?? "";
    this.fetchImpl = options.fetchImpl ?? fetch.bind(globalThis);
  }

  private async post<T>(path: string, body: unknown): Promise<T> {
    const headers: Record<string, string> = { "content-type": "application/json" };
    if (this.token) {
      headers["x-token"] = this.token;
    }
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers,
      body: JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, payload?.error ?? response.statusText);
    }
    return payload as T;
  }

  query(payload: QueryPayload): Promise<QueryResponse> {
    return this.post("/api/query", payload);
  }

  refine(request: RefineRequest): Promise<{ results: ResultRow[] }> {
    return this.post("/api/refine", request);
  }

  moreLikeThis(segmentId: string, categories: string[] | null, k: number):
      Promise<{ results: ResultRow[] }> {
    return this.post("/api/more-like-this", {
      segment_id: segmentId,
      categories,
      k,
    });
  }

  previewUrl(segmentId: string): string {
    return `${this.baseUrl}/api/segments/${encodeURIComponent(segmentId)}/preview`;
  }

  wsUrl(): string {
    if (this.baseUrl.startsWith("http")) {
      return this.baseUrl.replace(/^http/, "ws") + "/ws";
    }
    const scheme = location.protocol === "https:" ? "wss" : "ws";
    return `${scheme}://${location.host}/ws`;
  }

  wsEnvelope(messageType: "QUERY" | "MLT" | "REFINE", requestId: string,
             payload: unknown): string {
    const message: Record<string, unknown> = {
      message_type: messageType,
      request_id: requestId,
      payload,
    };
    if (this.token) {
      message.token = this.token;
    }
    return JSON.stringify(message);
  }
}

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

export function parseWsMessage(raw: string): WsMessage | null {
  try {
    const msg = JSON.parse(raw);
    if (typeof msg.message_type === "string" && typeof msg.request_id === "string") {
      return msg as WsMessage;
    }
  } catch {
    /* fall through */
  }
  return null;
}
