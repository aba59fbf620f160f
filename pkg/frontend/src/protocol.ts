/**
 * WebSocket message grammar and the query lifecycle state machine.
 *
 * Lifecycle: idle -> running (QUERY_START) -> refinable (QUERY_END).
 * RESULT_BATCH messages may arrive in any category order; the grid shows a
 * provisional merge until QUERY_END fixes the fused order.
 */

export interface ResultRow {
  segment_id: string;
  object_id: string;
  score: number;
  per_category_scores: Record<string, number>;
}

export interface BatchRow {
  segment_id: string;
  score: number;
}

export interface WsMessage {
  message_type: "QUERY_START" | "RESULT_BATCH" | "QUERY_END" | "ERROR";
  request_id: string;
  payload: {
    category?: string;
    results?: (ResultRow | BatchRow)[];
    error?: string;
  };
}

export type Phase = "idle" | "running" | "refinable" | "failed";

export class QueryLifecycle {
  phase: Phase = "idle";
  requestId = "";
  batches = new Map<string, BatchRow[]>();
  finalResults: ResultRow[] | null = null;
  lastError: string | null = null;

  start(requestId: string): void {
    this.requestId = requestId;
    this.phase = "running";
    this.batches = new Map();
    this.finalResults = null;
    this.lastError = null;
  }

  /** Returns what changed so the view knows what to repaint. */
  onMessage(msg: WsMessage): "ignored" | "started" | "batch" | "final" | "failed" {
    if (msg.request_id !== this.requestId) {
      return "ignored"; // stale reply from a superseded query
    }
    switch (msg.message_type) {
      case "QUERY_START":
        return "started";
      case "RESULT_BATCH": {
        if (this.phase !== "running") {
          return "ignored";
        }
        const category = msg.payload.category ?? "?";
        this.batches.set(category, (msg.payload.results ?? []) as BatchRow[]);
        return "batch";
      }
      case "QUERY_END":
        this.finalResults = (msg.payload.results ?? []) as ResultRow[];
        this.phase = "refinable";
        return "final";
      case "ERROR":
        this.lastError = msg.payload.error ?? "unknown error";
        this.phase = "failed";
        return "failed";
    }
  }

  /** Provisional ranking from per-category batches (deterministic). */
  provisionalOrder(): BatchRow[] {
    const best = new Map<string, number>();
    for (const rows of this.batches.values()) {
      for (const row of rows) {
        const previous = best.get(row.segment_id);
        if (previous === undefined || row.score > previous) {
          best.set(row.segment_id, row.score);
        }
      }
    }
    return [...best.entries()]
      .map(([segment_id, score]) => ({ segment_id, score }))
      .sort((a, b) => b.score - a.score || a.segment_id.localeCompare(b.segment_id));
  }
}

let counter = 0;

export function nextRequestId(): string {
  counter += 1;
  return `q${Date.now().toString(36)}-${counter}`;
}
