/**
 * Refine-panel state: per-category weight sliders and media filters that
 * debounce-post to /api/refine without re-running extraction.
 */

import type { MediaType } from "./model.js";

export function debounce<A extends unknown[]>(fn: (...args: A) => void, waitMs: number,
                                              timers: { setTimeout: typeof setTimeout;
                                                        clearTimeout: typeof clearTimeout }
                                              = globalThis):
    (...args: A) => void {
  let handle: ReturnType<typeof setTimeout> | null = null;
  return (...args: A) => {
    if (handle !== null) {
      timers.clearTimeout(handle);
    }
    handle = timers.setTimeout(() => {
      handle = null;
      fn(...args);
    }, waitMs);
  };
}

export class RefineState {
  readonly initialWeights: Record<string, number>;
  weights: Record<string, number>;
  mediaFilter: MediaType[] | null = null;

  constructor(categories: string[], initial?: Record<string, number>) {
    this.initialWeights = {};
    for (const category of categories) {
      this.initialWeights[category] = initial?.[category] ?? 1.0;
    }
    this.weights = { ...this.initialWeights };
  }

  setWeight(category: string, value: number): void {
    if (category in this.weights) {
      this.weights[category] = Math.max(0, Math.min(1, value));
    }
  }

  reset(): void {
    this.weights = { ...this.initialWeights };
    this.mediaFilter = null;
  }

  /** true once every weight is back at its initial value. */
  isInitial(): boolean {
    return Object.entries(this.initialWeights).every(
      ([category, value]) => this.weights[category] === value,
    ) && this.mediaFilter === null;
  }

  toRequest(sessionId: string): { session_id: string; weights: Record<string, number>;
                                  media_filter?: string[] | null } {
    const request: { session_id: string; weights: Record<string, number>;
                     media_filter?: string[] | null } = {
      session_id: sessionId,
      weights: { ...this.weights },
    };
    if (this.mediaFilter !== null) {
      request.media_filter = this.mediaFilter.length > 0 ? [...this.mediaFilter] : null;
    }
    return request;
  }
}
