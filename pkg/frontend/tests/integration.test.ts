/**
 * Acceptance-shaped session against a scripted mock server that speaks the
 * documented protocol: a two-term query (sketch + audio) streams
 * progressive batches, the final order matches a direct REST query,
 * More-Like-This excludes its seed, and a weight-zero/restore round trip
 * restores the original order.
 */

import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Breadcrumbs } from "../src/breadcrumbs.js";
import { emptyModel, toQueryPayload } from "../src/model.js";
import { QueryLifecycle, type ResultRow, type WsMessage } from "../src/protocol.js";
import { RefineState } from "../src/refine.js";

// -- scripted server --------------------------------------------------------

const CATEGORY_SCORES: Record<string, Record<string, number>> = {
  average_color: { "a:0": 0.9, "b:0": 0.4, "c:0": 0.7 },
  cens_shingle: { "b:0": 0.8, "c:0": 0.3 },
};

function fuse(weights: Record<string, number>): ResultRow[] {
  // same contract as the engine: weighted mean per term with absent-as-zero
  const active = Object.entries(weights).filter(([, w]) => w > 0);
  const total = active.reduce((acc, [, w]) => acc + w, 0);
  const segments = new Set<string>();
  for (const [category] of active) {
    Object.keys(CATEGORY_SCORES[category] ?? {}).forEach((s) => segments.add(s));
  }
  const rows: ResultRow[] = [...segments].map((segment_id) => {
    let acc = 0;
    const per: Record<string, number> = {};
    for (const [category, weight] of active) {
      const score = CATEGORY_SCORES[category]?.[segment_id];
      if (score !== undefined) {
        per[category] = score;
      }
      acc += weight * (score ?? 0);
    }
    return {
      segment_id,
      object_id: segment_id.split(":")[0],
      score: acc / total,
      per_category_scores: per,
    };
  });
  rows.sort((x, y) => y.score - x.score || x.segment_id.localeCompare(y.segment_id));
  return rows;
}

const sessions = new Map<string, Record<string, number>>();

function mockFetch(url: RequestInfo | URL, init?: RequestInit): Promise<Response> {
  const body = init?.body ? JSON.parse(init.body as string) : {};
  const path = String(url);
  const reply = (payload: unknown, status = 200) =>
    Promise.resolve(new Response(JSON.stringify(payload), { status }));

  if (path.endsWith("/api/query")) {
    const weights: Record<string, number> = {};
    for (const component of body.components) {
      for (const term of component.terms) {
        Object.assign(weights, term.categories);
      }
    }
    if (body.session_id) {
      sessions.set(body.session_id, weights);
    }
    return reply({ protocol_version: 1, results: fuse(weights), objects: [] });
  }
  if (path.endsWith("/api/refine")) {
    const base = sessions.get(body.session_id);
    if (!base) {
      return reply({ error: "session expired" }, 410);
    }
    const weights = { ...base, ...(body.weights ?? {}) };
    sessions.set(body.session_id, weights);
    return reply({ protocol_version: 1, results: fuse(weights) });
  }
  if (path.endsWith("/api/more-like-this")) {
    const rows = fuse({ average_color: 1.0 }).filter(
      (r) => r.segment_id !== body.segment_id,
    );
    return reply({ protocol_version: 1, results: rows });
  }
  return reply({ error: `unexpected ${path}` }, 404);
}

/** The WebSocket side of the mock: START, per-category batches, END. */
function scriptedWsReplies(raw: string): WsMessage[] {
  const envelope = JSON.parse(raw);
  const weights: Record<string, number> = {};
  for (const component of envelope.payload.components) {
    for (const term of component.terms) {
      Object.assign(weights, term.categories);
    }
  }
  if (envelope.payload.session_id) {
    sessions.set(envelope.payload.session_id, weights);
  }
  const batches = Object.keys(weights)
    .filter((category) => CATEGORY_SCORES[category])
    .reverse() // deliberately out of order relative to the term listing
    .map((category): WsMessage => ({
      message_type: "RESULT_BATCH",
      request_id: envelope.request_id,
      payload: {
        category,
        results: Object.entries(CATEGORY_SCORES[category]).map(([segment_id, score]) => ({
          segment_id,
          score,
        })),
      },
    }));
  return [
    { message_type: "QUERY_START", request_id: envelope.request_id, payload: {} },
    ...batches,
    {
      message_type: "QUERY_END",
      request_id: envelope.request_id,
      payload: { results: fuse(weights) },
    },
  ];
}

function composedModel() {
  const model = emptyModel();
  const image = model.components[0].terms[0];
  image.active = true;
  image.dataB64 = "c2tldGNo"; // sketch canvas PNG export
  image.format = "png";
  image.categories = { average_color: 1.0 };
  const audio = model.components[0].terms[1];
  audio.active = true;
  audio.dataB64 = "d2F2ZQ==";
  audio.audioCategory = "MATCHING";
  audio.categories = { cens_shingle: 1.0 };
  return model;
}

// -- the scripted session ----------------------------------------------------

describe("scripted two-term session", () => {
  it("streams progressive batches and ends in the fused order", () => {
    const lifecycle = new QueryLifecycle();
    const payload = toQueryPayload(composedModel(), "ses-ws");
    const api = new ApiClient({ fetchImpl: mockFetch });

    lifecycle.start("req-1");
    const frames = scriptedWsReplies(api.wsEnvelope("QUERY", "req-1", payload));
    const seen: string[] = [];
    const provisionalSnapshots: string[][] = [];
    for (const frame of frames) {
      const change = lifecycle.onMessage(frame);
      seen.push(change);
      if (change === "batch") {
        provisionalSnapshots.push(lifecycle.provisionalOrder().map((r) => r.segment_id));
      }
    }
    expect(seen[0]).toBe("started");
    expect(seen.filter((s) => s === "batch").length).toBe(2);
    expect(seen[seen.length - 1]).toBe("final");
    // batches arrived audio-first; the provisional view shows them anyway
    expect(provisionalSnapshots[0]).toEqual(["b:0", "c:0"]);
    expect(lifecycle.phase).toBe("refinable");
  });

  it("final order matches a direct REST query byte for byte", async () => {
    const lifecycle = new QueryLifecycle();
    const api = new ApiClient({ fetchImpl: mockFetch });
    const payload = toQueryPayload(composedModel(), "ses-cmp");

    lifecycle.start("req-2");
    for (const frame of scriptedWsReplies(api.wsEnvelope("QUERY", "req-2", payload))) {
      lifecycle.onMessage(frame);
    }
    const rest = await api.query(payload);
    expect(JSON.stringify(lifecycle.finalResults)).toBe(JSON.stringify(rest.results));
  });

  it("more-like-this excludes its seed and back restores the grid", async () => {
    const api = new ApiClient({ fetchImpl: mockFetch });
    const crumbs = new Breadcrumbs();
    const original = fuse({ average_color: 1.0, cens_shingle: 1.0 });

    crumbs.push("a:0", original);
    const { results } = await api.moreLikeThis("a:0", null, 100);
    expect(results.length).toBeGreaterThan(0);
    expect(results.every((r) => r.segment_id !== "a:0")).toBe(true);

    const restored = crumbs.back();
    expect(restored?.results.map((r) => r.segment_id))
      .toEqual(original.map((r) => r.segment_id));
  });

  it("weight zero then restore returns the original order", async () => {
    const api = new ApiClient({ fetchImpl: mockFetch });
    const payload = toQueryPayload(composedModel(), "ses-refine");
    const original = (await api.query(payload)).results.map((r) => r.segment_id);

    const refine = new RefineState(["average_color", "cens_shingle"]);
    refine.setWeight("average_color", 0);
    const zeroed = (await api.refine(refine.toRequest("ses-refine"))).results;
    expect(zeroed.map((r) => r.segment_id)).not.toEqual(original);
    // a:0 exists only in the zeroed-out category, so it drops out entirely
    expect(zeroed.some((r) => r.segment_id === "a:0")).toBe(false);

    refine.setWeight("average_color", 1);
    expect(refine.isInitial()).toBe(true);
    const restored = (await api.refine(refine.toRequest("ses-refine"))).results;
    expect(restored.map((r) => r.segment_id)).toEqual(original);
  });

  it("expired sessions surface as errors the panel can show", async () => {
    const api = new ApiClient({ fetchImpl: mockFetch });
    await expect(api.refine({ session_id: "ghost", weights: {} }))
      .rejects.toMatchObject({ status: 410 });
  });
});
