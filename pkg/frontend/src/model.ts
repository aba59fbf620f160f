/**
 * Client-side query model mirroring the engine's composition rules:
 * terms inside a component are AND-ed, components are OR-ed. The validator
 * enforces the same invariants the server checks, so the UI can disable
 * submission instead of bouncing off a 400.
 */

export type TermType = "IMAGE" | "AUDIO" | "MODEL_3D";
export type AudioCategory = "FINGERPRINT" | "MATCHING" | "VERSION_ID";
export type MediaType = "IMAGE" | "AUDIO" | "VIDEO" | "MODEL_3D";

export interface UiTerm {
  type: TermType;
  active: boolean;
  /** base64 of the reference document; null until the user provides one */
  dataB64: string | null;
  format: string; // png | ppm | wav | obj
  categories: Record<string, number>;
  audioCategory?: AudioCategory;
  /** true when the reference is a 2D silhouette sketch of a 3D shape */
  sketch3d?: boolean;
}

export interface UiComponent {
  terms: UiTerm[];
}

export interface UiQueryModel {
  components: UiComponent[];
  k: number;
  mediaFilter: MediaType[] | null;
}

export const DEFAULT_IMAGE_CATEGORIES: Record<string, number> = {
  average_color: 1.0,
  edge_histogram: 1.0,
  hog: 1.0,
};

export const AUDIO_ROUTING: Record<AudioCategory, string[]> = {
  FINGERPRINT: ["fingerprint", "mfcc_shingle"],
  MATCHING: ["cens_shingle", "hpcp_shingle"],
  VERSION_ID: ["cens_shingle", "hpcp_shingle"],
};

export function makeTerm(type: TermType): UiTerm {
  if (type === "IMAGE") {
    return { type, active: false, dataB64: null, format: "png",
             categories: { ...DEFAULT_IMAGE_CATEGORIES } };
  }
  if (type === "AUDIO") {
    return { type, active: false, dataB64: null, format: "wav",
             categories: Object.fromEntries(AUDIO_ROUTING.MATCHING.map((c) => [c, 1.0])),
             audioCategory: "MATCHING" };
  }
  return { type, active: false, dataB64: null, format: "obj",
           categories: { sphharm: 1.0, lightfield: 1.0 } };
}

export function makeComponent(): UiComponent {
  return { terms: [makeTerm("IMAGE"), makeTerm("AUDIO"), makeTerm("MODEL_3D")] };
}

export function emptyModel(): UiQueryModel {
  return { components: [makeComponent()], k: 100, mediaFilter: null };
}

/** All invariant violations, empty when the model is submittable. */
export function validateModel(model: UiQueryModel): string[] {
  const problems: string[] = [];
  if (model.components.length === 0) {
    problems.push("query needs at least one component");
  }
  if (!(Number.isFinite(model.k) && model.k >= 1)) {
    problems.push("result budget k must be >= 1");
  }
  model.components.forEach((component, ci) => {
    const active = component.terms.filter((t) => t.active);
    if (active.length === 0) {
      problems.push(`component ${ci + 1} needs at least one active term`);
    }
    const seen = new Set<TermType>();
    for (const term of active) {
      if (seen.has(term.type)) {
        problems.push(`component ${ci + 1} has two active ${term.type} terms`);
      }
      seen.add(term.type);
      if (!term.dataB64) {
        problems.push(`component ${ci + 1}: ${term.type} term has no reference document`);
      }
      const weights = Object.values(term.categories);
      if (weights.some((w) => !Number.isFinite(w) || w < 0 || w > 1)) {
        problems.push(`component ${ci + 1}: ${term.type} weights must be in [0, 1]`);
      }
      if (!weights.some((w) => w > 0)) {
        problems.push(`component ${ci + 1}: ${term.type} term needs a category with weight > 0`);
      }
    }
  });
  return problems;
}

export interface TermPayload {
  type: TermType;
  format: string;
  data_b64: string;
  categories: Record<string, number>;
  audio_category?: AudioCategory;
}

export interface QueryPayload {
  components: { terms: TermPayload[] }[];
  k: number;
  media_filter?: MediaType[];
  session_id?: string;
}

/** Serialize the active parts of the model; throws on an invalid model. */
export function toQueryPayload(model: UiQueryModel, sessionId?: string): QueryPayload {
  const problems = validateModel(model);
  if (problems.length > 0) {
    throw new Error(`invalid query: ${problems.join("; ")}`);
  }
  const payload: QueryPayload = {
    components: model.components.map((component) => ({
      terms: component.terms
        .filter((t) => t.active)
        .map((t) => {
          const term: TermPayload = {
            type: t.type,
            format: t.sketch3d ? "png" : t.format,
            data_b64: t.dataB64 as string,
            categories: t.sketch3d ? { lightfield: 1.0 } : { ...t.categories },
          };
          if (t.type === "AUDIO" && t.audioCategory) {
            term.audio_category = t.audioCategory;
          }
          return term;
        }),
    })),
    k: model.k,
  };
  if (model.mediaFilter && model.mediaFilter.length > 0) {
    payload.media_filter = [...model.mediaFilter];
  }
  if (sessionId) {
    payload.session_id = sessionId;
  }
  return payload;
}
