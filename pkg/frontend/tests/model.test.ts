import { describe, expect, it } from "vitest";

import {
  emptyModel,
  makeComponent,
  makeTerm,
  toQueryPayload,
  validateModel,
  type UiQueryModel,
} from "../src/model.js";

function validModel(): UiQueryModel {
  const model = emptyModel();
  const image = model.components[0].terms[0];
  image.active = true;
  image.dataB64 = "aGVsbG8=";
  return model;
}

describe("validateModel", () => {
  it("accepts a single active image term", () => {
    expect(validateModel(validModel())).toEqual([]);
  });

  it("rejects an empty component list", () => {
    const model = validModel();
    model.components = [];
    expect(validateModel(model).length).toBeGreaterThan(0);
  });

  it("rejects a component without active terms", () => {
    const model = validModel();
    model.components[0].terms.forEach((t) => (t.active = false));
    expect(validateModel(model).some((p) => p.includes("active term"))).toBe(true);
  });

  it("rejects two active terms of the same type in one component", () => {
    const model = validModel();
    const extra = makeTerm("IMAGE");
    extra.active = true;
    extra.dataB64 = "eA==";
    model.components[0].terms.push(extra);
    expect(validateModel(model).some((p) => p.includes("two active IMAGE"))).toBe(true);
  });

  it("allows the same type in different components", () => {
    const model = validModel();
    const second = makeComponent();
    second.terms[0].active = true;
    second.terms[0].dataB64 = "eQ==";
    model.components.push(second);
    expect(validateModel(model)).toEqual([]);
  });

  it("rejects an active term without a reference document", () => {
    const model = validModel();
    model.components[0].terms[0].dataB64 = null;
    expect(validateModel(model).some((p) => p.includes("reference document"))).toBe(true);
  });

  it("rejects all-zero weights", () => {
    const model = validModel();
    model.components[0].terms[0].categories = { average_color: 0, hog: 0 };
    expect(validateModel(model).some((p) => p.includes("weight > 0"))).toBe(true);
  });

  it("rejects weights outside [0, 1]", () => {
    const model = validModel();
    model.components[0].terms[0].categories = { average_color: 1.5 };
    expect(validateModel(model).some((p) => p.includes("[0, 1]"))).toBe(true);
  });

  it("rejects a non-positive result budget", () => {
    const model = validModel();
    model.k = 0;
    expect(validateModel(model).some((p) => p.includes("k must be"))).toBe(true);
  });
});

describe("toQueryPayload", () => {
  it("serializes only active terms", () => {
    const model = validModel();
    const payload = toQueryPayload(model, "ses");
    expect(payload.components).toHaveLength(1);
    expect(payload.components[0].terms).toHaveLength(1);
    expect(payload.components[0].terms[0].type).toBe("IMAGE");
    expect(payload.session_id).toBe("ses");
  });

  it("routes audio category and keeps the media filter", () => {
    const model = validModel();
    const audio = model.components[0].terms[1];
    audio.active = true;
    audio.dataB64 = "d2F2";
    audio.audioCategory = "FINGERPRINT";
    audio.categories = { fingerprint: 1.0, mfcc_shingle: 1.0 };
    model.mediaFilter = ["AUDIO", "VIDEO"];
    const payload = toQueryPayload(model);
    const term = payload.components[0].terms.find((t) => t.type === "AUDIO");
    expect(term?.audio_category).toBe("FINGERPRINT");
    expect(payload.media_filter).toEqual(["AUDIO", "VIDEO"]);
  });

  it("maps a 3D silhouette sketch to a lightfield-only PNG term", () => {
    const model = validModel();
    const mesh = model.components[0].terms[2];
    mesh.active = true;
    mesh.dataB64 = "cG5n";
    mesh.sketch3d = true;
    const payload = toQueryPayload(model);
    const term = payload.components[0].terms.find((t) => t.type === "MODEL_3D");
    expect(term?.format).toBe("png");
    expect(term?.categories).toEqual({ lightfield: 1.0 });
  });

  it("never serializes an invalid model (random mutations all throw)", () => {
    let seed = 1234;
    const rand = () => {
      seed = (seed * 48271) % 2147483647;
      return seed / 2147483647;
    };
    const breakers: ((m: UiQueryModel) => void)[] = [
      (m) => (m.components = []),
      (m) => m.components[0]?.terms.forEach((t) => (t.active = false)),
      (m) => {
        const dup = makeTerm("IMAGE");
        dup.active = true;
        dup.dataB64 = "eA==";
        m.components[0]?.terms.push(dup);
      },
      (m) => {
        const t = m.components[0]?.terms.find((x) => x.active);
        if (t) t.dataB64 = null;
      },
      (m) => {
        const t = m.components[0]?.terms.find((x) => x.active);
        if (t) t.categories = { average_color: 0 };
      },
      (m) => (m.k = -3),
      (m) => {
        const t = m.components[0]?.terms.find((x) => x.active);
        if (t) t.categories = { hog: Number.NaN };
      },
    ];
    for (let trial = 0; trial < 200; trial++) {
      const model = validModel();
      breakers[Math.floor(rand() * breakers.length)](model);
      if (validateModel(model).length === 0) {
        continue; // mutation happened to be harmless; serialization may pass
      }
      expect(() => toQueryPayload(model)).toThrow(/invalid query/);
    }
  });
});
