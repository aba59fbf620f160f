/** Wires the query composer, WebSocket lifecycle, grid and refine panel. */

import { ApiClient, parseWsMessage } from "./api.js";
import { Breadcrumbs } from "./breadcrumbs.js";
import { SketchCanvas } from "./canvas.js";
import { ResultsGrid } from "./grid.js";
import {
  AUDIO_ROUTING,
  emptyModel,
  makeComponent,
  toQueryPayload,
  validateModel,
  type AudioCategory,
  type MediaType,
  type UiTerm,
} from "./model.js";
import { QueryLifecycle, nextRequestId } from "./protocol.js";
import { RefineState, debounce } from "./refine.js";

const api = new ApiClient();
const model = emptyModel();
const lifecycle = new QueryLifecycle();
const breadcrumbs = new Breadcrumbs();
const sessionId = `ui-${Math.random().toString(36).slice(2)}`;

let refineState: RefineState | null = null;
let socket: WebSocket | null = null;

const $ = <T extends HTMLElement>(selector: string): T => {
  const node = document.querySelector(selector);
  if (!node) {
    throw new Error(`missing ${selector}`);
  }
  return node as T;
};

const componentsRoot = $("#components");
const problemsBox = $("#problems");
const banner = $("#banner");
const runButton = $<HTMLButtonElement>("#run");
const backButton = $<HTMLButtonElement>("#back");
const crumbsBox = $("#crumbs");
const refineRoot = $("#refine");
const grid = new ResultsGrid($("#grid"), api, {
  onMoreLikeThis: (segmentId) => runMoreLikeThis(segmentId),
});

function fileToBase64(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onerror = () => reject(reader.error);
    reader.onload = () => resolve((reader.result as string).split(",", 2)[1]);
    reader.readAsDataURL(file);
  });
}

function termControls(term: UiTerm, componentIndex: number): HTMLElement {
  const box = document.createElement("fieldset");
  box.className = "term";

  const toggle = document.createElement("input");
  toggle.type = "checkbox";
  toggle.checked = term.active;
  toggle.addEventListener("change", () => {
    term.active = toggle.checked;
    refreshValidation();
  });
  const legend = document.createElement("legend");
  legend.appendChild(toggle);
  legend.appendChild(document.createTextNode(` ${term.type}`));
  box.appendChild(legend);

  if (term.type === "IMAGE") {
    const file = document.createElement("input");
    file.type = "file";
    file.accept = ".png,.ppm";
    file.addEventListener("change", async () => {
      if (file.files?.[0]) {
        term.dataB64 = await fileToBase64(file.files[0]);
        term.format = file.files[0].name.toLowerCase().endsWith(".ppm") ? "ppm" : "png";
        term.active = true;
        toggle.checked = true;
        refreshValidation();
      }
    });
    box.appendChild(file);

    const sketchButton = document.createElement("button");
    sketchButton.textContent = "sketch instead";
    sketchButton.addEventListener("click", (e) => {
      e.preventDefault();
      openSketchModal((pngB64) => {
        term.dataB64 = pngB64;
        term.format = "png";
        term.active = true;
        toggle.checked = true;
        refreshValidation();
      });
    });
    box.appendChild(sketchButton);
  } else if (term.type === "AUDIO") {
    const file = document.createElement("input");
    file.type = "file";
    file.accept = ".wav";
    file.addEventListener("change", async () => {
      if (file.files?.[0]) {
        term.dataB64 = await fileToBase64(file.files[0]);
        term.active = true;
        toggle.checked = true;
        refreshValidation();
      }
    });
    box.appendChild(file);

    const select = document.createElement("select");
    for (const option of ["MATCHING", "FINGERPRINT", "VERSION_ID"]) {
      const el = document.createElement("option");
      el.value = option;
      el.textContent = option.toLowerCase();
      select.appendChild(el);
    }
    select.addEventListener("change", () => {
      const category = select.value as AudioCategory;
      term.audioCategory = category;
      term.categories = Object.fromEntries(AUDIO_ROUTING[category].map((c) => [c, 1.0]));
      refreshValidation();
    });
    box.appendChild(select);
  } else {
    const file = document.createElement("input");
    file.type = "file";
    file.accept = ".obj";
    file.addEventListener("change", async () => {
      if (file.files?.[0]) {
        term.dataB64 = await fileToBase64(file.files[0]);
        term.format = "obj";
        term.sketch3d = false;
        term.active = true;
        toggle.checked = true;
        refreshValidation();
      }
    });
    box.appendChild(file);

    const sketchButton = document.createElement("button");
    sketchButton.textContent = "sketch silhouette";
    sketchButton.addEventListener("click", (e) => {
      e.preventDefault();
      openSketchModal((pngB64) => {
        term.dataB64 = pngB64;
        term.sketch3d = true;
        term.active = true;
        toggle.checked = true;
        refreshValidation();
      });
    });
    box.appendChild(sketchButton);
  }
  void componentIndex;
  return box;
}

function renderComposer(): void {
  componentsRoot.textContent = "";
  model.components.forEach((component, ci) => {
    const section = document.createElement("section");
    section.className = "component";
    const header = document.createElement("h3");
    header.textContent = `component ${ci + 1}`;
    section.appendChild(header);
    for (const term of component.terms) {
      section.appendChild(termControls(term, ci));
    }
    componentsRoot.appendChild(section);
  });
  refreshValidation();
}

function refreshValidation(): void {
  const problems = validateModel(model);
  runButton.disabled = problems.length > 0;
  problemsBox.textContent = problems.join("; ");
}

function openSketchModal(onDone: (pngB64: string) => void): void {
  const overlay = document.createElement("div");
  overlay.className = "overlay";
  const panel = document.createElement("div");
  panel.className = "sketch-panel";
  const canvasEl = document.createElement("canvas");
  panel.appendChild(canvasEl);
  const sketch = new SketchCanvas(canvasEl);

  const tools = document.createElement("div");
  const width = document.createElement("input");
  width.type = "range";
  width.min = "1";
  width.max = "24";
  width.value = String(sketch.brushWidth);
  width.addEventListener("input", () => {
    sketch.brushWidth = Number(width.value);
  });
  tools.appendChild(width);
  for (const color of ["#000000", "#d32f2f", "#1976d2", "#388e3c", "#fbc02d", "#ffffff"]) {
    const swatch = document.createElement("button");
    swatch.style.backgroundColor = color;
    swatch.className = "swatch";
    swatch.addEventListener("click", () => {
      sketch.brushColor = color;
    });
    tools.appendChild(swatch);
  }
  const clear = document.createElement("button");
  clear.textContent = "clear";
  clear.addEventListener("click", () => sketch.clear());
  tools.appendChild(clear);

  const use = document.createElement("button");
  use.textContent = "use sketch";
  use.disabled = true;
  sketch.onChange(() => {
    use.disabled = sketch.isEmpty;
  });
  use.addEventListener("click", () => {
    const data = sketch.toPngBase64();
    if (data) {
      onDone(data);
      overlay.remove();
    }
  });
  tools.appendChild(use);

  const cancel = document.createElement("button");
  cancel.textContent = "cancel";
  cancel.addEventListener("click", () => overlay.remove());
  tools.appendChild(cancel);

  panel.appendChild(tools);
  overlay.appendChild(panel);
  document.body.appendChild(overlay);
}

function buildRefinePanel(): void {
  refineRoot.textContent = "";
  const categories = new Set<string>();
  for (const component of model.components) {
    for (const term of component.terms) {
      if (term.active) {
        Object.keys(term.categories).forEach((c) => categories.add(c));
      }
    }
  }
  refineState = new RefineState([...categories].sort());

  const postRefine = debounce(async () => {
    if (!refineState) {
      return;
    }
    try {
      const { results } = await api.refine(refineState.toRequest(sessionId));
      grid.showFinal(results);
      banner.textContent = "";
    } catch (err) {
      banner.textContent = `refine failed: ${(err as Error).message} — re-run the query`;
    }
  }, 250);

  for (const category of [...categories].sort()) {
    const label = document.createElement("label");
    label.textContent = category;
    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "1";
    slider.step = "0.05";
    slider.value = "1";
    slider.addEventListener("input", () => {
      refineState?.setWeight(category, Number(slider.value));
      postRefine();
    });
    label.appendChild(slider);
    refineRoot.appendChild(label);
  }

  const filterBox = document.createElement("div");
  filterBox.className = "filters";
  for (const media of ["IMAGE", "AUDIO", "VIDEO", "MODEL_3D"] as MediaType[]) {
    const label = document.createElement("label");
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.checked = true;
    checkbox.addEventListener("change", () => {
      if (!refineState) {
        return;
      }
      const enabled = [...filterBox.querySelectorAll("input")]
        .map((el, i) => (el.checked ? (["IMAGE", "AUDIO", "VIDEO", "MODEL_3D"] as MediaType[])[i] : null))
        .filter((m): m is MediaType => m !== null);
      refineState.mediaFilter = enabled.length === 4 ? null : enabled;
      postRefine();
    });
    label.appendChild(checkbox);
    label.appendChild(document.createTextNode(media));
    filterBox.appendChild(label);
  }
  refineRoot.appendChild(filterBox);
}

function runQuery(): void {
  const payload = toQueryPayload(model, sessionId);
  const requestId = nextRequestId();
  lifecycle.start(requestId);
  grid.showProvisional([]);
  banner.textContent = "";

  if (socket && socket.readyState === WebSocket.OPEN) {
    socket.send(api.wsEnvelope("QUERY", requestId, payload));
    return;
  }
  socket = new WebSocket(api.wsUrl());
  socket.onopen = () => socket?.send(api.wsEnvelope("QUERY", requestId, payload));
  socket.onmessage = (event) => {
    const msg = parseWsMessage(event.data);
    if (!msg) {
      return;
    }
    const change = lifecycle.onMessage(msg);
    if (change === "batch") {
      grid.showProvisional(lifecycle.provisionalOrder());
    } else if (change === "final" && lifecycle.finalResults) {
      grid.showFinal(lifecycle.finalResults);
      buildRefinePanel();
    } else if (change === "failed") {
      banner.textContent = `query failed: ${lifecycle.lastError}`;
    }
  };
  socket.onclose = () => {
    if (lifecycle.phase === "running") {
      banner.textContent = "connection lost — query state preserved, run again to retry";
    }
    socket = null;
  };
}

async function runMoreLikeThis(segmentId: string): Promise<void> {
  if (lifecycle.finalResults) {
    breadcrumbs.push(segmentId, lifecycle.finalResults);
  }
  try {
    const { results } = await api.moreLikeThis(segmentId, null, model.k);
    lifecycle.finalResults = results;
    grid.showFinal(results);
    renderCrumbs();
  } catch (err) {
    banner.textContent = `more-like-this failed: ${(err as Error).message}`;
    breadcrumbs.back();
  }
}

function renderCrumbs(): void {
  crumbsBox.textContent = breadcrumbs.labels().join(" > ");
  backButton.disabled = breadcrumbs.depth === 0;
}

runButton.addEventListener("click", (e) => {
  e.preventDefault();
  runQuery();
});

backButton.addEventListener("click", () => {
  const crumb = breadcrumbs.back();
  if (crumb) {
    lifecycle.finalResults = crumb.results;
    grid.showFinal(crumb.results);
  }
  renderCrumbs();
});

$("#add-component").addEventListener("click", (e) => {
  e.preventDefault();
  model.components.push(makeComponent());
  renderComposer();
});

renderComposer();
renderCrumbs();
