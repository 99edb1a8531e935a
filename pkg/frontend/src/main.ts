// Browser wiring: pointer events, gallery, sliders, and the synthesize loop.
// All model output comes from the service; this file only renders and routes.

import { ServiceClient, ServiceError } from "./api.js";
import { rasterizeStrokes } from "./raster.js";
import { SessionStore } from "./session.js";
import { Point, ReferenceEntry, Stroke } from "./types.js";

const SERVICE_URL = (window as unknown as { SKETCHSYNTH_URL?: string }).SKETCHSYNTH_URL ?? "";
const CANVAS_SIZE = 64;
const DISPLAY_SCALE = 6;

const client = new ServiceClient(SERVICE_URL);
const store = new SessionStore(CANVAS_SIZE);

document.body.innerHTML = `
  <h1>sketchsynth sketchpad</h1>
  <div id="banner" style="display:none;color:#a33;margin:4px 0;"></div>
  <div style="display:flex;gap:16px;align-items:flex-start;">
    <div>
      <canvas id="pad" width="${CANVAS_SIZE * DISPLAY_SCALE}" height="${CANVAS_SIZE * DISPLAY_SCALE}"
              style="border:1px solid #444;image-rendering:pixelated;cursor:crosshair;"></canvas>
      <div style="margin-top:6px;display:flex;gap:6px;flex-wrap:wrap;">
        <button id="penBtn">Pen</button>
        <button id="eraserBtn">Eraser</button>
        <label>Width <input id="widthSlider" type="range" min="1" max="7" step="2" value="1"></label>
        <button id="undoBtn">Undo</button>
        <button id="redoBtn">Redo</button>
        <button id="clearBtn">Clear</button>
      </div>
      <div style="margin-top:6px;display:flex;gap:6px;flex-wrap:wrap;">
        <label><input id="uploadInput" type="file" accept="image/*">Upload photo</label>
        <button id="exportSessionBtn">Export session</button>
        <label><input id="importInput" type="file" accept="application/json">Import session</label>
      </div>
    </div>
    <div>
      <div id="gallery" style="display:flex;gap:4px;flex-wrap:wrap;max-width:300px;"></div>
      <div style="margin-top:6px;">
        <label><input id="blendToggle" type="checkbox">Blend two references</label>
        <label>γ <input id="gammaSlider" type="range" min="0" max="1" step="0.05" value="0.5" disabled></label>
        <span id="gammaValue">0.50</span>
      </div>
      <div style="margin-top:6px;">
        <button id="synthBtn">Synthesize</button>
        <label><input id="autoToggle" type="checkbox">Auto-synthesize</label>
        <button id="exportPngBtn" disabled>Export PNG</button>
      </div>
      <div style="margin-top:8px;">
        <img id="result" width="${CANVAS_SIZE * DISPLAY_SCALE}" height="${CANVAS_SIZE * DISPLAY_SCALE}"
             style="border:1px solid #444;image-rendering:pixelated;">
      </div>
    </div>
  </div>
`;

const canvas = document.getElementById("pad") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const banner = document.getElementById("banner") as HTMLDivElement;
const resultImg = document.getElementById("result") as HTMLImageElement;
const gammaSlider = document.getElementById("gammaSlider") as HTMLInputElement;
const gammaValue = document.getElementById("gammaValue") as HTMLSpanElement;
const blendToggle = document.getElementById("blendToggle") as HTMLInputElement;
const widthSlider = document.getElementById("widthSlider") as HTMLInputElement;
const autoToggle = document.getElementById("autoToggle") as HTMLInputElement;
const exportPngBtn = document.getElementById("exportPngBtn") as HTMLButtonElement;

let tool: "add" | "erase" = "add";
let drawing: Point[] | null = null;
let selectedRefs: string[] = [];
let references: ReferenceEntry[] = [];
let lastResultB64: string | null = null;
let autoTimer: number | null = null;

function showBanner(message: string): void {
  banner.textContent = message;
  banner.style.display = "block";
  window.setTimeout(() => (banner.style.display = "none"), 4000);
}

function redraw(): void {
  const state = store.current();
  const gray = rasterizeStrokes(state);
  const image = ctx.createImageData(CANVAS_SIZE, CANVAS_SIZE);
  for (let i = 0; i < gray.length; i++) {
    image.data[4 * i] = gray[i];
    image.data[4 * i + 1] = gray[i];
    image.data[4 * i + 2] = gray[i];
    image.data[4 * i + 3] = 255;
  }
  const off = new OffscreenCanvas(CANVAS_SIZE, CANVAS_SIZE);
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function canvasPoint(ev: PointerEvent): Point {
  const rect = canvas.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * CANVAS_SIZE,
    y: ((ev.clientY - rect.top) / rect.height) * CANVAS_SIZE,
  };
}

canvas.addEventListener("pointerdown", (ev) => {
  drawing = [canvasPoint(ev)];
  canvas.setPointerCapture(ev.pointerId);
});

canvas.addEventListener("pointermove", (ev) => {
  if (!drawing) return;
  drawing.push(canvasPoint(ev));
  const preview: Stroke = { op: tool, points: drawing, width: Number(widthSlider.value) };
  const state = store.current();
  state.strokes.push(preview);
  const gray = rasterizeStrokes(state);
  const image = ctx.createImageData(CANVAS_SIZE, CANVAS_SIZE);
  for (let i = 0; i < gray.length; i++) {
    image.data[4 * i] = gray[i];
    image.data[4 * i + 1] = gray[i];
    image.data[4 * i + 2] = gray[i];
    image.data[4 * i + 3] = 255;
  }
  const off = new OffscreenCanvas(CANVAS_SIZE, CANVAS_SIZE);
  off.getContext("2d")!.putImageData(image, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
});

canvas.addEventListener("pointerup", () => {
  if (!drawing) return;
  store.addStroke({ op: tool, points: drawing, width: Number(widthSlider.value) });
  drawing = null;
  redraw();
  maybeAutoSynthesize();
});

document.getElementById("penBtn")!.addEventListener("click", () => (tool = "add"));
document.getElementById("eraserBtn")!.addEventListener("click", () => (tool = "erase"));
document.getElementById("undoBtn")!.addEventListener("click", () => {
  store.undo();
  redraw();
});
document.getElementById("redoBtn")!.addEventListener("click", () => {
  store.redo();
  redraw();
});
document.getElementById("clearBtn")!.addEventListener("click", () => {
  store.clearStrokes();
  redraw();
});

// --- reference gallery ---------------------------------------------------------

function renderGallery(): void {
  const holder = document.getElementById("gallery")!;
  holder.innerHTML = "";
  for (const ref of references) {
    const img = document.createElement("img");
    img.src = `data:image/png;base64,${ref.thumbnail_png_b64}`;
    img.width = 48;
    img.height = 48;
    img.style.cursor = "pointer";
    img.style.border = selectedRefs.includes(ref.id) ? "2px solid #06c" : "2px solid transparent";
    img.title = ref.id;
    img.addEventListener("click", () => pickReference(ref.id));
    holder.appendChild(img);
  }
}

function pickReference(id: string): void {
  if (blendToggle.checked) {
    selectedRefs = [...selectedRefs.filter((r) => r !== id), id].slice(-2);
    if (selectedRefs.length === 2) {
      store.pickBlend(selectedRefs[0], selectedRefs[1], Number(gammaSlider.value));
    }
  } else {
    selectedRefs = [id];
    store.pickReference(id);
  }
  renderGallery();
  maybeAutoSynthesize();
}

blendToggle.addEventListener("change", () => {
  gammaSlider.disabled = !blendToggle.checked;
  selectedRefs = selectedRefs.slice(-1);
  renderGallery();
});

gammaSlider.addEventListener("input", () => {
  gammaValue.textContent = Number(gammaSlider.value).toFixed(2);
  const state = store.current();
  if (state.style.blend) {
    store.setGamma(Number(gammaSlider.value));
    maybeAutoSynthesize();
  }
});

// --- photo upload → standardized background -------------------------------------

(document.getElementById("uploadInput") as HTMLInputElement).addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  const b64 = await fileToBase64(file);
  try {
    const edgeB64 = await client.standardize(b64);
    const gray = await decodeGray(edgeB64);
    store.setBackground(edgeB64, gray);
    redraw();
  } catch (error) {
    showBanner(`standardize failed: ${(error as Error).message}`);
  }
});

function fileToBase64(file: File): Promise<string> {
  return new Promise((resolve, reject) => {
    const reader = new FileReader();
    reader.onload = () => resolve((reader.result as string).split(",", 2)[1]);
    reader.onerror = reject;
    reader.readAsDataURL(file);
  });
}

async function decodeGray(pngB64: string): Promise<number[]> {
  const img = new Image();
  img.src = `data:image/png;base64,${pngB64}`;
  await img.decode();
  const off = new OffscreenCanvas(CANVAS_SIZE, CANVAS_SIZE);
  const octx = off.getContext("2d")!;
  octx.drawImage(img, 0, 0, CANVAS_SIZE, CANVAS_SIZE);
  const data = octx.getImageData(0, 0, CANVAS_SIZE, CANVAS_SIZE).data;
  const gray: number[] = new Array(CANVAS_SIZE * CANVAS_SIZE);
  for (let i = 0; i < gray.length; i++) gray[i] = data[4 * i];
  return gray;
}

// --- synthesis --------------------------------------------------------------------

async function synthesize(): Promise<void> {
  try {
    const result = await client.synthesize(store.current());
    lastResultB64 = result.photo_png_b64;
    resultImg.src = `data:image/png;base64,${result.photo_png_b64}`;
    exportPngBtn.disabled = false;
  } catch (error) {
    if ((error as Error).name === "AbortError") return; // superseded by a newer request
    if (error instanceof ServiceError) {
      showBanner(`${error.code}: ${error.message}`);
    } else {
      showBanner(`service unreachable: ${(error as Error).message}`);
    }
  }
}

function maybeAutoSynthesize(): void {
  if (!autoToggle.checked) return;
  if (autoTimer !== null) window.clearTimeout(autoTimer);
  autoTimer = window.setTimeout(() => void synthesize(), 400);
}

document.getElementById("synthBtn")!.addEventListener("click", () => void synthesize());

exportPngBtn.addEventListener("click", () => {
  if (!lastResultB64) return;
  const a = document.createElement("a");
  a.href = `data:image/png;base64,${lastResultB64}`;
  a.download = "synthesized.png";
  a.click();
});

// --- session export / import ---------------------------------------------------------

document.getElementById("exportSessionBtn")!.addEventListener("click", () => {
  const a = document.createElement("a");
  a.href = `data:application/json,${encodeURIComponent(store.serialize())}`;
  a.download = "session.json";
  a.click();
});

(document.getElementById("importInput") as HTMLInputElement).addEventListener("change", async (ev) => {
  const file = (ev.target as HTMLInputElement).files?.[0];
  if (!file) return;
  try {
    const restored = SessionStore.restore(await file.text());
    const state = restored.current();
    store.setBackground(state.backgroundEdgeB64, state.backgroundGray);
    store.clearStrokes();
    for (const stroke of state.strokes) store.addStroke(stroke);
    if (state.style.blend) {
      store.pickBlend(state.style.blend.ref1Id, state.style.blend.ref2Id, state.style.blend.gamma);
    } else if (state.style.referenceId) {
      store.pickReference(state.style.referenceId);
    }
    redraw();
  } catch (error) {
    showBanner(`import failed: ${(error as Error).message}`);
  }
});

// --- boot -------------------------------------------------------------------------------

async function boot(): Promise<void> {
  redraw();
  try {
    const health = await client.health();
    if (health.model_stage === "stage1") {
      showBanner("model is not fine-tuned; synthesis quality may be poor");
    }
    references = await client.references();
    renderGallery();
  } catch {
    showBanner("service unreachable; retrying in 3s");
    window.setTimeout(() => void boot(), 3000);
  }
}

void boot();
