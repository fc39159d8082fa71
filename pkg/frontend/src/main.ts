/**
 * Browser wiring. Everything stateful lives in the models
 * (sketch-model / workspace-view / api-client); this file only moves pixels
 * and pointer events between them and the DOM.
 */
import { InfeasibleStrokeError, StreamHandle, StudioClient } from "./api-client.js";
import {
  annotateViolations,
  BACKGROUND,
  BENTO_PALETTE,
  CanvasState,
  DOMINO_PALETTE,
  polylineLength,
  type StrokeAnnotation,
  type Tool,
} from "./sketch-model.js";
import type { PlanWire, Snapshot } from "./types.js";
import { planShapes, SpriteStore, ViewState, type Sprite } from "./workspace-view.js";

const WORKSPACE_MM: [number, number] = [572, 321];
const VIEW_SCALE = 1.5; // board px per workspace mm

const $ = <T extends HTMLElement>(id: string): T => {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing #${id}`);
  return el as T;
};

const taskSel = $<HTMLSelectElement>("task");
const seedInput = $<HTMLInputElement>("seed");
const sigmaInput = $<HTMLInputElement>("sigma");
const connectBtn = $<HTMLButtonElement>("connect");
const submitBtn = $<HTMLButtonElement>("submit");
const clearBtn = $<HTMLButtonElement>("clear");
const addBtn = $<HTMLButtonElement>("add-object");
const stepBtn = $<HTMLButtonElement>("step");
const markerBtn = $<HTMLButtonElement>("marker-mode");
const statusEl = $<HTMLDivElement>("status");
const diagEl = $<HTMLDivElement>("diagnostics");
const toolbarEl = $<HTMLDivElement>("toolbar");
const paletteEl = $<HTMLDivElement>("palette");
const sketchCanvas = $<HTMLCanvasElement>("sketch");
const planCanvas = $<HTMLCanvasElement>("plan-layer");
const spriteCanvas = $<HTMLCanvasElement>("sprite-layer");
const overlayImg = $<HTMLImageElement>("overlay-layer");
const boardEl = $<HTMLDivElement>("board");

let canvasState = new CanvasState(DOMINO_PALETTE);
let client: StudioClient | null = null;
let stream: StreamHandle | null = null;
let sessionId: string | null = null;
let plan: PlanWire | null = null;
const view = new ViewState();
const sprites = new SpriteStore();
let annotations: StrokeAnnotation[] = [];
let markerMode = false;
let dragging: { sprite: Sprite; dx: number; dy: number } | null = null;
let selected: Sprite | null = null;

// ---- sketch pad ----

const TOOLS: Tool[] = ["pencil", "eraser", "line", "rect", "ellipse"];

function buildToolbar(): void {
  toolbarEl.innerHTML = "";
  for (const tool of TOOLS) {
    const b = document.createElement("button");
    b.textContent = tool;
    b.className = tool === canvasState.tool ? "active" : "";
    b.onclick = () => {
      canvasState.setTool(tool);
      buildToolbar();
    };
    toolbarEl.appendChild(b);
  }
}

function buildPalette(): void {
  paletteEl.innerHTML = "";
  for (const entry of canvasState.palette) {
    const b = document.createElement("button");
    b.title = entry.ingredient ?? `color ${entry.id}`;
    b.style.background = `rgb(${entry.rgb.join(",")})`;
    b.className = entry.id === canvasState.activeColor ? "swatch active" : "swatch";
    b.onclick = () => {
      canvasState.setColor(entry.id);
      buildPalette();
    };
    paletteEl.appendChild(b);
  }
}

function repaintSketch(): void {
  const ctx = sketchCanvas.getContext("2d")!;
  const { w, h, labels, palette } = canvasState;
  const img = ctx.createImageData(w, h);
  const colors = new Map(palette.map((p) => [p.id, p.rgb]));
  for (let i = 0; i < labels.length; i++) {
    const label = labels[i];
    const rgb = label === BACKGROUND ? [255, 255, 255] : (colors.get(label) ?? [200, 200, 200]);
    img.data[i * 4] = rgb[0];
    img.data[i * 4 + 1] = rgb[1];
    img.data[i * 4 + 2] = rgb[2];
    img.data[i * 4 + 3] = 255;
  }
  ctx.putImageData(img, 0, 0);
  if (canvasState.buffer.length > 1) {
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.moveTo(canvasState.buffer[0][0], canvasState.buffer[0][1]);
    for (const [x, y] of canvasState.buffer) ctx.lineTo(x, y);
    ctx.stroke();
  }
  drawAnnotations(ctx);
}

function drawAnnotations(ctx: CanvasRenderingContext2D): void {
  if (!annotations.length || !canvasState.strokes.length) return;
  const pts = canvasState.strokes[0].pts;
  const total = polylineLength(pts);
  ctx.lineWidth = 4;
  ctx.strokeStyle = "rgba(255,160,0,0.9)";
  for (const a of annotations) {
    ctx.beginPath();
    let walked = 0;
    let started = false;
    for (let i = 1; i < pts.length; i++) {
      const seg = Math.hypot(pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]);
      const f0 = walked / total;
      const f1 = (walked + seg) / total;
      if (f1 >= a.from && f0 <= a.to) {
        if (!started) {
          ctx.moveTo(pts[i - 1][0], pts[i - 1][1]);
          started = true;
        }
        ctx.lineTo(pts[i][0], pts[i][1]);
      }
      walked += seg;
    }
    ctx.stroke();
  }
  ctx.lineWidth = 1;
}

function sketchPos(ev: PointerEvent): [number, number] {
  const r = sketchCanvas.getBoundingClientRect();
  return [
    ((ev.clientX - r.left) / r.width) * canvasState.w,
    ((ev.clientY - r.top) / r.height) * canvasState.h,
  ];
}

sketchCanvas.onpointerdown = (ev) => {
  sketchCanvas.setPointerCapture(ev.pointerId);
  canvasState.pointerDown(...sketchPos(ev));
  repaintSketch();
};
sketchCanvas.onpointermove = (ev) => {
  if (!canvasState.buffer.length) return;
  canvasState.pointerMove(...sketchPos(ev));
  repaintSketch();
};
sketchCanvas.onpointerup = (ev) => {
  canvasState.pointerUp(...sketchPos(ev));
  annotations = [];
  repaintSketch();
  submitBtn.disabled = canvasState.isEmpty() || sessionId === null;
};

clearBtn.onclick = () => {
  canvasState = new CanvasState(canvasState.palette, canvasState.w, canvasState.h);
  annotations = [];
  diagEl.textContent = "";
  repaintSketch();
  submitBtn.disabled = true;
};

// ---- board ----

function mm2px(mm: number): number {
  return mm * VIEW_SCALE;
}

function boardPos(ev: PointerEvent): [number, number] {
  const r = spriteCanvas.getBoundingClientRect();
  return [
    ((ev.clientX - r.left) / r.width) * WORKSPACE_MM[0],
    ((ev.clientY - r.top) / r.height) * WORKSPACE_MM[1],
  ];
}

function drawPlanLayer(): void {
  const ctx = planCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, planCanvas.width, planCanvas.height);
  if (!plan) return;
  for (const shape of planShapes(plan)) {
    if (shape.kind === "rect-outline") {
      ctx.save();
      ctx.translate(mm2px(shape.cx), mm2px(shape.cy));
      ctx.rotate(shape.theta);
      ctx.strokeStyle = `rgb(${shape.color.join(",")})`;
      ctx.lineWidth = 2;
      ctx.strokeRect(mm2px(-shape.w / 2), mm2px(-shape.h / 2), mm2px(shape.w), mm2px(shape.h));
      ctx.restore();
    } else if (shape.kind === "box-outline") {
      ctx.strokeStyle = `rgb(${shape.color.join(",")})`;
      ctx.lineWidth = 2;
      ctx.strokeRect(mm2px(shape.x), mm2px(shape.y), mm2px(shape.w), mm2px(shape.h));
    } else {
      const off = document.createElement("canvas");
      off.width = shape.cols;
      off.height = shape.rows;
      const pixels = new Uint8ClampedArray(shape.rgba); // fresh ArrayBuffer for ImageData
      off.getContext("2d")!.putImageData(new ImageData(pixels, shape.cols, shape.rows), 0, 0);
      ctx.imageSmoothingEnabled = false;
      ctx.globalAlpha = 0.5; // plan preview sits under the authoritative overlay
      ctx.drawImage(off, 0, 0, planCanvas.width, planCanvas.height);
      ctx.globalAlpha = 1;
    }
  }
}

function drawSprites(): void {
  const ctx = spriteCanvas.getContext("2d")!;
  ctx.clearRect(0, 0, spriteCanvas.width, spriteCanvas.height);
  for (const s of sprites.sprites) {
    ctx.save();
    ctx.translate(mm2px(s.x), mm2px(s.y));
    ctx.rotate(s.theta);
    ctx.setLineDash(s.serverHandle === null ? [4, 3] : []);
    ctx.strokeStyle = s === selected ? "#ff8c00" : "#555";
    ctx.lineWidth = 1.5;
    ctx.strokeRect(mm2px(-s.w / 2), mm2px(-s.t / 2), mm2px(s.w), mm2px(s.t));
    ctx.restore();
  }
}

spriteCanvas.onpointerdown = async (ev) => {
  const [x, y] = boardPos(ev);
  if (markerMode && stream) {
    const detected = await stream.marker([x, y]);
    setStatus(
      detected
        ? `marker at (${detected.workspace[0].toFixed(1)}, ${detected.workspace[1].toFixed(1)}) mm`
        : "marker not detected",
    );
    return;
  }
  let best: Sprite | null = null;
  let bestD = 25; // mm grab radius
  for (const s of sprites.sprites) {
    const d = Math.hypot(s.x - x, s.y - y);
    if (d < bestD) {
      best = s;
      bestD = d;
    }
  }
  if (best) {
    dragging = { sprite: best, dx: best.x - x, dy: best.y - y };
    selected = best;
    spriteCanvas.setPointerCapture(ev.pointerId);
    drawSprites();
  }
};

spriteCanvas.onpointermove = (ev) => {
  if (!dragging) return;
  const [x, y] = boardPos(ev);
  sprites.moveTo(dragging.sprite.localId, x + dragging.dx, y + dragging.dy);
  drawSprites();
};

spriteCanvas.onpointerup = async () => {
  if (!dragging || !stream) {
    dragging = null;
    return;
  }
  const s = dragging.sprite;
  dragging = null;
  try {
    if (s.serverHandle !== null) await stream.remove(s.serverHandle);
    const handle = await stream.place(
      { x: s.x, y: s.y, theta: s.theta, w: s.w, t: s.t },
      s.height,
    );
    sprites.bindHandle(s.localId, handle);
    drawSprites();
    await stream.requestFrame();
  } catch (err) {
    setStatus(`placement failed: ${(err as Error).message}`);
  }
};

window.addEventListener("keydown", (ev) => {
  if (ev.key.toLowerCase() === "r" && selected) {
    sprites.moveTo(selected.localId, selected.x, selected.y, selected.theta + Math.PI / 12);
    drawSprites();
  }
});

addBtn.onclick = () => {
  const domino = taskSel.value === "domino";
  const p = plan && plan.task === "domino" ? plan.params : null;
  const sprite = sprites.add({
    kind: domino ? "block" : "ingredient",
    x: WORKSPACE_MM[0] / 2,
    y: WORKSPACE_MM[1] / 2,
    theta: domino ? Math.PI / 2 : 0,
    w: p ? p.width : 60,
    t: p ? p.thickness : 30,
    height: p ? p.height : 20,
  });
  selected = sprite;
  drawSprites();
};

stepBtn.onclick = async () => {
  if (stream) await stream.requestFrame();
};

markerBtn.onclick = () => {
  markerMode = !markerMode;
  markerBtn.className = markerMode ? "active" : "";
  if (!markerMode && stream) void stream.marker(null);
};

// ---- session ----

function setStatus(extra?: string): void {
  const snap: Snapshot | null = view.snapshot;
  const parts: string[] = [];
  if (snap) {
    parts.push(`phase ${snap.phase}`, `frames ${snap.frames.processed}`);
    const g = snap.guidance;
    if (g && "matched_count" in g) parts.push(`matched ${g.matched_count}/${g.targets.length}`);
    if (g && "all_complete" in g) parts.push(`spill ${(g.spill * 100).toFixed(1)}%`);
  }
  if (stream?.stale) parts.push(`STALE (${stream.queuedOps()} queued)`);
  if (extra) parts.push(extra);
  statusEl.textContent = parts.join(" | ") || "not connected";
}

function applyFrameToDom(): void {
  const url = view.overlayDataUrl();
  if (url) overlayImg.src = url;
  setStatus();
}

connectBtn.onclick = async () => {
  const task = taskSel.value as "domino" | "bento";
  client = new StudioClient({ baseUrl: location.origin.replace(/:\d+$/, ":8800") });
  canvasState = new CanvasState(task === "domino" ? DOMINO_PALETTE : BENTO_PALETTE);
  buildPalette();
  repaintSketch();
  try {
    const created = await client.createSession({
      task,
      source: "simulator",
      seed: Number(seedInput.value) || 0,
      noise_sigma_mm: Number(sigmaInput.value),
    });
    sessionId = created.id;
    stream = await client.connect(sessionId);
    view.applyHello(stream.hello!);
    stream.onFrame((msg) => {
      view.applyFrame(msg);
      applyFrameToDom();
    });
    stream.onClose(() => setStatus("stream closed"));
    setStatus(`session ${sessionId}`);
    submitBtn.disabled = canvasState.isEmpty();
  } catch (err) {
    setStatus(`connect failed: ${(err as Error).message}`);
  }
};

submitBtn.onclick = async () => {
  if (!client || !sessionId || !stream) return;
  diagEl.textContent = "";
  annotations = [];
  try {
    plan = await client.submitSketch(sessionId, canvasState.toDocument(taskSel.value as "domino" | "bento"));
    drawPlanLayer();
    // sweep the empty desk once so the baseline never contains scene objects
    if (sprites.sprites.length === 0) await stream.requestFrame();
    setStatus("plan ready");
  } catch (err) {
    if (err instanceof InfeasibleStrokeError && canvasState.strokes.length) {
      const spacing =
        plan && plan.task === "domino" ? plan.params.center_spacing : 28;
      annotations = annotateViolations(
        canvasState.strokes[0].pts,
        err.report.violations,
        spacing,
      );
      diagEl.textContent = err.report.violations
        .map((v) => `${v.kind} at block ${v.index}: ${v.value.toFixed(1)} (limit ${v.limit})`)
        .join("\n");
      repaintSketch();
    } else {
      diagEl.textContent = (err as Error).message;
    }
  }
};

// ---- boot ----

function sizeBoard(): void {
  const w = Math.round(mm2px(WORKSPACE_MM[0]));
  const h = Math.round(mm2px(WORKSPACE_MM[1]));
  for (const c of [planCanvas, spriteCanvas]) {
    c.width = w;
    c.height = h;
  }
  boardEl.style.width = `${w}px`;
  boardEl.style.height = `${h}px`;
}

sizeBoard();
buildToolbar();
buildPalette();
repaintSketch();
setStatus();
