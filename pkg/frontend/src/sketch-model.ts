import type { RGB, Vec2 } from "./types.js";

/** Label value for unpainted canvas pixels; matches the server's raster convention. */
export const BACKGROUND = 255;

export const CANVAS_W = 600;
export const CANVAS_H = 405;

/** Brush radius used when strokes are painted into the label raster. */
export const BRUSH_RADIUS_PX = 6;

export type Tool = "pencil" | "eraser" | "line" | "rect" | "ellipse";

export interface PaletteEntry {
  id: number;
  rgb: RGB;
  ingredient?: string;
}

export const DOMINO_PALETTE: PaletteEntry[] = [{ id: 0, rgb: [0, 0, 0] }];

export const BENTO_PALETTE: PaletteEntry[] = [
  { id: 0, rgb: [0, 160, 0], ingredient: "broccoli" },
  { id: 1, rgb: [250, 210, 0], ingredient: "fried egg" },
  { id: 2, rgb: [255, 130, 0], ingredient: "sausage" },
  { id: 3, rgb: [255, 105, 180], ingredient: "crab stick" },
];

export interface CommittedStroke {
  color: number;
  pts: Vec2[];
}

export interface SketchDocumentWire {
  canvas: { w: number; h: number };
  palette: { id: number; rgb: RGB; ingredient?: string }[];
  strokes: { color: number; pts: Vec2[] }[];
  raster?: string; // base64 of raw row-major u8 labels
}

function b64encode(bytes: Uint8Array): string {
  if (typeof Buffer !== "undefined") return Buffer.from(bytes).toString("base64");
  let s = "";
  for (let i = 0; i < bytes.length; i += 0x8000) {
    s += String.fromCharCode(...bytes.subarray(i, i + 0x8000));
  }
  return btoa(s);
}

function b64decode(text: string): Uint8Array {
  if (typeof Buffer !== "undefined") return new Uint8Array(Buffer.from(text, "base64"));
  const raw = atob(text);
  const out = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) out[i] = raw.charCodeAt(i);
  return out;
}

/**
 * The drawing surface model: committed strokes plus a label raster the tools
 * paint into. Pure data + reducers, no DOM; the browser layer only feeds
 * pointer events in and paints the state out.
 *
 * Strokes are the source of truth for line-following tasks; the raster is the
 * source of truth for region tasks (it already contains the strokes, shapes,
 * and eraser passes).
 */
export class CanvasState {
  readonly w: number;
  readonly h: number;
  palette: PaletteEntry[];
  tool: Tool = "pencil";
  activeColor: number;
  strokes: CommittedStroke[] = [];
  labels: Uint8Array;
  /** In-progress pointer points, canvas px. Empty when no gesture is active. */
  buffer: Vec2[] = [];

  constructor(palette: PaletteEntry[], w = CANVAS_W, h = CANVAS_H) {
    if (!palette.length) throw new Error("palette must not be empty");
    this.palette = palette;
    this.w = w;
    this.h = h;
    this.activeColor = palette[0].id;
    this.labels = new Uint8Array(w * h).fill(BACKGROUND);
  }

  setTool(tool: Tool): void {
    this.tool = tool;
    this.buffer = [];
  }

  /** Colors are restricted to the task palette; unknown ids are a bug upstream. */
  setColor(id: number): void {
    if (!this.palette.some((p) => p.id === id)) {
      throw new Error(`color ${id} is not in the task palette`);
    }
    this.activeColor = id;
  }

  isEmpty(): boolean {
    if (this.strokes.length) return false;
    return this.labels.every((v) => v === BACKGROUND);
  }

  pointerDown(x: number, y: number): void {
    this.buffer = [[x, y]];
  }

  pointerMove(x: number, y: number): void {
    if (!this.buffer.length) return;
    if (this.tool === "pencil" || this.tool === "eraser") {
      this.buffer.push([x, y]);
    } else {
      // two-point gestures track only the latest endpoint
      this.buffer = [this.buffer[0], [x, y]];
    }
  }

  pointerUp(x: number, y: number): void {
    if (!this.buffer.length) return;
    this.pointerMove(x, y);
    const pts = this.buffer;
    this.buffer = [];
    switch (this.tool) {
      case "pencil":
        if (pts.length >= 2) this.commitStroke(pts);
        break;
      case "line":
        if (pts.length >= 2) this.commitStroke([pts[0], pts[pts.length - 1]]);
        break;
      case "eraser":
        this.erasePath(pts);
        break;
      case "rect":
        this.fillRect(pts[0], pts[pts.length - 1]);
        break;
      case "ellipse":
        this.fillEllipse(pts[0], pts[pts.length - 1]);
        break;
    }
  }

  private commitStroke(pts: Vec2[]): void {
    const stroke = { color: this.activeColor, pts: pts.map((p) => [p[0], p[1]] as Vec2) };
    this.strokes.push(stroke);
    this.paintPolyline(pts, this.activeColor, BRUSH_RADIUS_PX);
  }

  /** Drops strokes the path touches and paints background along it. */
  private erasePath(pts: Vec2[], radius = BRUSH_RADIUS_PX * 2): void {
    this.strokes = this.strokes.filter(
      (s) => !pts.some((p) => polylineDistance(s.pts, p) <= radius),
    );
    this.paintPolyline(pts, BACKGROUND, radius);
  }

  private fillRect(a: Vec2, b: Vec2): void {
    const x0 = Math.max(0, Math.floor(Math.min(a[0], b[0])));
    const x1 = Math.min(this.w - 1, Math.ceil(Math.max(a[0], b[0])));
    const y0 = Math.max(0, Math.floor(Math.min(a[1], b[1])));
    const y1 = Math.min(this.h - 1, Math.ceil(Math.max(a[1], b[1])));
    for (let y = y0; y <= y1; y++) {
      this.labels.fill(this.activeColor, y * this.w + x0, y * this.w + x1 + 1);
    }
  }

  private fillEllipse(a: Vec2, b: Vec2): void {
    const cx = (a[0] + b[0]) / 2;
    const cy = (a[1] + b[1]) / 2;
    const rx = Math.abs(b[0] - a[0]) / 2;
    const ry = Math.abs(b[1] - a[1]) / 2;
    if (rx < 1 || ry < 1) return;
    const y0 = Math.max(0, Math.floor(cy - ry));
    const y1 = Math.min(this.h - 1, Math.ceil(cy + ry));
    for (let y = y0; y <= y1; y++) {
      const t = (y - cy) / ry;
      const half = rx * Math.sqrt(Math.max(0, 1 - t * t));
      const x0 = Math.max(0, Math.round(cx - half));
      const x1 = Math.min(this.w - 1, Math.round(cx + half));
      if (x0 <= x1) this.labels.fill(this.activeColor, y * this.w + x0, y * this.w + x1 + 1);
    }
  }

  private paintPolyline(pts: Vec2[], label: number, radius: number): void {
    const step = Math.max(1, radius / 2);
    const stamp = (cx: number, cy: number) => {
      const r = Math.ceil(radius);
      for (let dy = -r; dy <= r; dy++) {
        for (let dx = -r; dx <= r; dx++) {
          if (dx * dx + dy * dy > radius * radius) continue;
          const x = Math.round(cx) + dx;
          const y = Math.round(cy) + dy;
          if (x >= 0 && x < this.w && y >= 0 && y < this.h) this.labels[y * this.w + x] = label;
        }
      }
    };
    stamp(pts[0][0], pts[0][1]);
    for (let i = 1; i < pts.length; i++) {
      const [ax, ay] = pts[i - 1];
      const [bx, by] = pts[i];
      const len = Math.hypot(bx - ax, by - ay);
      const n = Math.max(1, Math.ceil(len / step));
      for (let k = 1; k <= n; k++) {
        stamp(ax + ((bx - ax) * k) / n, ay + ((by - ay) * k) / n);
      }
    }
  }

  /**
   * Serialize to the server's sketch document. Line tasks send strokes;
   * region tasks send the raster (which already reflects every edit).
   */
  toDocument(task: "domino" | "bento"): SketchDocumentWire {
    const doc: SketchDocumentWire = {
      canvas: { w: this.w, h: this.h },
      palette: this.palette.map((p) =>
        p.ingredient === undefined
          ? { id: p.id, rgb: p.rgb }
          : { id: p.id, rgb: p.rgb, ingredient: p.ingredient },
      ),
      strokes: this.strokes.map((s) => ({ color: s.color, pts: s.pts.map((p) => [...p] as Vec2) })),
    };
    if (task === "bento") doc.raster = b64encode(this.labels);
    return doc;
  }

  /** Inverse of toDocument: reproduces strokes and raster exactly. */
  static fromDocument(doc: SketchDocumentWire): CanvasState {
    const palette = doc.palette.map((p) => ({
      id: p.id,
      rgb: p.rgb,
      ...(p.ingredient !== undefined ? { ingredient: p.ingredient } : {}),
    }));
    const state = new CanvasState(palette, doc.canvas.w, doc.canvas.h);
    state.strokes = (doc.strokes ?? []).map((s) => ({
      color: s.color,
      pts: s.pts.map((p) => [p[0], p[1]] as Vec2),
    }));
    if (doc.raster !== undefined) {
      const bytes = b64decode(doc.raster);
      if (bytes.length !== state.w * state.h) {
        throw new Error(`raster is ${bytes.length} bytes, canvas needs ${state.w * state.h}`);
      }
      state.labels = bytes;
    } else {
      for (const s of state.strokes) state.paintPolyline(s.pts, s.color, BRUSH_RADIUS_PX);
    }
    return state;
  }
}

function pointSegmentDistance(p: Vec2, a: Vec2, b: Vec2): number {
  const vx = b[0] - a[0];
  const vy = b[1] - a[1];
  const wx = p[0] - a[0];
  const wy = p[1] - a[1];
  const c1 = vx * wx + vy * wy;
  if (c1 <= 0) return Math.hypot(wx, wy);
  const c2 = vx * vx + vy * vy;
  if (c2 <= c1) return Math.hypot(p[0] - b[0], p[1] - b[1]);
  const t = c1 / c2;
  return Math.hypot(p[0] - (a[0] + t * vx), p[1] - (a[1] + t * vy));
}

export function polylineDistance(pts: Vec2[], p: Vec2): number {
  if (pts.length === 1) return Math.hypot(p[0] - pts[0][0], p[1] - pts[0][1]);
  let best = Infinity;
  for (let i = 1; i < pts.length; i++) {
    best = Math.min(best, pointSegmentDistance(p, pts[i - 1], pts[i]));
  }
  return best;
}

export function polylineLength(pts: Vec2[]): number {
  let total = 0;
  for (let i = 1; i < pts.length; i++) {
    total += Math.hypot(pts[i][0] - pts[i - 1][0], pts[i][1] - pts[i - 1][1]);
  }
  return total;
}

export interface StrokeAnnotation {
  kind: string;
  value: number;
  limit: number;
  /** Fractions of total stroke length bracketing the offending span. */
  from: number;
  to: number;
}

/**
 * Map planner violations (indexed by target along the stroke) back to spans
 * of the stroke so they can be highlighted inline.
 */
export function annotateViolations(
  pts: Vec2[],
  violations: { kind: string; index: number; value: number; limit: number }[],
  spacingMm: number,
  pxPerMm = 1,
): StrokeAnnotation[] {
  const lengthMm = polylineLength(pts) / pxPerMm;
  if (lengthMm <= 0) return [];
  return violations.map((v) => {
    const at = (v.index * spacingMm) / lengthMm;
    const halfSpan = spacingMm / lengthMm;
    return {
      kind: v.kind,
      value: v.value,
      limit: v.limit,
      from: Math.max(0, at - halfSpan),
      to: Math.min(1, at + halfSpan),
    };
  });
}
