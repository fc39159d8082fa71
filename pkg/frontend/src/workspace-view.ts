import { rleDecode } from "./rle.js";
import type { FrameMessage, PlanWire, RGB, Snapshot } from "./types.js";

export const WHITE: RGB = [255, 255, 255];

/** Drawable primitives in workspace mm; the browser layer scales to view px. */
export type PlanShape =
  | {
      kind: "rect-outline";
      cx: number;
      cy: number;
      w: number;
      h: number;
      theta: number;
      color: RGB;
    }
  | {
      kind: "box-outline";
      x: number;
      y: number;
      w: number;
      h: number;
      color: RGB;
    }
  | {
      // camera-space RGBA raster to stretch across the board, same mapping
      // as the overlay image
      kind: "mask-image";
      rows: number;
      cols: number;
      rgba: Uint8ClampedArray;
    };

/**
 * Build the static plan layer. Domino plans become one white outline per
 * target; bento plans become the box outline plus a composite of the region
 * masks in their palette colors. Colors come from the server's plan verbatim.
 */
export function planShapes(plan: PlanWire): PlanShape[] {
  if (plan.task === "domino") {
    return plan.targets.map((t) => ({
      kind: "rect-outline" as const,
      cx: t.x,
      cy: t.y,
      w: plan.params.width,
      h: plan.params.thickness,
      theta: t.theta,
      color: WHITE,
    }));
  }
  const shapes: PlanShape[] = [
    {
      kind: "box-outline",
      x: plan.params.box_origin[0],
      y: plan.params.box_origin[1],
      w: plan.params.box_w,
      h: plan.params.box_h,
      color: WHITE,
    },
  ];
  const [rows, cols] = plan.box_mask.size;
  const rgba = new Uint8ClampedArray(rows * cols * 4);
  for (const sub of plan.subtasks) {
    const mask = rleDecode(sub.mask);
    for (let i = 0; i < mask.length; i++) {
      if (!mask[i]) continue;
      rgba[i * 4] = sub.rgb[0];
      rgba[i * 4 + 1] = sub.rgb[1];
      rgba[i * 4 + 2] = sub.rgb[2];
      rgba[i * 4 + 3] = 255;
    }
  }
  shapes.push({ kind: "mask-image", rows, cols, rgba });
  return shapes;
}

export interface Sprite {
  localId: number;
  serverHandle: number | null;
  kind: "block" | "ingredient";
  x: number;
  y: number;
  theta: number;
  w: number;
  t: number;
  height: number;
}

/**
 * Client-side objects the user drags around. Moves are optimistic: the sprite
 * follows the pointer immediately, the authoritative feedback arrives with
 * the next overlay push.
 */
export class SpriteStore {
  sprites: Sprite[] = [];
  private nextId = 1;

  add(spec: Omit<Sprite, "localId" | "serverHandle">): Sprite {
    const sprite: Sprite = { ...spec, localId: this.nextId++, serverHandle: null };
    this.sprites.push(sprite);
    return sprite;
  }

  get(localId: number): Sprite | undefined {
    return this.sprites.find((s) => s.localId === localId);
  }

  moveTo(localId: number, x: number, y: number, theta?: number): Sprite {
    const s = this.mustGet(localId);
    s.x = x;
    s.y = y;
    if (theta !== undefined) s.theta = theta;
    return s;
  }

  bindHandle(localId: number, serverHandle: number): void {
    this.mustGet(localId).serverHandle = serverHandle;
  }

  remove(localId: number): void {
    this.sprites = this.sprites.filter((s) => s.localId !== localId);
  }

  private mustGet(localId: number): Sprite {
    const s = this.get(localId);
    if (!s) throw new Error(`no sprite ${localId}`);
    return s;
  }
}

/**
 * The live layer: latest snapshot and overlay, replaced atomically per push.
 * The overlay always reflects the most recent server message; there is no
 * client-side blending or recoloring.
 */
export class ViewState {
  snapshot: Snapshot | null = null;
  overlayB64: string | null = null;
  overlaySeq = 0;

  applyHello(snapshot: Snapshot): void {
    this.snapshot = snapshot;
  }

  applyFrame(msg: FrameMessage): void {
    this.snapshot = msg.snapshot;
    if (msg.overlay_b64 !== null) {
      this.overlayB64 = msg.overlay_b64;
      this.overlaySeq += 1;
    }
  }

  overlayDataUrl(): string | null {
    return this.overlayB64 === null ? null : `data:image/png;base64,${this.overlayB64}`;
  }
}
