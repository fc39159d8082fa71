import fs from "node:fs";
import path from "node:path";
import { PNG } from "pngjs";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";
import { StreamOpError, StudioClient } from "../src/api-client.js";
import type { WSCtor } from "../src/api-client.js";
import { BENTO_PALETTE, CanvasState, DOMINO_PALETTE } from "../src/sketch-model.js";
import type { SketchDocumentWire } from "../src/sketch-model.js";
import type { BentoGuidance, DominoGuidance, FrameMessage, PlanWire } from "../src/types.js";
import { SpriteStore, ViewState, planShapes } from "../src/workspace-view.js";
import { REPO_ROOT, type RunningServer, startServer } from "./pyserver.js";

// Full loop against the real session server: sketch in, plan out, objects
// placed over the stream, colors read back off the pushed overlay PNG. The
// client never computes a color; every assertion samples server output.

const WORKSPACE_MM: [number, number] = [572, 321];
const CAM: [number, number] = [512, 424];

/** Workspace mm to camera px under the default corner-pinned rig. */
function camPx(xMm: number, yMm: number): [number, number] {
  return [
    Math.round((xMm * (CAM[0] - 1)) / WORKSPACE_MM[0]),
    Math.round((yMm * (CAM[1] - 1)) / WORKSPACE_MM[1]),
  ];
}

function decodeOverlay(b64: string): PNG {
  return PNG.sync.read(Buffer.from(b64, "base64"));
}

function pixelAt(png: PNG, col: number, row: number): [number, number, number, number] {
  const i = (row * png.width + col) * 4;
  return [png.data[i], png.data[i + 1], png.data[i + 2], png.data[i + 3]];
}

function countColor(png: PNG, rgba: [number, number, number, number]): number {
  let n = 0;
  for (let i = 0; i < png.data.length; i += 4) {
    if (
      png.data[i] === rgba[0] &&
      png.data[i + 1] === rgba[1] &&
      png.data[i + 2] === rgba[2] &&
      png.data[i + 3] === rgba[3]
    ) {
      n++;
    }
  }
  return n;
}

function expectFrame(push: FrameMessage | { type: "dropped" }): FrameMessage {
  expect(push.type).toBe("frame");
  return push as FrameMessage;
}

let server: RunningServer;
let client: StudioClient;

beforeAll(async () => {
  server = await startServer();
  client = new StudioClient({
    baseUrl: server.baseUrl,
    wsCtor: WebSocket as unknown as WSCtor,
  });
});

afterAll(async () => {
  await server?.stop();
});

describe("domino loop", () => {
  it("straight stroke -> 11 white rectangles, block within 5 mm -> green circle", async () => {
    const { id } = await client.createSession({
      task: "domino",
      source: "simulator",
      seed: 7,
      noise_sigma_mm: 2.0,
    });

    // draw the stroke with the canvas tools; the result must be the shipped
    // fixture document, byte for byte in structure
    const canvas = new CanvasState(DOMINO_PALETTE, WORKSPACE_MM[0], WORKSPACE_MM[1]);
    canvas.setTool("line");
    canvas.pointerDown(100, 150);
    canvas.pointerMove(240, 149);
    canvas.pointerUp(380, 150);
    const doc = canvas.toDocument("domino");
    const fixture = JSON.parse(
      fs.readFileSync(path.join(REPO_ROOT, "fixtures", "sketch_straight.json"), "utf-8"),
    ) as SketchDocumentWire;
    expect(doc).toEqual(fixture);

    const plan: PlanWire = await client.submitSketch(id, doc);
    if (plan.task !== "domino") throw new Error("expected a domino plan");
    expect(plan.targets).toHaveLength(11);

    // the plan layer renders one white outline per target
    const shapes = planShapes(plan);
    expect(shapes).toHaveLength(11);
    for (const s of shapes) {
      expect(s.kind).toBe("rect-outline");
      if (s.kind === "rect-outline") expect(s.color).toEqual([255, 255, 255]);
    }

    const stream = await client.connect(id);
    const view = new ViewState();
    view.applyHello(stream.hello!);
    stream.onFrame((msg) => view.applyFrame(msg));

    // first sweep happens on the empty desk so the baseline holds no objects
    const baseline = expectFrame(await stream.requestFrame());
    const g0 = baseline.snapshot.guidance as DominoGuidance;
    expect(g0.detection_count).toBe(0);
    expect(g0.targets[0].matched).toBe(false);
    expect(baseline.overlay_b64).not.toBeNull();
    const before = decodeOverlay(baseline.overlay_b64!);
    expect([before.width, before.height]).toEqual(CAM);
    // 11 projected outlines put plenty of white on the desk before any block
    expect(countColor(before, [255, 255, 255, 255])).toBeGreaterThan(200);

    // drag one block to 3 mm off the first target and push it to the server
    const t0 = plan.targets[0];
    const sprites = new SpriteStore();
    const sprite = sprites.add({
      kind: "block",
      x: 200,
      y: 250,
      theta: 0,
      w: plan.params.width,
      t: plan.params.thickness,
      height: plan.params.height,
    });
    sprites.moveTo(sprite.localId, t0.x + 3, t0.y, t0.theta);
    const moved = sprites.get(sprite.localId)!;
    const handle = await stream.place(
      { x: moved.x, y: moved.y, theta: moved.theta, w: moved.w, t: moved.t },
      moved.height,
    );
    sprites.bindHandle(sprite.localId, handle);

    // next push must show the circle green; the server decides the color
    const push = expectFrame(await stream.requestFrame());
    const g1 = push.snapshot.guidance as DominoGuidance;
    expect(g1.detection_count).toBe(1);
    expect(g1.matched_count).toBe(1);
    expect(g1.targets[0].matched).toBe(true);
    expect(g1.targets[0].distance_mm).toBeLessThan(5);
    expect(g1.targets[0].color).toEqual([0, 255, 0]);

    const after = decodeOverlay(push.overlay_b64!);
    const [col, row] = camPx(t0.x + 3, t0.y);
    expect(pixelAt(after, col, row)).toEqual([0, 255, 0, 255]);
    // outlines for the other ten targets stay white
    expect(countColor(after, [255, 255, 255, 255])).toBeGreaterThan(200);

    expect(view.snapshot?.frames.processed).toBe(2);
    expect(view.overlaySeq).toBe(2);

    // a placement that leaves the desk is refused by the server, not the client
    await expect(
      stream.place({ x: 5000, y: 5000, theta: 0, w: 23, t: 8 }, 46),
    ).rejects.toThrow(/leaves the workspace/);

    // calibration marker round trip stays within the rig tolerance
    const detected = await stream.marker([300, 200]);
    expect(detected).not.toBeNull();
    expect(Math.abs(detected!.workspace[0] - 300)).toBeLessThan(2);
    expect(Math.abs(detected!.workspace[1] - 200)).toBeLessThan(2);
    await stream.marker(null);

    stream.close();
  });
});

describe("bento loop", () => {
  it("ingredient dropped off the active region shows red overlay pixels", async () => {
    const { id } = await client.createSession({
      task: "bento",
      source: "simulator",
      seed: 11,
      noise_sigma_mm: 2.0,
    });

    // two rectangular regions, the larger one first in the serve order:
    // broccoli 20..90 x 20..50 mm, fried egg 100..160 x 20..50 mm (3 px/mm)
    const canvas = new CanvasState(BENTO_PALETTE);
    canvas.setTool("rect");
    canvas.setColor(0);
    canvas.pointerDown(60, 60);
    canvas.pointerUp(270, 150);
    canvas.setColor(1);
    canvas.pointerDown(300, 60);
    canvas.pointerUp(480, 150);

    const plan = await client.submitSketch(id, canvas.toDocument("bento"));
    if (plan.task !== "bento") throw new Error("expected a bento plan");
    expect(plan.subtasks).toHaveLength(2);
    expect(plan.subtasks[0].ingredient).toBe("broccoli");
    expect(plan.subtasks[1].ingredient).toBe("fried egg");
    expect(plan.subtasks[0].area_px).toBeGreaterThan(plan.subtasks[1].area_px);

    const shapes = planShapes(plan);
    expect(shapes[0]).toMatchObject({ kind: "box-outline", w: 200, h: 135 });
    expect(shapes[shapes.length - 1].kind).toBe("mask-image");

    const stream = await client.connect(id);
    const baseline = expectFrame(await stream.requestFrame());
    const g0 = baseline.snapshot.guidance as BentoGuidance;
    expect(g0.active_index).toBe(0);
    expect(g0.spill).toBe(0);

    // drop an ingredient slab inside the tray but outside every region
    await stream.place({ x: 100, y: 100, theta: 0, w: 40, t: 20 }, 20);
    const push = expectFrame(await stream.requestFrame());
    const g1 = push.snapshot.guidance as BentoGuidance;
    expect(g1.spill).toBeGreaterThan(0);
    expect(g1.all_complete).toBe(false);
    expect(g1.subtasks[0].status).toBe("active");

    const overlay = decodeOverlay(push.overlay_b64!);
    // the misplaced slab lights red where it sits
    expect(pixelAt(overlay, ...camPx(100, 100))).toEqual([255, 0, 0, 255]);
    expect(countColor(overlay, [255, 0, 0, 255])).toBeGreaterThan(50);
    // the active region keeps its palette color where nothing sits on it
    expect(pixelAt(overlay, ...camPx(55, 35))).toEqual([0, 160, 0, 255]);
    // pending regions stay black (keep-clear), painted not transparent
    expect(pixelAt(overlay, ...camPx(130, 35))).toEqual([0, 0, 0, 255]);
    // outside the box the projector stays dark
    expect(pixelAt(overlay, ...camPx(400, 200))[3]).toBe(0);

    stream.close();
  });

  it("stream ops on a session without a simulator are refused", async () => {
    const { id } = await client.createSession({ task: "domino", source: "external-frames" });
    const stream = await client.connect(id);
    await expect(stream.requestFrame()).rejects.toThrow(StreamOpError);
    stream.close();
  });
});
