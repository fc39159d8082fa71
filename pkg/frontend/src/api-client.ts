import type {
  FrameMessage,
  PlacedRect,
  PlanWire,
  SessionConfigWire,
  Snapshot,
  StrokeReport,
} from "./types.js";
import type { SketchDocumentWire } from "./sketch-model.js";

/** Non-2xx HTTP reply. */
export class ApiError extends Error {
  constructor(
    public status: number,
    public body: unknown,
    message?: string,
  ) {
    super(message ?? `server replied ${status}`);
  }
}

/** 422 on sketch submission with the planner's violation report attached. */
export class InfeasibleStrokeError extends ApiError {
  constructor(
    status: number,
    body: unknown,
    public report: StrokeReport,
  ) {
    super(status, body, "stroke cannot be planned");
  }
}

/** Rejected stream op (bad placement, wrong source, unknown op). */
export class StreamOpError extends Error {
  constructor(public reply: Record<string, unknown>) {
    super(String(reply.detail ?? reply.error ?? "stream op failed"));
  }
}

// minimal surface shared by the browser WebSocket and the ws package
export interface WSLike {
  readyState: number;
  send(data: string): void;
  close(): void;
  addEventListener(type: string, cb: (ev: { data?: unknown }) => void): void;
}
export type WSCtor = new (url: string) => WSLike;

const WS_OPEN = 1;

export interface StudioClientOptions {
  baseUrl: string;
  fetchFn?: typeof fetch;
  wsCtor?: WSCtor;
}

export class StudioClient {
  private baseUrl: string;
  private fetchFn: typeof fetch;
  private wsCtor: WSCtor;

  constructor(opts: StudioClientOptions) {
    this.baseUrl = opts.baseUrl.replace(/\/$/, "");
    this.fetchFn = opts.fetchFn ?? fetch.bind(globalThis);
    const ctor = opts.wsCtor ?? (globalThis as { WebSocket?: WSCtor }).WebSocket;
    if (!ctor) throw new Error("no WebSocket implementation available; pass wsCtor");
    this.wsCtor = ctor;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    const res = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const text = await res.text();
    const parsed = text ? safeJson(text) : null;
    if (!res.ok) {
      const rep = (parsed as { report?: StrokeReport } | null)?.report;
      if (res.status === 422 && rep) throw new InfeasibleStrokeError(res.status, parsed, rep);
      throw new ApiError(res.status, parsed);
    }
    return parsed;
  }

  async createSession(config: SessionConfigWire): Promise<{ id: string; state: Snapshot }> {
    return (await this.request("POST", "/sessions", config)) as { id: string; state: Snapshot };
  }

  async submitSketch(sessionId: string, doc: SketchDocumentWire): Promise<PlanWire> {
    return (await this.request("POST", `/sessions/${sessionId}/sketch`, doc)) as PlanWire;
  }

  async getPlan(sessionId: string): Promise<PlanWire> {
    return (await this.request("GET", `/sessions/${sessionId}/plan`)) as PlanWire;
  }

  async getState(sessionId: string): Promise<Snapshot & { timing: Record<string, number> }> {
    return (await this.request("GET", `/sessions/${sessionId}/state`)) as Snapshot & {
      timing: Record<string, number>;
    };
  }

  /** Cache-busting URL for the latest overlay PNG. */
  overlayUrl(sessionId: string, seq: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/overlay.png?seq=${seq}`;
  }

  async connect(sessionId: string): Promise<StreamHandle> {
    const wsBase = this.baseUrl.replace(/^http/, "ws");
    const handle = new StreamHandle(`${wsBase}/sessions/${sessionId}/stream`, this.wsCtor);
    await handle.open();
    return handle;
  }
}

function safeJson(text: string): unknown {
  try {
    return JSON.parse(text);
  } catch {
    return text;
  }
}

interface Expectation {
  wants: string[];
  resolve: (msg: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

type QueuedOp = {
  payload: Record<string, unknown>;
  expectation: Expectation | null;
};

/**
 * One WebSocket stream over a session. Server "frame" pushes fan out to
 * listeners; ops with direct replies are matched FIFO (the server answers
 * in order on a single connection). Ops sent while disconnected queue
 * locally and flush on reconnect; `stale` is the visible indicator that
 * the board may be behind the server.
 */
export class StreamHandle {
  hello: Snapshot | null = null;
  latest: FrameMessage | null = null;
  stale = false;

  private ws: WSLike | null = null;
  private pending: Expectation[] = [];
  private queue: QueuedOp[] = [];
  private frameListeners: ((msg: FrameMessage) => void)[] = [];
  private closeListeners: (() => void)[] = [];
  private closedByUs = false;

  constructor(
    private url: string,
    private ctor: WSCtor,
  ) {}

  open(): Promise<void> {
    this.closedByUs = false;
    return new Promise((resolve, reject) => {
      const ws = new this.ctor(this.url);
      this.ws = ws;
      let settled = false;
      ws.addEventListener("message", (ev) => {
        const msg = JSON.parse(String(ev.data)) as Record<string, unknown>;
        if (!settled) {
          settled = true;
          if (msg.type === "hello") {
            this.hello = msg.snapshot as Snapshot;
            this.flushQueue();
            resolve();
          } else {
            reject(new StreamOpError(msg));
            ws.close();
          }
          return;
        }
        this.dispatch(msg);
      });
      ws.addEventListener("close", () => {
        this.stale = this.stale || this.queue.length > 0 || !this.closedByUs;
        for (const exp of this.pending.splice(0)) {
          exp.reject(new Error("stream closed"));
        }
        for (const cb of this.closeListeners) cb();
        if (!settled) {
          settled = true;
          reject(new Error("stream closed before hello"));
        }
      });
      ws.addEventListener("error", () => {
        // close follows; nothing to do here
      });
    });
  }

  onFrame(cb: (msg: FrameMessage) => void): void {
    this.frameListeners.push(cb);
  }

  onClose(cb: () => void): void {
    this.closeListeners.push(cb);
  }

  private dispatch(msg: Record<string, unknown>): void {
    if (msg.type === "frame") {
      const frame = msg as unknown as FrameMessage;
      this.latest = frame;
      this.stale = false;
      if (this.pending.length && this.pending[0].wants.includes("frame")) {
        this.pending.shift()!.resolve(msg);
      }
      for (const cb of this.frameListeners) cb(frame);
      return;
    }
    const exp = this.pending.shift();
    if (!exp) return;
    if (msg.type === "error") exp.reject(new StreamOpError(msg));
    else exp.resolve(msg);
  }

  private connected(): boolean {
    return this.ws !== null && this.ws.readyState === WS_OPEN;
  }

  private sendOp(payload: Record<string, unknown>, wants: string[]): Promise<Record<string, unknown>> {
    return new Promise((resolve, reject) => {
      const expectation: Expectation = { wants, resolve, reject };
      if (!this.connected()) {
        this.queue.push({ payload, expectation });
        this.stale = true;
        return;
      }
      this.pending.push(expectation);
      this.ws!.send(JSON.stringify(payload));
    });
  }

  private flushQueue(): void {
    const ops = this.queue.splice(0);
    for (const op of ops) {
      if (op.expectation) this.pending.push(op.expectation);
      this.ws!.send(JSON.stringify(op.payload));
    }
    if (!ops.length) this.stale = false;
  }

  /** Number of ops waiting for a reconnect. */
  queuedOps(): number {
    return this.queue.length;
  }

  async place(rect: PlacedRect, height: number): Promise<number> {
    const reply = await this.sendOp({ op: "place", rect, height }, ["placed"]);
    return reply.handle as number;
  }

  async remove(index: number): Promise<void> {
    await this.sendOp({ op: "remove", index }, ["removed"]);
  }

  async marker(
    point: [number, number] | null,
  ): Promise<{ cam: [number, number]; workspace: [number, number] } | null> {
    const reply = await this.sendOp({ op: "marker", point }, ["marker"]);
    return reply.detected as { cam: [number, number]; workspace: [number, number] } | null;
  }

  /**
   * Ask the simulator to process one frame. Resolves with the pushed frame
   * message, or the dropped marker when the pipeline was busy.
   */
  async requestFrame(): Promise<FrameMessage | { type: "dropped" }> {
    const reply = await this.sendOp({ op: "frame" }, ["frame", "dropped"]);
    return reply as unknown as FrameMessage | { type: "dropped" };
  }

  async requestState(): Promise<Snapshot> {
    const reply = await this.sendOp({ op: "state" }, ["state"]);
    return reply.snapshot as Snapshot;
  }

  close(): void {
    this.closedByUs = true;
    this.ws?.close();
  }
}
