/** Wire types for the session server. Field names mirror the JSON exactly. */

export type RGB = [number, number, number];
export type Vec2 = [number, number];

/** Row-major run lengths, alternating zero/one runs, starting with zeros. */
export interface RLEMask {
  size: [number, number]; // [rows, cols]
  counts: number[];
}

export interface DominoTarget {
  x: number;
  y: number;
  theta: number;
}

export interface DominoParamsWire {
  width: number;
  height: number;
  thickness: number;
  center_spacing: number;
  correct_mm: number;
  yellow_mm: number;
  red_mm: number;
  max_turn_deg: number;
  min_contact_height_frac: number;
  min_width_overlap_frac: number;
}

export interface DominoPlanWire {
  task: "domino";
  params: DominoParamsWire;
  targets: DominoTarget[];
}

export interface BentoParamsWire {
  box_w: number;
  box_h: number;
  canvas_w: number;
  canvas_h: number;
  px_per_mm: number;
  fill_threshold: number;
  spill_threshold: number;
  ingredient_map: Record<string, string>;
  box_origin: [number, number];
  min_region_px: number;
}

export interface BentoSubtaskWire {
  color: number;
  ingredient: string | null;
  mask: RLEMask; // camera-space
  area_px: number;
  rgb: RGB;
}

export interface BentoPlanWire {
  task: "bento";
  params: BentoParamsWire;
  box_mask: RLEMask;
  subtasks: BentoSubtaskWire[];
}

export type PlanWire = DominoPlanWire | BentoPlanWire;

export interface TargetGuidance {
  index: number;
  matched: boolean;
  distance_mm: number | null;
  color: RGB | null; // set by the server, never computed here
}

export interface DominoGuidance {
  targets: TargetGuidance[];
  matched_count: number;
  detection_count: number;
  unmatched_detections: number;
  complete: boolean;
}

export interface SubtaskGuidance {
  index: number;
  color: number;
  ingredient: string | null;
  status: "pending" | "active" | "complete";
  fill: number;
  area_px: number;
}

export interface BentoGuidance {
  subtasks: SubtaskGuidance[];
  active_index: number | null;
  spill: number;
  all_complete: boolean;
}

export type Guidance = DominoGuidance | BentoGuidance;

export interface Snapshot {
  id: string;
  task: string;
  source: string;
  phase: string;
  frames: { processed: number; dropped: number; total: number };
  environment_ready: boolean;
  plan: Record<string, number> | null;
  guidance: Guidance | null;
}

export interface FrameDelta {
  dropped: boolean;
  frame: number | null;
  phase: string;
  guidance?: Guidance;
  overlay?: string;
}

/** One WS push after a processed frame. */
export interface FrameMessage {
  type: "frame";
  state: FrameDelta;
  snapshot: Snapshot;
  overlay_b64: string | null;
}

export interface StrokeViolation {
  kind: string;
  index: number;
  value: number;
  limit: number;
}

export interface StrokeReport {
  ok: boolean;
  violations: StrokeViolation[];
}

export interface SessionConfigWire {
  task: "domino" | "bento";
  source?: "simulator" | "external-frames";
  seed?: number;
  noise_sigma_mm?: number;
  params?: Record<string, unknown>;
  calibration?: Record<string, unknown>;
  env_frames?: number;
  denoise_radius?: number;
  lift_threshold_mm?: number;
}

export interface PlacedRect {
  x: number;
  y: number;
  theta: number;
  w: number;
  t: number;
}
