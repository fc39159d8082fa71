"""Guided-task sessions: sketch in, plan out, frames in, overlays out.

A session owns one task (domino or bento), one calibration profile, and a
frame pipeline. Frame processing is serialized; a frame arriving while the
previous one is still in the pipeline is dropped and counted, never queued,
so the overlay always reflects the latest desk state.
"""

from __future__ import annotations

import itertools
import threading
import time
import uuid

import numpy as np

from . import render
from .bento import BentoParams, BentoPlan, build_bento_plan, initial_bento_state, step_bento_state
from .calibration import CalibrationProfile, default_profile
from .domino import DominoParams, DominoPlan, match_detections, feedback_color, plan_dominoes
from .errors import EnvironmentMissing, InvalidConfig, NotPlanned
from .frames import DepthFrame
from .sensing import (
    LIFT_THRESHOLD_MM,
    capture_environment,
    denoise_mask,
    detect_blocks,
    occupancy_mask,
)
from .simulator import Scene, render_depth
from .sketch import SketchDocument, clean_stroke, parse_sketch_document

AWAITING_SKETCH = "awaiting-sketch"
PLANNED = "planned"
RUNNING = "running"
DONE = "done"

TASK_DOMINO = "domino"
TASK_BENTO = "bento"

SOURCE_EXTERNAL = "external-frames"
SOURCE_SIMULATOR = "simulator"


class SessionConfig:
    """Validated session settings."""

    def __init__(
        self,
        task: str,
        params=None,
        profile: CalibrationProfile | None = None,
        source: str = SOURCE_EXTERNAL,
        seed: int = 0,
        noise_sigma_mm: float = 2.0,
        env_frames: int = 5,
        denoise_radius: int = 1,
        lift_threshold_mm: float = LIFT_THRESHOLD_MM,
    ):
        if task not in (TASK_DOMINO, TASK_BENTO):
            raise InvalidConfig(f"unknown task {task!r}")
        if source not in (SOURCE_EXTERNAL, SOURCE_SIMULATOR):
            raise InvalidConfig(f"unknown frame source {source!r}")
        if params is None:
            params = DominoParams() if task == TASK_DOMINO else BentoParams()
        expected = DominoParams if task == TASK_DOMINO else BentoParams
        if not isinstance(params, expected):
            raise InvalidConfig(f"{task} session got {type(params).__name__}")
        if env_frames < 1:
            raise InvalidConfig("env_frames must be >= 1")
        if denoise_radius < 0:
            raise InvalidConfig("denoise_radius must be >= 0")
        self.task = task
        self.params = params
        self.profile = profile if profile is not None else default_profile()
        self.source = source
        self.seed = int(seed)
        self.noise_sigma_mm = float(noise_sigma_mm)
        self.env_frames = int(env_frames)
        self.denoise_radius = int(denoise_radius)
        self.lift_threshold_mm = float(lift_threshold_mm)

    @classmethod
    def from_json(cls, obj: dict) -> "SessionConfig":
        """Parse the HTTP config body, rejecting mismatched or unknown keys."""
        if not isinstance(obj, dict) or "task" not in obj:
            raise InvalidConfig("config must be an object with a task")
        task = obj["task"]
        known = {"task", "params", "calibration", "source", "seed", "noise_sigma_mm",
                 "env_frames", "denoise_radius", "lift_threshold_mm"}
        unknown = set(obj) - known
        if unknown:
            raise InvalidConfig(f"unknown config keys: {sorted(unknown)}")
        params = None
        if obj.get("params") is not None:
            p = obj["params"]
            if not isinstance(p, dict):
                raise InvalidConfig("params must be an object")
            try:
                if task == TASK_DOMINO:
                    params = DominoParams.from_json(p)
                elif task == TASK_BENTO:
                    params = BentoParams.from_json(p)
            except (TypeError, ValueError) as exc:
                raise InvalidConfig(f"bad {task} params: {exc}") from exc
        profile = None
        if obj.get("calibration") is not None:
            try:
                profile = CalibrationProfile.from_json(obj["calibration"])
            except (KeyError, TypeError, ValueError) as exc:
                raise InvalidConfig(f"bad calibration: {exc}") from exc
        return cls(
            task,
            params,
            profile,
            obj.get("source", SOURCE_EXTERNAL),
            obj.get("seed", 0),
            obj.get("noise_sigma_mm", 2.0),
            obj.get("env_frames", 5),
            obj.get("denoise_radius", 1),
            obj.get("lift_threshold_mm", LIFT_THRESHOLD_MM),
        )


class Session:
    """One guided run. Public methods are safe to call from multiple threads."""

    def __init__(self, config: SessionConfig, session_id: str | None = None):
        self.id = session_id or uuid.uuid4().hex[:12]
        self.config = config
        self.profile = config.profile
        self.seed = config.seed
        self.phase = AWAITING_SKETCH
        self.plan: DominoPlan | BentoPlan | None = None
        self.env = None
        self.scene = Scene(self.profile.workspace_mm) if config.source == SOURCE_SIMULATOR else None
        self._env_buffer: list[DepthFrame] = []
        self._task_state = None
        self._overlay: np.ndarray | None = None
        self._overlay_png: bytes | None = None
        self._overlay_seq = 0
        self._frames_processed = 0
        self._frames_dropped = 0
        self._sim_frame_index = itertools.count()
        self._last_latency_ms = 0.0
        self._pipeline = threading.Lock()
        self._mutate = threading.RLock()
        self._snapshot: dict = {}
        self._rebuild_snapshot()

    # ---- sketch / planning ----

    def submit_sketch(self, doc: SketchDocument | dict):
        """Run the task's analysis chain and store the plan.

        Allowed while awaiting a sketch, planned, or running; resubmission
        resets guidance state and moves the session back to planned.
        """
        if isinstance(doc, dict):
            doc = parse_sketch_document(doc)
        with self._mutate:
            if self.phase == DONE:
                raise InvalidConfig("session is done; start a new one")
            if self.config.task == TASK_DOMINO:
                plan = self._plan_domino(doc)
            else:
                plan = self._plan_bento(doc)
            self.plan = plan
            self._task_state = (
                initial_bento_state(plan) if self.config.task == TASK_BENTO else None
            )
            self._overlay = None
            self._overlay_png = None
            self.phase = PLANNED
            self._rebuild_snapshot()
            return plan

    def _plan_domino(self, doc: SketchDocument) -> DominoPlan:
        from .errors import EmptyInput

        if not doc.strokes:
            raise EmptyInput("domino task needs a stroke")
        stroke = doc.strokes[0]
        ws_w, ws_h = self.profile.workspace_mm
        sx = ws_w / doc.canvas_w
        sy = ws_h / doc.canvas_h
        px_per_mm = doc.canvas_w / ws_w
        cleaned = clean_stroke(stroke, px_per_mm)
        mm_points = cleaned.points * np.array([sx, sy])
        return plan_dominoes(mm_points, self.config.params)

    def _plan_bento(self, doc: SketchDocument) -> BentoPlan:
        return build_bento_plan(doc, self.config.params, self.profile)

    # ---- environment ----

    def add_environment_frame(self, frame: DepthFrame) -> int:
        """Fold one more frame into the baseline capture."""
        with self._mutate:
            self._env_buffer.append(frame)
            self.env = capture_environment(self._env_buffer)
            self._rebuild_snapshot()
            return len(self._env_buffer)

    def set_environment(self, env) -> None:
        with self._mutate:
            self.env = env
            self._rebuild_snapshot()

    def ensure_environment(self) -> None:
        """Simulator sessions: capture the baseline from the current scene."""
        if self.env is not None:
            return
        if self.scene is None:
            raise EnvironmentMissing("external sessions must post environment frames")
        frames = [
            render_depth(
                self.scene, self.profile, self.config.noise_sigma_mm,
                seed=[self.seed, 1_000_000 + i],
            )
            for i in range(self.config.env_frames)
        ]
        self.set_environment(capture_environment(frames))

    # ---- frame pipeline ----

    def process_frame(self, frame: DepthFrame) -> dict:
        """Run sensing, task progression and overlay rendering for one frame.

        Returns a state delta. If another frame is mid-pipeline this one is
        dropped (latest-wins) and the delta says so.
        """
        if self.plan is None:
            raise NotPlanned("submit a sketch before sending frames")
        if self.env is None:
            raise EnvironmentMissing("no environment baseline captured")
        if not self._pipeline.acquire(blocking=False):
            with self._mutate:
                self._frames_dropped += 1
                self._rebuild_snapshot()
            return {"dropped": True, "frame": None, "phase": self.phase}
        try:
            t0 = time.perf_counter()
            occ = occupancy_mask(self.env, frame, self.config.lift_threshold_mm)
            occ = denoise_mask(occ, self.config.denoise_radius)
            if self.config.task == TASK_DOMINO:
                guidance, overlay = self._step_domino(frame, occ)
            else:
                guidance, overlay = self._step_bento(occ)
            with self._mutate:
                self._frames_processed += 1
                seq = self._frames_processed
                self._overlay = overlay
                self._overlay_png = None
                self._overlay_seq = seq
                self._guidance = guidance
                if self.phase == PLANNED:
                    self.phase = RUNNING
                if guidance.get("complete") or guidance.get("all_complete"):
                    self.phase = DONE
                self._last_latency_ms = (time.perf_counter() - t0) * 1000.0
                self._rebuild_snapshot()
                return {
                    "dropped": False,
                    "frame": seq,
                    "phase": self.phase,
                    "guidance": guidance,
                    "overlay": f"overlay.png?seq={seq}",
                }
        finally:
            self._pipeline.release()

    def _step_domino(self, frame: DepthFrame, occ: np.ndarray):
        plan: DominoPlan = self.plan
        lift = np.where(occ, self.env.baseline - frame.data.astype(np.float64), 0.0)
        detections = detect_blocks(
            occ, self.profile, plan.params.footprint_mm2(), 0.5, lift_mm=lift
        )
        assignment = match_detections(plan, detections)
        by_target = {t: (d, dist) for t, d, dist in assignment.pairs}
        targets = []
        for i, t in enumerate(plan.targets):
            if i in by_target:
                _, dist = by_target[i]
                color = feedback_color(dist, plan.params)
                targets.append(
                    {"index": i, "matched": True, "distance_mm": round(dist, 3),
                     "color": list(color)}
                )
            else:
                targets.append({"index": i, "matched": False, "distance_mm": None, "color": None})
        complete = len(assignment.pairs) == len(plan.targets) and all(
            dist <= plan.params.correct_mm for _, _, dist in assignment.pairs
        )
        guidance = {
            "targets": targets,
            "matched_count": len(assignment.pairs),
            "detection_count": len(detections),
            "unmatched_detections": len(assignment.unmatched_detections),
            "complete": complete,
        }
        overlay = render.render_domino_overlay(plan, assignment, detections, self.profile)
        return guidance, overlay

    def _step_bento(self, occ: np.ndarray):
        plan: BentoPlan = self.plan
        state = step_bento_state(self._task_state, plan, occ)
        self._task_state = state
        guidance = {
            "subtasks": [
                {
                    "index": i,
                    "color": s.color_id,
                    "ingredient": s.ingredient,
                    "status": state.statuses[i],
                    "fill": round(state.fill[i], 6),
                    "area_px": s.area_px,
                }
                for i, s in enumerate(plan.subtasks)
            ],
            "active_index": state.active_index,
            "spill": round(state.spill, 6),
            "all_complete": state.all_complete,
        }
        overlay = render.render_bento_overlay(plan, state, occ, self.profile)
        return guidance, overlay

    def simulate_frame(self) -> dict:
        """Render a frame from the scene and feed it through the pipeline."""
        if self.scene is None:
            raise InvalidConfig("session source is not the simulator")
        self.ensure_environment()
        idx = next(self._sim_frame_index)
        frame = render_depth(
            self.scene, self.profile, self.config.noise_sigma_mm,
            seed=[self.seed, idx], timestamp_us=idx,
        )
        return self.process_frame(frame)

    # ---- state ----

    def overlay_rgba(self) -> np.ndarray | None:
        return self._overlay

    def overlay_png(self) -> bytes | None:
        with self._mutate:
            if self._overlay is None:
                return None
            if self._overlay_png is None:
                self._overlay_png = render.png_bytes(self._overlay)
            return self._overlay_png

    def metrics(self) -> dict:
        return {
            "last_latency_ms": round(self._last_latency_ms, 3),
            "frames_processed": self._frames_processed,
            "frames_dropped": self._frames_dropped,
        }

    def state_snapshot(self) -> dict:
        """Consistent logical state; safe to serialize at any moment."""
        return self._snapshot

    def _rebuild_snapshot(self) -> None:
        plan_summary = None
        if self.plan is not None:
            if self.config.task == TASK_DOMINO:
                plan_summary = {"targets": len(self.plan.targets)}
            else:
                plan_summary = {"subtasks": len(self.plan.subtasks)}
        self._snapshot = {
            "id": self.id,
            "task": self.config.task,
            "source": self.config.source,
            "phase": self.phase,
            "frames": {
                "processed": self._frames_processed,
                "dropped": self._frames_dropped,
                "total": self._frames_processed + self._frames_dropped,
            },
            "environment_ready": self.env is not None,
            "plan": plan_summary,
            "guidance": getattr(self, "_guidance", None),
        }


class SessionManager:
    """Process-wide registry keyed by session id."""

    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def create(self, config: SessionConfig) -> Session:
        session = Session(config)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session | None:
        with self._lock:
            return self._sessions.get(session_id)

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._sessions)
