"""Synthetic depth/IR rig for closed-loop testing without hardware.

The scene holds upright boxes on a flat desk. Depth frames are rendered
orthographically through the calibration profile: each camera pixel looks
up its workspace point and reports the desk depth minus the tallest object
covering that point, plus seeded Gaussian noise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calibration import CalibrationProfile
from .errors import MalformedScript
from .frames import DepthFrame, IRFrame
from .geometry import OrientedRect

DESK_DEPTH_MM = 800.0
IR_DARK = 1000
IR_BRIGHT = 65000


@dataclass
class SceneObject:
    rect: OrientedRect
    height_mm: float


class Scene:
    """Mutable collection of placed objects plus an optional IR marker."""

    def __init__(
        self,
        workspace_mm: tuple[float, float],
        desk_depth_mm: float = DESK_DEPTH_MM,
    ):
        self.workspace_mm = workspace_mm
        self.desk_depth_mm = float(desk_depth_mm)
        self.objects: dict[int, SceneObject] = {}
        self.marker: tuple[float, float] | None = None
        self._next_id = 0

    def place(self, rect: OrientedRect, height_mm: float) -> int:
        """Add an object; returns its handle. Footprint must stay on the desk."""
        if height_mm <= 0:
            raise ValueError("object height must be positive")
        corners = rect.corners()
        w, h = self.workspace_mm
        eps = 1e-6
        if (
            corners[:, 0].min() < -eps
            or corners[:, 1].min() < -eps
            or corners[:, 0].max() > w + eps
            or corners[:, 1].max() > h + eps
        ):
            raise ValueError("object footprint leaves the workspace")
        handle = self._next_id
        self._next_id += 1
        self.objects[handle] = SceneObject(rect, float(height_mm))
        return handle

    def remove(self, handle: int) -> None:
        if handle not in self.objects:
            raise KeyError(f"no object with handle {handle}")
        del self.objects[handle]

    def set_marker(self, point_mm: tuple[float, float] | None) -> None:
        self.marker = point_mm


def render_depth(
    scene: Scene,
    profile: CalibrationProfile,
    noise_sigma_mm: float = 2.0,
    seed=0,
    timestamp_us: int = 0,
) -> DepthFrame:
    """Orthographic depth render with seeded Gaussian noise.

    Identical scene, profile, sigma and seed give an identical frame.
    """
    grid = profile.camera_grid_mm()
    h, w = grid.shape[:2]
    pts = grid.reshape(-1, 2)
    height_map = np.zeros(h * w, dtype=np.float64)
    for obj in scene.objects.values():
        inside = obj.rect.contains(pts)
        np.maximum(height_map, np.where(inside, obj.height_mm, 0.0), out=height_map)
    depth = scene.desk_depth_mm - height_map
    if noise_sigma_mm > 0:
        rng = np.random.default_rng(seed)
        depth = depth + rng.normal(0.0, noise_sigma_mm, size=depth.shape)
    depth = np.clip(np.rint(depth), 0, 65535).astype(np.uint16)
    return DepthFrame(depth.reshape(h, w), timestamp_us)


def render_ir(scene: Scene, profile: CalibrationProfile, timestamp_us: int = 0) -> IRFrame:
    """Uniform dark field with a small bright disc at the marker, if any."""
    w, h = profile.cam_dims
    img = np.full((h, w), IR_DARK, dtype=np.uint16)
    if scene.marker is not None:
        cx, cy = profile.workspace_to_camera(scene.marker)
        cx, cy = int(round(cx)), int(round(cy))
        for dy in range(-2, 3):
            for dx in range(-2, 3):
                if dx * dx + dy * dy <= 6.25:
                    x, y = cx + dx, cy + dy
                    if 0 <= x < w and 0 <= y < h:
                        img[y, x] = IR_BRIGHT
    return IRFrame(img, timestamp_us)


_EVENT_OPS = {"place", "remove", "frame", "assert"}


@dataclass
class ScenarioScript:
    """Deterministic event list driving a simulator-backed session."""

    seed: int
    events: list[dict] = field(default_factory=list)

    @classmethod
    def from_json(cls, obj: dict) -> "ScenarioScript":
        if not isinstance(obj, dict) or "events" not in obj:
            raise MalformedScript("script must be an object with an events list")
        seed = int(obj.get("seed", 0))
        events = obj["events"]
        if not isinstance(events, list):
            raise MalformedScript("events must be a list")
        for i, ev in enumerate(events):
            if not isinstance(ev, dict) or ev.get("op") not in _EVENT_OPS:
                raise MalformedScript(f"event {i} has no valid op")
            if ev["op"] == "place":
                rect = ev.get("rect")
                if not isinstance(rect, dict) or not {"x", "y", "theta", "w", "t"} <= set(rect):
                    raise MalformedScript(f"place event {i} needs rect{{x,y,theta,w,t}}")
                if "height" not in ev:
                    raise MalformedScript(f"place event {i} needs a height")
            elif ev["op"] == "remove" and "index" not in ev:
                raise MalformedScript(f"remove event {i} needs an index")
            elif ev["op"] == "assert" and ("path" not in ev or "expect" not in ev):
                raise MalformedScript(f"assert event {i} needs path and expect")
        return cls(seed, events)


def _lookup(snapshot, path: str):
    cur = snapshot
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        elif isinstance(cur, dict):
            if part not in cur:
                raise KeyError(path)
            cur = cur[part]
        else:
            raise KeyError(path)
    return cur


def run_script(script: ScenarioScript, session) -> tuple[dict, list[tuple[str, np.ndarray]]]:
    """Execute a script against a planned simulator session.

    Returns the report dict and the overlays rendered for each frame event.
    The report contains only logical state (no wall-clock numbers), so one
    script and seed always produce byte-identical output.
    """
    if session.plan is None:
        raise MalformedScript("session has no plan; submit a sketch first")
    session.seed = script.seed
    session.ensure_environment()
    scene = session.scene
    report_events = []
    overlays: list[tuple[str, np.ndarray]] = []
    failures = 0
    for ev in script.events:
        op = ev["op"]
        if op == "place":
            r = ev["rect"]
            rect = OrientedRect(
                pose=_pose(r), width=float(r["w"]), thickness=float(r["t"])
            )
            handle = scene.place(rect, float(ev["height"]))
            report_events.append({"op": "place", "handle": handle})
        elif op == "remove":
            scene.remove(int(ev["index"]))
            report_events.append({"op": "remove", "index": int(ev["index"])})
        elif op == "frame":
            delta = session.simulate_frame()
            overlays.append((f"overlay_{delta['frame']:04d}.png", session.overlay_rgba()))
            report_events.append({"op": "frame", "state": delta})
        else:
            snapshot = session.state_snapshot()
            try:
                actual = _lookup(snapshot, ev["path"])
                ok = actual == ev["expect"]
            except (KeyError, IndexError, ValueError):
                actual, ok = None, False
            if not ok:
                failures += 1
            report_events.append(
                {"op": "assert", "path": ev["path"], "expect": ev["expect"],
                 "actual": actual, "ok": ok}
            )
    report = {
        "seed": script.seed,
        "task": session.config.task,
        "events": report_events,
        "final_state": session.state_snapshot(),
        "assert_failures": failures,
    }
    return report, overlays


def _pose(r: dict):
    from .geometry import Pose2

    return Pose2(float(r["x"]), float(r["y"]), float(r["theta"]))
