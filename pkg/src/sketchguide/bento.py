"""Bento arrangement planning and fill/spill progression.

The sketch canvas maps one-to-one onto the physical box interior; each
palette color drawn becomes one subtask whose target mask lives in camera
pixels. Subtasks run one at a time, largest target first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calibration import CalibrationProfile
from .errors import EmptyNonTarget, EmptyTarget, MaskOutsideBox, NoRegions
from .masks import mask_area, rle_decode, rle_encode
from .sketch import BACKGROUND, SketchDocument, extract_color_regions


def _default_ingredients() -> dict[int, str]:
    return {0: "broccoli", 1: "fried egg", 2: "sausage", 3: "crab stick"}


@dataclass
class BentoParams:
    box_w: float = 200.0
    box_h: float = 135.0
    canvas_w: int = 600
    canvas_h: int = 405
    px_per_mm: float = 3.0
    fill_threshold: float = 0.70
    spill_threshold: float = 0.20
    ingredient_map: dict[int, str] = field(default_factory=_default_ingredients)
    box_origin: tuple[float, float] = (0.0, 0.0)
    min_region_px: int = 25

    def __post_init__(self):
        if self.box_w <= 0 or self.box_h <= 0 or self.px_per_mm <= 0:
            raise ValueError("box extent and scale must be positive")
        if abs(self.canvas_w - self.box_w * self.px_per_mm) > 1e-6 or abs(
            self.canvas_h - self.box_h * self.px_per_mm
        ) > 1e-6:
            raise ValueError("canvas dims must equal box dims times px_per_mm")
        if not (0 < self.fill_threshold < 1 and 0 < self.spill_threshold < 1):
            raise ValueError("thresholds must lie in (0, 1)")
        self.box_origin = (float(self.box_origin[0]), float(self.box_origin[1]))
        self.ingredient_map = {int(k): v for k, v in self.ingredient_map.items()}

    def canvas_to_box_mm(self, p) -> tuple[float, float]:
        return (p[0] / self.px_per_mm, p[1] / self.px_per_mm)

    def box_mm_to_workspace(self, p) -> tuple[float, float]:
        return (p[0] + self.box_origin[0], p[1] + self.box_origin[1])

    def to_json(self) -> dict:
        return {
            "box_w": self.box_w,
            "box_h": self.box_h,
            "canvas_w": self.canvas_w,
            "canvas_h": self.canvas_h,
            "px_per_mm": self.px_per_mm,
            "fill_threshold": self.fill_threshold,
            "spill_threshold": self.spill_threshold,
            "ingredient_map": {str(k): v for k, v in self.ingredient_map.items()},
            "box_origin": list(self.box_origin),
            "min_region_px": self.min_region_px,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BentoParams":
        obj = dict(obj)
        if "ingredient_map" in obj:
            obj["ingredient_map"] = {int(k): v for k, v in obj["ingredient_map"].items()}
        if "box_origin" in obj:
            obj["box_origin"] = tuple(obj["box_origin"])
        return cls(**obj)


@dataclass
class BentoSubtask:
    color_id: int
    ingredient: str
    target_mask: np.ndarray  # camera px, bool
    area_px: int
    rgb: tuple[int, int, int] = (0, 0, 0)


@dataclass
class BentoPlan:
    params: BentoParams
    subtasks: list[BentoSubtask]
    box_mask: np.ndarray  # camera px, bool

    def to_json(self) -> dict:
        return {
            "task": "bento",
            "params": self.params.to_json(),
            "box_mask": rle_encode(self.box_mask),
            "subtasks": [
                {
                    "color": s.color_id,
                    "ingredient": s.ingredient,
                    "mask": rle_encode(s.target_mask),
                    "area_px": s.area_px,
                    "rgb": list(s.rgb),
                }
                for s in self.subtasks
            ],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "BentoPlan":
        params = BentoParams.from_json(obj["params"])
        box = rle_decode(obj["box_mask"])
        subtasks = [
            BentoSubtask(
                int(s["color"]),
                s["ingredient"],
                rle_decode(s["mask"]),
                int(s["area_px"]),
                tuple(s.get("rgb", (0, 0, 0))),
            )
            for s in obj["subtasks"]
        ]
        return cls(params, subtasks, box)


def build_bento_plan(
    doc: SketchDocument, params: BentoParams, profile: CalibrationProfile
) -> BentoPlan:
    """Turn a labeled sketch into per-ingredient camera-space target masks.

    The filtered canvas labels are pulled into camera pixels by inverse
    mapping (each camera pixel looks up the canvas pixel it sees), which
    keeps masks hole-free and pairwise disjoint. Subtasks are ordered by
    descending target area, ties by ascending color id.
    """
    if doc.canvas_w != params.canvas_w or doc.canvas_h != params.canvas_h:
        raise ValueError("sketch canvas does not match the bento canvas")
    labels = doc.labeled_raster()
    regions = extract_color_regions(labels, params.min_region_px)

    # keep only surviving regions of ingredient colors
    filtered = np.full_like(labels, BACKGROUND)
    present = set()
    for r in regions:
        if r.color_id in params.ingredient_map:
            filtered[r.mask] = r.color_id
            present.add(r.color_id)
    if not present:
        raise NoRegions("no ingredient-colored region in the sketch")

    grid = profile.camera_grid_mm()  # (h, w, 2) workspace mm
    ox, oy = params.box_origin
    bx = (grid[:, :, 0] - ox) * params.px_per_mm
    by = (grid[:, :, 1] - oy) * params.px_per_mm
    cxi = np.floor(bx).astype(np.int64)
    cyi = np.floor(by).astype(np.int64)
    box_mask = (cxi >= 0) & (cxi < params.canvas_w) & (cyi >= 0) & (cyi < params.canvas_h)
    cam_labels = np.full(box_mask.shape, BACKGROUND, dtype=np.uint8)
    cam_labels[box_mask] = filtered[cyi[box_mask], cxi[box_mask]]

    # forward check: a sketch whose pixels mostly land outside the camera
    # frame cannot be tracked
    h_fwd = profile.cam_from_workspace
    for color in sorted(present):
        ys, xs = np.nonzero(filtered == color)
        mm = np.column_stack(
            [(xs + 0.5) / params.px_per_mm + ox, (ys + 0.5) / params.px_per_mm + oy]
        )
        cam = h_fwd.apply_array(mm)
        inside = (
            (cam[:, 0] >= 0)
            & (cam[:, 0] < profile.cam_dims[0])
            & (cam[:, 1] >= 0)
            & (cam[:, 1] < profile.cam_dims[1])
        )
        if np.count_nonzero(~inside) > 0.05 * len(inside):
            raise MaskOutsideBox(f"color {color} mostly maps outside the camera frame")

    subtasks = []
    for color in sorted(present):
        mask = cam_labels == color
        area = mask_area(mask)
        if area == 0:
            continue
        subtasks.append(
            BentoSubtask(color, params.ingredient_map[color], mask, area, doc.palette.rgb(color))
        )
    if not subtasks:
        raise NoRegions("no subtask target is visible to the camera")
    subtasks.sort(key=lambda s: (-s.area_px, s.color_id))
    return BentoPlan(params, subtasks, box_mask)


def fill_ratio(target_mask: np.ndarray, occupancy: np.ndarray) -> float:
    """Fraction of the target covered by occupancy."""
    total = mask_area(target_mask)
    if total == 0:
        raise EmptyTarget("target mask has no pixels")
    return mask_area(target_mask & occupancy) / total


def spill_ratio(box_mask: np.ndarray, target_mask: np.ndarray, occupancy: np.ndarray) -> float:
    """Fraction of the in-box non-target area covered by occupancy."""
    non_target = box_mask & ~target_mask
    total = mask_area(non_target)
    if total == 0:
        raise EmptyNonTarget("non-target area has no pixels")
    return mask_area(non_target & occupancy) / total


PENDING, ACTIVE, COMPLETE = "pending", "active", "complete"


@dataclass
class BentoState:
    statuses: list[str]
    active_index: int | None
    fill: list[float]
    spill: float
    all_complete: bool

    def to_json(self) -> dict:
        return {
            "statuses": list(self.statuses),
            "active_index": self.active_index,
            "fill": [round(f, 6) for f in self.fill],
            "spill": round(self.spill, 6),
            "all_complete": self.all_complete,
        }


def initial_bento_state(plan: BentoPlan) -> BentoState:
    statuses = [PENDING] * len(plan.subtasks)
    if statuses:
        statuses[0] = ACTIVE
    return BentoState(statuses, 0 if statuses else None, [0.0] * len(statuses), 0.0, not statuses)


def step_bento_state(state: BentoState, plan: BentoPlan, occupancy: np.ndarray) -> BentoState:
    """Advance the task one frame.

    Completion is sticky: a finished subtask never reopens. The active
    subtask completes when its fill reaches the threshold while spill stays
    under its bound; spill ignores pixels inside already-completed targets.
    At most one subtask completes per step, so every transition is
    observable in the state stream.
    """
    if state.all_complete or state.active_index is None:
        return BentoState(list(state.statuses), state.active_index, list(state.fill), 0.0, True)
    statuses = list(state.statuses)
    fills = [fill_ratio(s.target_mask, occupancy) for s in plan.subtasks]
    idx = state.active_index
    completed_union = np.zeros_like(plan.box_mask)
    for i, s in enumerate(statuses):
        if s == COMPLETE:
            completed_union |= plan.subtasks[i].target_mask
    effective_box = plan.box_mask & ~completed_union
    spill = spill_ratio(effective_box, plan.subtasks[idx].target_mask, occupancy)
    active_index: int | None = idx
    all_complete = False
    if fills[idx] >= plan.params.fill_threshold and spill < plan.params.spill_threshold:
        statuses[idx] = COMPLETE
        pending = [i for i, s in enumerate(statuses) if s == PENDING]
        if pending:
            active_index = pending[0]
            statuses[active_index] = ACTIVE
        else:
            active_index = None
            all_complete = True
    return BentoState(statuses, active_index, fills, spill, all_complete)
