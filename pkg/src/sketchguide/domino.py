"""Domino run planning, validation, topple prediction and placement feedback.

All geometry is in workspace millimeters. A block footprint is width x
thickness on the desk with the long axis (width) perpendicular to the
stroke, so consecutive blocks face each other across the thickness gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleStroke
from .geometry import OrientedRect, Pose2, normalize_angle, rects_intersect
from .sensing import DetectedBlock


@dataclass
class DominoParams:
    width: float = 23.0
    height: float = 46.0
    thickness: float = 8.0
    center_spacing: float = 28.0
    correct_mm: float = 5.0
    yellow_mm: float = 10.0
    red_mm: float = 20.0
    max_turn_deg: float = 25.0
    min_contact_height_frac: float = 0.3
    min_width_overlap_frac: float = 0.5

    def __post_init__(self):
        if not (0 < self.thickness < self.width < self.height):
            raise ValueError("need 0 < thickness < width < height")
        gap = self.center_spacing - self.thickness
        if not (2.0 <= gap < self.height):
            raise ValueError("center_spacing - thickness must lie in [2 mm, height)")
        if not (0 < self.correct_mm < self.yellow_mm < self.red_mm):
            raise ValueError("need 0 < correct_mm < yellow_mm < red_mm")
        if not (0 < self.min_contact_height_frac < 1 and 0 < self.min_width_overlap_frac <= 1):
            raise ValueError("fractions must lie in (0, 1)")

    def footprint_mm2(self) -> float:
        return self.width * self.thickness

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_json(cls, obj: dict) -> "DominoParams":
        return cls(**obj)


@dataclass
class Violation:
    kind: str  # "overlap" | "spacing" | "turn"
    index: int  # first target index involved
    value: float
    limit: float

    def message(self) -> str:
        return f"{self.kind} at target {self.index}: {self.value:.3f} vs limit {self.limit:.3f}"


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [
                {"kind": v.kind, "index": v.index, "value": v.value, "limit": v.limit}
                for v in self.violations
            ],
        }


@dataclass
class DominoPlan:
    params: DominoParams
    targets: list[Pose2]

    def footprints(self) -> list[OrientedRect]:
        return [OrientedRect(t, self.params.width, self.params.thickness) for t in self.targets]

    def to_json(self) -> dict:
        return {
            "task": "domino",
            "params": self.params.to_json(),
            "targets": [{"x": t.x, "y": t.y, "theta": t.theta} for t in self.targets],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DominoPlan":
        params = DominoParams.from_json(obj["params"])
        targets = [Pose2(t["x"], t["y"], t["theta"]) for t in obj["targets"]]
        return cls(params, targets)


def _tangents_at(points: np.ndarray, cum: np.ndarray, svals: np.ndarray) -> np.ndarray:
    seg = np.diff(points, axis=0)
    lens = np.hypot(seg[:, 0], seg[:, 1])
    idx = np.searchsorted(cum, svals, side="right") - 1
    idx = np.clip(idx, 0, len(seg) - 1)
    # a zero-length segment cannot happen after dedupe
    return seg[idx] / lens[idx][:, None]


def plan_dominoes(stroke_mm, params: DominoParams | None = None) -> DominoPlan:
    """Place block targets along a cleaned stroke given in workspace mm.

    Centers sit at arc-length multiples of center_spacing measured along
    the polyline; each block's long axis is perpendicular to the local
    tangent. The resulting plan is validated; a stroke whose plan violates
    any check raises InfeasibleStroke carrying the report.
    """
    if params is None:
        params = DominoParams()
    pts = np.asarray(getattr(stroke_mm, "points", stroke_mm), dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise InfeasibleStroke("stroke needs at least two points")
    keep = np.ones(len(pts), dtype=bool)
    keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
    pts = pts[keep]
    if len(pts) < 2:
        raise InfeasibleStroke("stroke collapses to a point")
    seg = np.diff(pts, axis=0)
    cum = np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])
    length = cum[-1]
    if length < params.center_spacing:
        raise InfeasibleStroke(
            f"stroke is {length:.1f} mm, shorter than one spacing ({params.center_spacing} mm)"
        )
    n_steps = int(math.floor((length + 1e-9 * max(length, 1.0)) / params.center_spacing))
    svals = np.minimum(np.arange(n_steps + 1) * params.center_spacing, length)
    cx = np.interp(svals, cum, pts[:, 0])
    cy = np.interp(svals, cum, pts[:, 1])
    tangents = _tangents_at(pts, cum, svals)
    targets = []
    for x, y, (tx, ty) in zip(cx, cy, tangents):
        theta = normalize_angle(math.atan2(ty, tx) + math.pi / 2.0)
        targets.append(Pose2(float(x), float(y), theta))
    plan = DominoPlan(params, targets)
    report = validate_plan(plan)
    if not report.ok:
        first = report.violations[0]
        raise InfeasibleStroke(f"stroke yields an invalid plan: {first.message()}", report)
    return plan


def validate_plan(plan: DominoPlan) -> ValidationReport:
    """Check overlaps, consecutive spacing, and per-step turn.

    Spacing must stay within [0.9, 1.1] x center_spacing and turn within
    max_turn_deg. Overlap is tested pairwise for targets whose centers are
    within 2 x center_spacing of each other.
    """
    p = plan.params
    report = ValidationReport()
    rects = plan.footprints()
    centers = np.array([[t.x, t.y] for t in plan.targets])
    n = len(rects)
    near = 2.0 * p.center_spacing
    for i in range(n):
        for j in range(i + 1, n):
            if np.hypot(*(centers[j] - centers[i])) <= near and rects_intersect(rects[i], rects[j]):
                report.violations.append(Violation("overlap", i, 1.0, 0.0))
    lo, hi = 0.9 * p.center_spacing, 1.1 * p.center_spacing
    max_turn = math.radians(p.max_turn_deg)
    for i in range(n - 1):
        d = float(np.hypot(*(centers[i + 1] - centers[i])))
        if not (lo <= d <= hi):
            report.violations.append(Violation("spacing", i, d, lo if d < lo else hi))
        turn = abs(normalize_angle(plan.targets[i + 1].theta - plan.targets[i].theta))
        if turn > max_turn:
            report.violations.append(Violation("turn", i, math.degrees(turn), p.max_turn_deg))
    return report


@dataclass
class ToppleResult:
    fell: list[bool]
    first_break: int | None  # index of the first standing block, None if all fell


def contact_height(gap_mm: float, height_mm: float) -> float:
    """Height at which a tipping block of height_mm meets a face gap_mm away."""
    g = max(gap_mm, 0.0)
    if g >= height_mm:
        return 0.0
    return math.sqrt(height_mm * height_mm - g * g)


def topple_simulate(plan: DominoPlan, params: DominoParams | None = None) -> ToppleResult:
    """Quasi-static chain prediction: does pushing block 0 fell them all?

    Block i+1 falls iff the face gap is under the block height, the tipping
    contact lands at or above min_contact_height_frac of the height, and the
    lateral width overlap is at least min_width_overlap_frac of the width.
    The fallen set is always a prefix; first_break is the earliest survivor.
    """
    p = params or plan.params
    n = len(plan.targets)
    fell = [False] * n
    if n == 0:
        return ToppleResult(fell, None)
    fell[0] = True
    for i in range(n - 1):
        if not fell[i]:
            break
        a, b = plan.targets[i], plan.targets[i + 1]
        delta = np.array([b.x - a.x, b.y - a.y])
        long_axis = np.array([math.cos(a.theta), math.sin(a.theta)])
        fwd = np.array([-long_axis[1], long_axis[0]])
        if float(fwd @ delta) < 0:
            fwd = -fwd
        d_along = float(fwd @ delta)
        lateral = abs(float(long_axis @ delta))
        gap = d_along - p.thickness
        falls = (
            gap < p.height
            and contact_height(gap, p.height) >= p.min_contact_height_frac * p.height
            and (p.width - lateral) >= p.min_width_overlap_frac * p.width
        )
        if falls:
            fell[i + 1] = True
        else:
            break
    first_break = None
    for i, f in enumerate(fell):
        if not f:
            first_break = i
            break
    return ToppleResult(fell, first_break)


def feedback_color(distance_mm: float, params: DominoParams | None = None) -> tuple[int, int, int]:
    """Placement feedback ramp: green within correct_mm, then through yellow to red.

    Piecewise linear and continuous; red rises on (correct, yellow], green
    falls on (yellow, red], blue stays 0.
    """
    p = params or DominoParams()
    d = float(distance_mm)
    if d <= p.correct_mm:
        return (0, 255, 0)
    if d <= p.yellow_mm:
        t = (d - p.correct_mm) / (p.yellow_mm - p.correct_mm)
        return (int(round(255 * t)), 255, 0)
    if d <= p.red_mm:
        t = (d - p.yellow_mm) / (p.red_mm - p.yellow_mm)
        return (255, int(round(255 * (1.0 - t))), 0)
    return (255, 0, 0)


@dataclass
class Assignment:
    pairs: list[tuple[int, int, float]]  # (target index, detection index, distance mm)
    unmatched_targets: list[int]
    unmatched_detections: list[int]


def match_detections(
    plan: DominoPlan, detections: list[DetectedBlock], params: DominoParams | None = None
) -> Assignment:
    """Greedy globally-nearest assignment of detections to plan targets.

    Repeatedly commits the closest remaining (target, detection) pair until
    nothing is left within 2 x red_mm. Distances are center-to-center.
    """
    p = params or plan.params
    cap = 2.0 * p.red_mm
    nt, nd = len(plan.targets), len(detections)
    if nt == 0 or nd == 0:
        return Assignment([], list(range(nt)), list(range(nd)))
    tc = np.array([[t.x, t.y] for t in plan.targets])
    dc = np.array([[d.pose.x, d.pose.y] for d in detections])
    dist = np.hypot(
        tc[:, None, 0] - dc[None, :, 0], tc[:, None, 1] - dc[None, :, 1]
    )
    free_t = set(range(nt))
    free_d = set(range(nd))
    pairs = []
    work = dist.copy()
    while free_t and free_d:
        i, j = np.unravel_index(np.argmin(work), work.shape)
        if work[i, j] > cap:
            break
        pairs.append((int(i), int(j), float(dist[i, j])))
        free_t.discard(int(i))
        free_d.discard(int(j))
        work[i, :] = np.inf
        work[:, j] = np.inf
    pairs.sort(key=lambda t: t[0])
    return Assignment(pairs, sorted(free_t), sorted(free_d))
