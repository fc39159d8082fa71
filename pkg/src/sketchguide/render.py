"""Guidance overlay rasterization.

Overlays are drawn in camera pixels, where all task state lives, and then
warped once to projector pixels with nearest-neighbor lookup. Pixels the
projector should leave dark have alpha 0. Draw order encodes the color
priority: completion white covers red, red covers green, green covers the
palette color, palette covers black.
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image

from .bento import ACTIVE, COMPLETE, PENDING, BentoPlan, BentoState
from .calibration import CalibrationProfile
from .domino import Assignment, DominoPlan, feedback_color
from .sensing import DetectedBlock

WHITE = (255, 255, 255)
RED = (255, 0, 0)
GREEN = (0, 255, 0)
BLACK = (0, 0, 0)


def _blank(profile: CalibrationProfile) -> np.ndarray:
    w, h = profile.cam_dims
    return np.zeros((h, w, 4), dtype=np.uint8)


def _paint_mask(img: np.ndarray, mask: np.ndarray, rgb) -> None:
    img[mask] = (*rgb, 255)


def _stamp_points(img: np.ndarray, xs: np.ndarray, ys: np.ndarray, rgb) -> None:
    # paint 2x2 blocks for a ~2 px stroke
    h, w = img.shape[:2]
    fx = np.floor(xs).astype(np.int64)
    fy = np.floor(ys).astype(np.int64)
    for dx in (0, 1):
        for dy in (0, 1):
            px, py = fx + dx, fy + dy
            ok = (px >= 0) & (px < w) & (py >= 0) & (py < h)
            img[py[ok], px[ok]] = (*rgb, 255)


def _draw_polygon_outline(img: np.ndarray, corners_px: np.ndarray, rgb) -> None:
    n = len(corners_px)
    for i in range(n):
        a = corners_px[i]
        b = corners_px[(i + 1) % n]
        length = float(np.hypot(*(b - a)))
        steps = max(2, int(np.ceil(length / 0.3)))
        t = np.linspace(0.0, 1.0, steps)
        _stamp_points(img, a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), rgb)


def _local_scale(profile: CalibrationProfile, mm_point) -> tuple[float, float]:
    h = profile.cam_from_workspace
    c = h.apply(mm_point)
    px = h.apply((mm_point[0] + 1.0, mm_point[1]))
    py = h.apply((mm_point[0], mm_point[1] + 1.0))
    sx = float(np.hypot(px[0] - c[0], px[1] - c[1]))
    sy = float(np.hypot(py[0] - c[0], py[1] - c[1]))
    return sx, sy


def _fill_circle_mm(img: np.ndarray, profile: CalibrationProfile, center_mm, radius_mm, rgb) -> None:
    cx, cy = profile.workspace_to_camera(center_mm)
    sx, sy = _local_scale(profile, center_mm)
    rx, ry = max(radius_mm * sx, 1.0), max(radius_mm * sy, 1.0)
    h, w = img.shape[:2]
    x0, x1 = int(np.floor(cx - rx)), int(np.ceil(cx + rx)) + 1
    y0, y1 = int(np.floor(cy - ry)), int(np.ceil(cy + ry)) + 1
    x0, x1 = max(x0, 0), min(x1, w)
    y0, y1 = max(y0, 0), min(y1, h)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.mgrid[y0:y1, x0:x1]
    inside = ((xs - cx) / rx) ** 2 + ((ys - cy) / ry) ** 2 <= 1.0
    img[y0:y1, x0:x1][inside] = (*rgb, 255)


def warp_to_projector(camera_rgba: np.ndarray, profile: CalibrationProfile) -> np.ndarray:
    """Resample a camera-space image onto the projector raster."""
    flat_idx, sy, sx = profile.projector_gather()
    pw, ph = profile.proj_dims
    out = np.zeros((ph, pw, 4), dtype=np.uint8)
    out.reshape(ph * pw, 4)[flat_idx] = camera_rgba[sy, sx]
    return out


def render_domino_overlay(
    plan: DominoPlan,
    assignment: Assignment,
    detections: list[DetectedBlock],
    profile: CalibrationProfile,
) -> np.ndarray:
    """Projector RGBA: white target outlines plus per-block feedback circles.

    Every target footprint gets a 2 px white outline. Each matched detection
    gets a filled circle (radius width/2) at the detected center, colored by
    the feedback ramp; detections matched to nothing are circled red.
    """
    img = _blank(profile)
    h = profile.cam_from_workspace
    for rect in plan.footprints():
        corners_px = h.apply_array(rect.corners())
        _draw_polygon_outline(img, corners_px, WHITE)
    radius = plan.params.width / 2.0
    for _, det_idx, dist in assignment.pairs:
        det = detections[det_idx]
        _fill_circle_mm(img, profile, (det.pose.x, det.pose.y), radius,
                        feedback_color(dist, plan.params))
    for det_idx in assignment.unmatched_detections:
        det = detections[det_idx]
        _fill_circle_mm(img, profile, (det.pose.x, det.pose.y), radius, RED)
    return warp_to_projector(img, profile)


def render_bento_overlay(
    plan: BentoPlan,
    state: BentoState,
    occupancy: np.ndarray,
    profile: CalibrationProfile,
) -> np.ndarray:
    """Projector RGBA for the bento task.

    Pending targets are black (keep clear), the active target shows its
    palette color with occupied pixels green, and occupied non-target box
    pixels show red. Once everything is complete the whole box lights white.
    """
    img = _blank(profile)
    if state.all_complete:
        _paint_mask(img, plan.box_mask, WHITE)
        return warp_to_projector(img, profile)
    completed_union = np.zeros_like(plan.box_mask)
    for i, status in enumerate(state.statuses):
        if status == PENDING:
            _paint_mask(img, plan.subtasks[i].target_mask, BLACK)
        elif status == COMPLETE:
            completed_union |= plan.subtasks[i].target_mask
    if state.active_index is not None:
        active = plan.subtasks[state.active_index]
        _paint_mask(img, active.target_mask, active.rgb)
        _paint_mask(img, active.target_mask & occupancy, GREEN)
        spill_zone = plan.box_mask & ~active.target_mask & ~completed_union
        _paint_mask(img, spill_zone & occupancy, RED)
    return warp_to_projector(img, profile)


def png_bytes(rgba: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(rgba, "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def rgba_from_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGBA"))
