"""Depth-based occupancy sensing and block detection.

A baseline environment map is captured from a burst of frames; occupancy
is then a per-pixel depth lift test against that baseline, cleaned with a
morphological opening.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .calibration import CalibrationProfile
from .errors import DimMismatch, EmptyInput
from .frames import DepthFrame
from .geometry import Pose2, normalize_axis_angle

# A surface must sit at least this far above the baseline to count.
LIFT_THRESHOLD_MM = 8.0


@dataclass
class EnvironmentMap:
    """Per-pixel baseline depth (mm) with a validity mask."""

    baseline: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if self.baseline.shape != self.valid.shape:
            raise DimMismatch("baseline and validity shapes differ")


def capture_environment(frames: list[DepthFrame]) -> EnvironmentMap:
    """Median-combine a burst of depth frames into a baseline.

    Zero samples are sensor dropouts and are ignored; a pixel that is
    nonzero in fewer than half the frames is marked invalid.
    """
    if not frames:
        raise EmptyInput("environment capture needs at least one frame")
    shape = frames[0].data.shape
    for f in frames:
        if f.data.shape != shape:
            raise DimMismatch("environment frames must share one shape")
    stack = np.stack([f.data for f in frames]).astype(np.float64)
    nonzero = stack > 0
    count = nonzero.sum(axis=0)
    valid = count >= len(frames) / 2.0
    masked = np.where(nonzero, stack, np.nan)
    with np.errstate(all="ignore"):
        baseline = np.nanmedian(masked, axis=0)
    baseline = np.where(valid, baseline, 0.0)
    return EnvironmentMap(baseline, valid)


def occupancy_mask(
    env: EnvironmentMap, frame: DepthFrame, threshold_mm: float = LIFT_THRESHOLD_MM
) -> np.ndarray:
    """Pixels strictly more than threshold_mm above the baseline.

    A bit is set iff the baseline is valid, the frame sample is nonzero,
    and baseline - depth > threshold_mm. A lift of exactly threshold_mm
    does not count.
    """
    if frame.data.shape != env.baseline.shape:
        raise DimMismatch("frame shape differs from environment")
    depth = frame.data.astype(np.float64)
    return env.valid & (frame.data > 0) & ((env.baseline - depth) > threshold_mm)


def denoise_mask(mask: np.ndarray, radius: int = 1) -> np.ndarray:
    """Morphological opening with a square element of side 2*radius + 1."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return mask.copy()
    elem = np.ones((2 * radius + 1, 2 * radius + 1), dtype=bool)
    return ndimage.binary_opening(mask, structure=elem)


@dataclass
class DetectedBlock:
    """One physical block found in the occupancy mask."""

    pose: Pose2  # workspace mm; theta is the long axis in [-pi/2, pi/2)
    area_px: int
    height_mm: float | None = None


def detect_blocks(
    mask: np.ndarray,
    profile: CalibrationProfile,
    footprint_mm2: float,
    tolerance: float = 0.5,
    lift_mm: np.ndarray | None = None,
) -> list[DetectedBlock]:
    """Find block-sized 4-connected components and estimate their poses.

    Components whose physical area is outside [1 - tolerance, 1 + tolerance]
    times footprint_mm2 are discarded. Centroid and orientation are computed
    in workspace millimeters; orientation is the principal axis of the
    second central moments, wrapped to [-pi/2, pi/2). When a lift image is
    supplied the mean lift over the component becomes the block height.
    """
    if footprint_mm2 <= 0:
        raise ValueError("footprint_mm2 must be positive")
    comp, n = ndimage.label(mask)
    if n == 0:
        return []
    grid = profile.camera_grid_mm()
    lo = (1.0 - tolerance) * footprint_mm2
    hi = (1.0 + tolerance) * footprint_mm2
    blocks: list[DetectedBlock] = []
    objects = ndimage.find_objects(comp)
    for k in range(n):
        sl = objects[k]
        local = comp[sl] == (k + 1)
        area_px = int(np.count_nonzero(local))
        ys, xs = np.nonzero(local)
        cy = ys.mean() + sl[0].start
        cx = xs.mean() + sl[1].start
        area_mm2 = area_px * profile.mm2_per_px((cx, cy))
        if not (lo <= area_mm2 <= hi):
            continue
        pts = grid[sl][local]  # (area_px, 2) workspace mm
        center = pts.mean(axis=0)
        d = pts - center
        mu20 = float(np.mean(d[:, 0] ** 2))
        mu02 = float(np.mean(d[:, 1] ** 2))
        mu11 = float(np.mean(d[:, 0] * d[:, 1]))
        theta = normalize_axis_angle(0.5 * math.atan2(2.0 * mu11, mu20 - mu02))
        height = None
        if lift_mm is not None:
            height = float(np.mean(lift_mm[sl][local]))
        blocks.append(
            DetectedBlock(Pose2(float(center[0]), float(center[1]), theta), area_px, height)
        )
    return blocks
