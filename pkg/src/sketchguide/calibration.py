"""Projector-camera-workspace calibration.

Three frames are chained by two homographies: workspace millimeters to
depth-camera pixels, and camera pixels to projector pixels. Both maps are
fitted from clicked pin correspondences; a fit whose residual exceeds the
acceptance bound is rejected outright.
"""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import CalibrationRejected
from .frames import IRFrame
from .geometry import Homography, homography_from_correspondences, warp_grid

CAM_DIMS = (512, 424)
WORKSPACE_MM = (572.0, 321.0)

# Residual above this (px RMS) means the pins are unusable.
MAX_RMS_PX = 2.0


class CalibrationProfile:
    """Fitted rig geometry. Treat instances as immutable after construction."""

    def __init__(
        self,
        cam_from_workspace: Homography,
        proj_from_cam: Homography,
        cam_dims: tuple[int, int] = CAM_DIMS,
        proj_dims: tuple[int, int] = CAM_DIMS,
        workspace_mm: tuple[float, float] = WORKSPACE_MM,
        rms_px: float = 0.0,
    ):
        if cam_dims[0] <= 0 or cam_dims[1] <= 0 or proj_dims[0] <= 0 or proj_dims[1] <= 0:
            raise ValueError("pixel dims must be positive")
        if workspace_mm[0] <= 0 or workspace_mm[1] <= 0:
            raise ValueError("workspace extent must be positive")
        self.cam_from_workspace = cam_from_workspace
        self.proj_from_cam = proj_from_cam
        self.cam_dims = (int(cam_dims[0]), int(cam_dims[1]))
        self.proj_dims = (int(proj_dims[0]), int(proj_dims[1]))
        self.workspace_mm = (float(workspace_mm[0]), float(workspace_mm[1]))
        self.rms_px = float(rms_px)
        self._cam_grid_mm = None
        self._proj_gather = None

    # point mapping helpers

    def workspace_to_camera(self, p):
        return self.cam_from_workspace.apply(p)

    def camera_to_workspace(self, p):
        return self.cam_from_workspace.inverse().apply(p)

    def camera_to_projector(self, p):
        return self.proj_from_cam.apply(p)

    def workspace_to_projector(self, p):
        return self.proj_from_cam.apply(self.cam_from_workspace.apply(p))

    def projector_to_workspace(self, p):
        return self.cam_from_workspace.inverse().apply(self.proj_from_cam.inverse().apply(p))

    def camera_grid_mm(self) -> np.ndarray:
        """(cam_h, cam_w, 2) workspace coordinates of every camera pixel center.

        Computed once and cached; the profile must not be mutated afterwards.
        """
        if self._cam_grid_mm is None:
            w, h = self.cam_dims
            xs, ys = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
            pts = np.column_stack([xs.ravel(), ys.ravel()])
            mm = self.cam_from_workspace.inverse().apply_array(pts)
            self._cam_grid_mm = mm.reshape(h, w, 2)
            self._cam_grid_mm.setflags(write=False)
        return self._cam_grid_mm

    def projector_gather(self):
        """Cached nearest-neighbor gather map for camera -> projector warps."""
        if self._proj_gather is None:
            self._proj_gather = warp_grid(
                self.proj_from_cam,
                self.proj_dims[0],
                self.proj_dims[1],
                self.cam_dims[0],
                self.cam_dims[1],
            )
        return self._proj_gather

    def mm2_per_px(self, cam_point) -> float:
        """Local workspace area covered by one camera pixel at `cam_point`."""
        return abs(self.cam_from_workspace.inverse().jacobian_det(cam_point))

    def to_json(self) -> dict:
        return {
            "cam_from_workspace": self.cam_from_workspace.to_flat(),
            "proj_from_cam": self.proj_from_cam.to_flat(),
            "cam": {"w": self.cam_dims[0], "h": self.cam_dims[1]},
            "proj": {"w": self.proj_dims[0], "h": self.proj_dims[1]},
            "workspace_mm": {"w": self.workspace_mm[0], "h": self.workspace_mm[1]},
            "rms": self.rms_px,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "CalibrationProfile":
        return cls(
            Homography.from_flat(obj["cam_from_workspace"]),
            Homography.from_flat(obj["proj_from_cam"]),
            (obj["cam"]["w"], obj["cam"]["h"]),
            (obj["proj"]["w"], obj["proj"]["h"]),
            (obj["workspace_mm"]["w"], obj["workspace_mm"]["h"]),
            obj.get("rms", 0.0),
        )


def calibrate(
    pin_pairs_proj_cam,
    pin_pairs_workspace_cam,
    cam_dims: tuple[int, int] = CAM_DIMS,
    proj_dims: tuple[int, int] = CAM_DIMS,
    workspace_mm: tuple[float, float] = WORKSPACE_MM,
    max_rms_px: float = MAX_RMS_PX,
) -> CalibrationProfile:
    """Fit both homographies from pin correspondences.

    pin_pairs_proj_cam holds (projector_px, camera_px) pairs and yields the
    camera -> projector map; pin_pairs_workspace_cam holds (workspace_mm,
    camera_px) pairs and yields the workspace -> camera map. The profile
    records the worse of the two RMS residuals and is rejected when it
    exceeds max_rms_px.
    """
    proj_from_cam, rms_p = homography_from_correspondences(
        [(cam, proj) for proj, cam in pin_pairs_proj_cam]
    )
    cam_from_workspace, rms_w = homography_from_correspondences(
        [(ws, cam) for ws, cam in pin_pairs_workspace_cam]
    )
    rms = max(rms_p, rms_w)
    if rms > max_rms_px:
        raise CalibrationRejected(f"residual {rms:.3f} px exceeds {max_rms_px} px")
    return CalibrationProfile(
        cam_from_workspace, proj_from_cam, cam_dims, proj_dims, workspace_mm, rms
    )


def default_profile(
    cam_dims: tuple[int, int] = CAM_DIMS,
    proj_dims: tuple[int, int] | None = None,
    workspace_mm: tuple[float, float] = WORKSPACE_MM,
) -> CalibrationProfile:
    """Axis-aligned rig: workspace corners onto camera corners, projector = camera."""
    if proj_dims is None:
        proj_dims = cam_dims
    w_mm, h_mm = workspace_mm
    cw, ch = cam_dims
    corners_ws = [(0.0, 0.0), (w_mm, 0.0), (w_mm, h_mm), (0.0, h_mm)]
    corners_cam = [(0.0, 0.0), (cw - 1.0, 0.0), (cw - 1.0, ch - 1.0), (0.0, ch - 1.0)]
    cam_from_workspace, _ = homography_from_correspondences(list(zip(corners_ws, corners_cam)))
    if proj_dims == cam_dims:
        proj_from_cam = Homography.identity()
    else:
        pw, ph = proj_dims
        corners_proj = [(0.0, 0.0), (pw - 1.0, 0.0), (pw - 1.0, ph - 1.0), (0.0, ph - 1.0)]
        proj_from_cam, _ = homography_from_correspondences(
            list(zip(corners_cam, corners_proj))
        )
    return CalibrationProfile(
        cam_from_workspace, proj_from_cam, cam_dims, proj_dims, workspace_mm, 0.0
    )


def detect_marker(ir, min_intensity: int = 30000) -> tuple[float, float] | None:
    """Locate a bright marker blob in an IR frame.

    Takes the largest 4-connected component of pixels at or above
    min_intensity and returns its intensity-weighted centroid in camera px.
    Returns None when nothing qualifies or the largest blob has fewer than
    4 pixels. Accepts an IRFrame or a bare uint16 array.
    """
    data = ir.data if isinstance(ir, IRFrame) else np.asarray(ir)
    bright = data >= min_intensity
    if not bright.any():
        return None
    comp, n = ndimage.label(bright)
    counts = np.bincount(comp.ravel())[1:]
    best = int(np.argmax(counts)) + 1
    if counts[best - 1] < 4:
        return None
    ys, xs = np.nonzero(comp == best)
    weights = data[ys, xs].astype(np.float64)
    total = weights.sum()
    return (float((xs * weights).sum() / total), float((ys * weights).sum() / total))
