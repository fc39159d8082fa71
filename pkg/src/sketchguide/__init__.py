"""Projection-guided task instruction from user sketches.

A sketch drawn on a canvas becomes a physical task plan (a domino run or a
bento arrangement); depth frames of the desk drive per-frame guidance
overlays rendered in projector pixels.
"""

__version__ = "0.1.0"

from .bento import BentoParams, BentoPlan, build_bento_plan, fill_ratio, spill_ratio
from .calibration import CalibrationProfile, calibrate, default_profile, detect_marker
from .domino import (
    DominoParams,
    DominoPlan,
    feedback_color,
    match_detections,
    plan_dominoes,
    topple_simulate,
    validate_plan,
)
from .frames import DepthFrame, IRFrame, decode_depth_frame, encode_depth_frame
from .geometry import Homography, OrientedRect, Pose2, homography_from_correspondences
from .sensing import EnvironmentMap, capture_environment, denoise_mask, detect_blocks, occupancy_mask
from .session import Session, SessionConfig, SessionManager
from .simulator import Scene, ScenarioScript, render_depth, render_ir, run_script
from .sketch import Palette, SketchDocument, Stroke

__all__ = [
    "BentoParams",
    "BentoPlan",
    "CalibrationProfile",
    "DepthFrame",
    "DominoParams",
    "DominoPlan",
    "EnvironmentMap",
    "Homography",
    "IRFrame",
    "OrientedRect",
    "Palette",
    "Pose2",
    "Scene",
    "ScenarioScript",
    "Session",
    "SessionConfig",
    "SessionManager",
    "SketchDocument",
    "Stroke",
    "build_bento_plan",
    "calibrate",
    "capture_environment",
    "decode_depth_frame",
    "default_profile",
    "denoise_mask",
    "detect_blocks",
    "detect_marker",
    "encode_depth_frame",
    "feedback_color",
    "fill_ratio",
    "homography_from_correspondences",
    "match_detections",
    "occupancy_mask",
    "plan_dominoes",
    "render_depth",
    "render_ir",
    "run_script",
    "spill_ratio",
    "topple_simulate",
    "validate_plan",
]
