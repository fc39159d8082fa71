import json

import numpy as np
import pytest

from sketchguide.calibration import (
    CAM_DIMS,
    WORKSPACE_MM,
    CalibrationProfile,
    calibrate,
    default_profile,
    detect_marker,
)
from sketchguide.errors import CalibrationRejected
from sketchguide.geometry import Homography


def _pin_grid(h: Homography, xs, ys):
    return [((x, y), tuple(h.apply((x, y)))) for x in xs for y in ys]


def test_default_profile_corners():
    p = default_profile()
    assert p.cam_dims == CAM_DIMS
    assert np.allclose(p.workspace_to_camera((0.0, 0.0)), (0.0, 0.0))
    assert np.allclose(
        p.workspace_to_camera(WORKSPACE_MM), (CAM_DIMS[0] - 1, CAM_DIMS[1] - 1)
    )
    assert p.rms_px == 0.0


def test_default_profile_projector_identity():
    p = default_profile()
    pt = (123.0, 45.0)
    assert np.allclose(p.camera_to_projector(pt), pt)


def test_calibrate_recovers_synthetic_rig():
    cam_from_ws = Homography(
        [[0.9, 0.02, 3.0], [-0.01, 1.32, 7.0], [1e-4, -2e-5, 1.0]]
    )
    proj_from_cam = Homography(
        [[2.1, 0.05, 40.0], [0.03, 2.0, 25.0], [3e-5, 1e-5, 1.0]]
    )
    ws_cam = _pin_grid(cam_from_ws, [0, 190, 380, 572], [0, 160, 321])
    proj_cam = [
        (tuple(proj_from_cam.apply(c)), c) for _, c in ws_cam
    ]
    prof = calibrate(
        proj_cam, ws_cam, CAM_DIMS, (1920, 1080), WORKSPACE_MM
    )
    assert prof.rms_px < 1e-8
    for w, c in ws_cam:
        assert np.allclose(prof.workspace_to_camera(w), c, atol=1e-6)
        assert np.allclose(
            prof.camera_to_projector(c), proj_from_cam.apply(c), atol=1e-6
        )


def test_calibrate_rejects_noisy_rig():
    cam_from_ws = Homography([[0.9, 0.0, 0.0], [0.0, 1.3, 0.0], [0.0, 0.0, 1.0]])
    rng = np.random.default_rng(3)
    ws_cam = []
    for x in np.linspace(0, 572, 4):
        for y in np.linspace(0, 321, 3):
            c = cam_from_ws.apply((x, y)) + rng.normal(0, 6.0, 2)
            ws_cam.append(((x, y), tuple(c)))
    proj_cam = [(c, c) for _, c in ws_cam]
    with pytest.raises(CalibrationRejected):
        calibrate(proj_cam, ws_cam, CAM_DIMS, CAM_DIMS, WORKSPACE_MM)


def test_calibrate_rms_is_max_of_both_fits():
    ident = Homography.identity()
    pins = _pin_grid(ident, [0, 100, 200, 300], [0, 100, 200])
    rng = np.random.default_rng(11)
    noisy_proj = [
        (tuple(np.asarray(p) + rng.normal(0, 0.5, 2)), c) for p, c in pins
    ]
    prof = calibrate(noisy_proj, pins, CAM_DIMS, CAM_DIMS, WORKSPACE_MM)
    assert 0.0 < prof.rms_px <= 2.0
    clean = calibrate(pins, pins, CAM_DIMS, CAM_DIMS, WORKSPACE_MM)
    assert clean.rms_px < prof.rms_px


def test_round_trip_through_json():
    p = default_profile()
    q = CalibrationProfile.from_json(json.loads(json.dumps(p.to_json())))
    assert q.cam_dims == p.cam_dims
    assert q.proj_dims == p.proj_dims
    assert q.workspace_mm == p.workspace_mm
    assert np.allclose(q.cam_from_workspace.mat, p.cam_from_workspace.mat)
    assert np.allclose(q.proj_from_cam.mat, p.proj_from_cam.mat)
    pt = (250.0, 111.0)
    assert np.allclose(q.workspace_to_camera(pt), p.workspace_to_camera(pt))


def test_camera_grid_matches_pointwise_mapping():
    p = default_profile()
    grid = p.camera_grid_mm()
    assert grid.shape == (CAM_DIMS[1], CAM_DIMS[0], 2)
    for px, py in [(0, 0), (511, 423), (100, 222), (37, 5)]:
        assert np.allclose(grid[py, px], p.camera_to_workspace((px, py)), atol=1e-9)


def test_mm2_per_px_uniform_scale():
    # camera maps 1 px per 2 mm on both axes: each pixel covers 4 mm^2
    h = Homography([[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]])
    prof = CalibrationProfile(h, Homography.identity(), (512, 424), (512, 424), (1024.0, 848.0), 0.0)
    assert prof.mm2_per_px((100.0, 100.0)) == pytest.approx(4.0)


def test_mm2_per_px_anisotropic():
    h = Homography([[2.0, 0.0, 0.0], [0.0, 0.25, 0.0], [0.0, 0.0, 1.0]])
    prof = CalibrationProfile(h, Homography.identity(), (512, 424), (512, 424), (256.0, 1696.0), 0.0)
    assert prof.mm2_per_px((50.0, 50.0)) == pytest.approx(2.0)


# --- marker detection ---


def test_detect_marker_centroid():
    ir = np.zeros((424, 512), dtype=np.uint16)
    ir[100:105, 200:205] = 65000
    got = detect_marker(ir)
    assert got is not None
    assert np.allclose(got, (202.0, 102.0))


def test_detect_marker_weighted():
    ir = np.zeros((424, 512), dtype=np.uint16)
    ir[10, 10:12] = (40000, 60000)
    ir[11, 10:12] = (40000, 60000)
    got = detect_marker(ir)
    x = (10 * 40000 * 2 + 11 * 60000 * 2) / (2 * 40000 + 2 * 60000)
    assert got[0] == pytest.approx(x)
    assert got[1] == pytest.approx(10.5)


def test_detect_marker_prefers_largest_blob():
    ir = np.zeros((424, 512), dtype=np.uint16)
    ir[5:7, 5:7] = 65000       # 4 px
    ir[300:306, 300:306] = 35000  # 36 px
    got = detect_marker(ir)
    assert np.allclose(got, (302.5, 302.5))


def test_detect_marker_ignores_dim_and_tiny():
    ir = np.zeros((424, 512), dtype=np.uint16)
    ir[50:60, 50:60] = 20000  # below threshold
    ir[0, 0:3] = 65000        # 3 px, too small
    assert detect_marker(ir) is None
