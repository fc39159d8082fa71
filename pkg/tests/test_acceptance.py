"""Acceptance suite: each test pins one shipped guarantee end to end.

The terminal summary (see conftest) prints one PASS/FAIL line per test so
the whole contract is auditable at a glance. Runtime budgets are asserted
inside the tests that carry one.
"""

import json
import math
import time

import numba
import numpy as np
import pytest
from scipy import ndimage

from sketchguide.bento import (
    BentoParams,
    BentoPlan,
    BentoSubtask,
    initial_bento_state,
    step_bento_state,
)
from sketchguide.calibration import default_profile
from sketchguide.domino import (
    DominoParams,
    contact_height,
    feedback_color,
    plan_dominoes,
    topple_simulate,
    validate_plan,
)
from sketchguide.errors import InfeasibleStroke
from sketchguide.frames import DepthFrame
from sketchguide.geometry import Homography, homography_from_correspondences, rects_intersect
from sketchguide.report import report_json_bytes
from sketchguide.sensing import EnvironmentMap, capture_environment, denoise_mask, occupancy_mask
from sketchguide.session import Session, SessionConfig
from sketchguide.simulator import ScenarioScript, render_depth, run_script
from sketchguide.sketch import BACKGROUND


# 1. calibration ------------------------------------------------------------


def test_calibration_recovers_projective_rig():
    t0 = time.perf_counter()
    true = Homography(
        [[0.88, 0.04, 6.0], [-0.03, 1.29, 11.0], [2.0e-4, -1.1e-4, 1.0]]
    )
    fit_ws = [
        (0.0, 0.0), (572.0, 0.0), (0.0, 321.0), (572.0, 321.0),
        (190.0, 110.0), (380.0, 110.0), (190.0, 220.0), (470.0, 260.0),
    ]
    held_out = [
        (w, h) for w in np.linspace(40, 540, 6) for h in np.linspace(30, 300, 5)
    ]

    def held_out_rms(h_fit):
        errs = [
            np.linalg.norm(np.asarray(h_fit.apply(p)) - true.apply(p))
            for p in held_out
        ]
        return float(np.sqrt(np.mean(np.square(errs))))

    clean_pairs = [(p, tuple(true.apply(p))) for p in fit_ws]
    h_clean, _ = homography_from_correspondences(clean_pairs)
    assert held_out_rms(h_clean) <= 1e-6

    rng = np.random.default_rng(2024)
    noisy_pairs = [
        (p, tuple(np.asarray(true.apply(p)) + rng.normal(0.0, 0.2, 2)))
        for p in fit_ws
    ]
    h_noisy, _ = homography_from_correspondences(noisy_pairs)
    assert held_out_rms(h_noisy) <= 0.5

    assert time.perf_counter() - t0 < 1.0


# 2. occupancy equals the per-pixel definition ------------------------------


@numba.njit(cache=True)
def _occupancy_oracle(baseline, valid, depth, threshold):
    h, w = depth.shape
    out = np.zeros((h, w), dtype=np.bool_)
    for y in range(h):
        for x in range(w):
            out[y, x] = (
                valid[y, x]
                and depth[y, x] > 0
                and (baseline[y, x] - depth[y, x]) > threshold
            )
    return out


def test_occupancy_bit_identical_to_oracle():
    _occupancy_oracle(
        np.zeros((2, 2)), np.ones((2, 2), np.bool_), np.zeros((2, 2), np.uint16), 8.0
    )  # compile outside the timed section
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    boundary_checked = 0
    for _ in range(100):
        baseline = rng.integers(600, 1000, (424, 512)).astype(np.float64)
        valid = rng.random((424, 512)) > 0.05
        depth = rng.integers(0, 1100, (424, 512)).astype(np.uint16)
        # pin pixels sitting exactly on the 8.0 mm boundary
        ys = rng.integers(0, 424, 50)
        xs = rng.integers(0, 512, 50)
        depth[ys, xs] = (baseline[ys, xs] - 8.0).astype(np.uint16)
        valid[ys, xs] = True
        env = EnvironmentMap(baseline, valid)
        got = occupancy_mask(env, DepthFrame(depth, 0))
        want = _occupancy_oracle(baseline, valid, depth, 8.0)
        assert np.array_equal(got, want)
        exact = (baseline - depth == 8.0) & valid & (depth > 0)
        assert not got[exact].any()  # strict threshold: 8.0 itself is excluded
        boundary_checked += int(exact.sum())
    assert boundary_checked >= 100 * 50
    assert time.perf_counter() - t0 < 10.0


# 3. domino planning --------------------------------------------------------


def test_domino_planning_straight_and_arcs():
    t0 = time.perf_counter()
    plan = plan_dominoes(np.array([[0.0, 0.0], [280.0, 0.0]]))
    assert len(plan.targets) == 11
    centers = np.array([[t.x, t.y] for t in plan.targets])
    gaps = np.hypot(*np.diff(centers, axis=0).T)
    assert np.all(np.abs(gaps - 28.0) <= 1e-6)
    rects = plan.footprints()
    for i in range(len(rects)):
        for j in range(i + 1, len(rects)):
            assert not rects_intersect(rects[i], rects[j])
    result = topple_simulate(plan)
    assert all(result.fell)

    angles = np.linspace(0.0, 1.4, 281)
    arc200 = np.column_stack([200.0 * np.cos(angles), 200.0 * np.sin(angles)])
    plan200 = plan_dominoes(arc200)
    assert validate_plan(plan200).ok

    arc30 = np.column_stack(
        [30.0 * np.cos(np.linspace(0, 3.0, 91)), 30.0 * np.sin(np.linspace(0, 3.0, 91))]
    )
    with pytest.raises(InfeasibleStroke) as ei:
        plan_dominoes(arc30)
    assert any(v.kind == "turn" for v in ei.value.report.violations)
    assert time.perf_counter() - t0 < 1.0


# 4. topple closed form ------------------------------------------------------


def test_topple_contact_height_closed_form():
    falls = contact_height(20.0, 46.0)
    breaks = contact_height(44.0, 46.0)
    assert abs(falls - math.sqrt(46.0**2 - 20.0**2)) <= 1e-9
    assert abs(breaks - math.sqrt(46.0**2 - 44.0**2)) <= 1e-9
    floor = 0.3 * 46.0
    assert falls >= floor
    assert breaks < floor

    from sketchguide.domino import DominoPlan
    from sketchguide.geometry import Pose2

    p = DominoParams()

    def pair_at_gap(gap):
        targets = [Pose2(0, 0, math.pi / 2), Pose2(gap + p.thickness, 0, math.pi / 2)]
        return topple_simulate(DominoPlan(p, targets))

    assert pair_at_gap(20.0).fell == [True, True]
    assert pair_at_gap(44.0).fell == [True, False]


# 5. feedback ramp -----------------------------------------------------------


def test_feedback_ramp_bands_and_continuity():
    assert feedback_color(25.0) == (255, 0, 0)
    assert feedback_color(10.0) == (255, 255, 0)
    for d in (0.0, 2.5, 5.0):
        assert feedback_color(d) == (0, 255, 0)
    samples = np.array(
        [feedback_color(float(d)) for d in np.arange(0.0, 30.0 + 1e-9, 0.1)]
    )
    assert np.all(np.diff(samples[:, 0]) >= 0)
    assert np.all(np.diff(samples[:, 1]) <= 0)
    assert np.all(samples[:, 2] == 0)
    assert np.max(np.abs(np.diff(samples[:, 0]))) <= 6  # 0.1 mm never jumps a band
    assert np.max(np.abs(np.diff(samples[:, 1]))) <= 6


# 6. bento thresholds at the boundary ----------------------------------------


def _boundary_plan():
    box = np.zeros((60, 100), dtype=bool)
    box[:50, :60] = True
    target = np.zeros_like(box)
    target[:20, :50] = True  # 1000 px; non-target in box: 2000 px
    plan = BentoPlan(
        BentoParams(),
        [BentoSubtask(0, "broccoli", target, 1000, (0, 160, 0))],
        box,
    )
    return plan, target


def _occ(target, box, fill_px, spill_px):
    occ = np.zeros_like(target)
    occ.flat[np.flatnonzero(target)[:fill_px]] = True
    occ.flat[np.flatnonzero(box & ~target)[:spill_px]] = True
    return occ


def test_bento_thresholds_at_boundary():
    plan, target = _boundary_plan()
    box = plan.box_mask
    non_target = int((box & ~target).sum())
    spill_200 = int(0.2 * non_target)

    s1 = step_bento_state(initial_bento_state(plan), plan, _occ(target, box, 699, 0))
    assert s1.statuses == ["active"]

    s2 = step_bento_state(initial_bento_state(plan), plan, _occ(target, box, 700, spill_200 - 1))
    assert s2.statuses == ["complete"]
    assert s2.all_complete

    s3 = step_bento_state(
        initial_bento_state(plan), plan, _occ(target, box, 700, spill_200)
    )
    assert s3.statuses == ["active"]
    assert s3.fill[0] == 0.7
    assert s3.spill == 0.2


# 7. end-to-end domino -------------------------------------------------------


def _domino_scenario():
    # offsets within 3 mm of each target, fixed so the script is a constant;
    # adjacent along-axis approach kept under 3 mm so neighbouring feedback
    # discs (radius 11.5 mm at 28 mm pitch) stay separate after rasterization
    offsets = [
        (1.2, -0.8), (-1.4, 0.4), (0.0, 2.6), (1.9, 1.1), (-0.9, -2.2),
        (1.8, 1.8), (-1.1, 0.5), (0.5, -1.4), (2.3, 0.3), (-0.6, 2.3), (0.7, 0.0),
    ]
    events = [
        {
            "op": "place",
            "rect": {
                "x": 100.0 + 28.0 * i + dx,
                "y": 150.0 + dy,
                "theta": math.pi / 2,
                "w": 23.0,
                "t": 8.0,
            },
            "height": 46.0,
        }
        for i, (dx, dy) in enumerate(offsets)
    ]
    events += [
        {"op": "frame"},
        {"op": "assert", "path": "phase", "expect": "done"},
        {"op": "assert", "path": "guidance.complete", "expect": True},
        {"op": "assert", "path": "guidance.matched_count", "expect": 11},
    ]
    return ScenarioScript.from_json({"seed": 424242, "events": events})


def _run_domino_once():
    config = SessionConfig(task="domino", source="simulator", noise_sigma_mm=2.0)
    session = Session(config, session_id="acceptance-domino")
    session.submit_sketch(
        {
            "canvas": {"w": 572, "h": 321},
            "palette": [{"id": 0, "rgb": [0, 0, 0]}],
            "strokes": [{"color": 0, "pts": [[100.0, 150.0], [380.0, 150.0]]}],
        }
    )
    report, overlays = run_script(_domino_scenario(), session)
    return report, overlays


def test_domino_end_to_end_seeded():
    t0 = time.perf_counter()
    report_a, overlays_a = _run_domino_once()
    report_b, overlays_b = _run_domino_once()

    assert report_a["assert_failures"] == 0
    assert report_a["final_state"]["phase"] == "done"
    for target in report_a["final_state"]["guidance"]["targets"]:
        assert target["matched"]
        assert target["color"] == [0, 255, 0]

    # final overlay carries exactly one green disc per block
    _, rgba = overlays_a[-1]
    green = (rgba[..., 0] == 0) & (rgba[..., 1] == 255) & (rgba[..., 2] == 0)
    _, n_discs = ndimage.label(green)
    assert n_discs == 11

    assert report_json_bytes(report_a) == report_json_bytes(report_b)
    for (na, a), (nb, b) in zip(overlays_a, overlays_b):
        assert na == nb
        assert np.array_equal(a, b)
    assert time.perf_counter() - t0 < 30.0


# 8. end-to-end bento --------------------------------------------------------


def _bento_doc_four_colors():
    import base64

    raster = np.full((405, 600), BACKGROUND, dtype=np.uint8)
    raster[30:123, 30:180] = 3     # crab stick, largest
    raster[30:120, 240:360] = 0    # broccoli
    raster[150:216, 390:495] = 2   # sausage
    raster[270:321, 120:207] = 1   # fried egg, smallest
    return {
        "canvas": {"w": 600, "h": 405},
        "palette": [
            {"id": 0, "rgb": [0, 160, 0], "ingredient": "broccoli"},
            {"id": 1, "rgb": [250, 210, 0], "ingredient": "fried egg"},
            {"id": 2, "rgb": [255, 130, 0], "ingredient": "sausage"},
            {"id": 3, "rgb": [255, 105, 180], "ingredient": "crab stick"},
        ],
        "raster": base64.b64encode(raster.tobytes()).decode(),
    }


def test_bento_end_to_end_ordering():
    from sketchguide.geometry import OrientedRect, Pose2

    t0 = time.perf_counter()
    config = SessionConfig(task="bento", source="simulator", noise_sigma_mm=2.0)
    session = Session(config, session_id="acceptance-bento")
    plan = session.submit_sketch(_bento_doc_four_colors())

    plan_order = [s.color_id for s in plan.subtasks]
    assert plan_order == [3, 0, 2, 1]  # descending target area
    areas = [s.area_px for s in plan.subtasks]
    assert areas == sorted(areas, reverse=True)

    session.ensure_environment()

    # fill each target in plan order with a slab covering ~80% of it
    slabs = {
        3: ((35.0, 25.5), 46.0, 27.0),
        0: ((100.0, 25.0), 36.0, 26.0),
        2: ((147.5, 61.0), 31.0, 19.0),
        1: ((54.5, 98.5), 26.0, 15.0),
    }
    completion_order = []
    for expected_color in plan_order:
        (cx, cy), w, t = slabs[expected_color]
        session.scene.place(OrientedRect(Pose2(cx, cy, 0.0), w, t), 20.0)
        delta = session.simulate_frame()
        g = delta["guidance"]
        done_now = [s["color"] for s in g["subtasks"] if s["status"] == "complete"]
        for c in done_now:
            if c not in completion_order:
                completion_order.append(c)
    assert completion_order == plan_order
    assert session.phase == "done"

    rgba = session.overlay_rgba()
    box = plan.box_mask
    assert (rgba[box][:, :3] == 255).all()  # the whole box lights white
    assert time.perf_counter() - t0 < 30.0


# 9. false positives ---------------------------------------------------------


def test_false_positive_density_on_empty_scene():
    profile = default_profile()
    from sketchguide.simulator import Scene

    scene = Scene(profile.workspace_mm)
    env_frames = [
        render_depth(scene, profile, 2.0, seed=[99, 1_000_000 + i]) for i in range(5)
    ]
    env = capture_environment(env_frames)
    total = 0
    occupied = 0
    for i in range(50):
        frame = render_depth(scene, profile, 2.0, seed=[99, i])
        occ = denoise_mask(occupancy_mask(env, frame), radius=1)
        occupied += int(occ.sum())
        total += occ.size
    assert occupied / total < 0.001


# 10. throughput -------------------------------------------------------------


def test_throughput_thirty_fps():
    config = SessionConfig(task="domino", source="simulator", noise_sigma_mm=2.0)
    session = Session(config)
    session.submit_sketch(
        {
            "canvas": {"w": 572, "h": 321},
            "palette": [{"id": 0, "rgb": [0, 0, 0]}],
            "strokes": [{"color": 0, "pts": [[100.0, 150.0], [380.0, 150.0]]}],
        }
    )
    session.ensure_environment()
    from sketchguide.geometry import OrientedRect, Pose2

    for i in range(11):
        session.scene.place(
            OrientedRect(Pose2(100.0 + 28.0 * i, 150.0, math.pi / 2), 23.0, 8.0), 46.0
        )
    frame = render_depth(session.scene, session.profile, 2.0, seed=[5, 5])
    session.process_frame(frame)  # warm caches outside the timed window
    n = 40
    t0 = time.perf_counter()
    for _ in range(n):
        delta = session.process_frame(frame)
        assert delta["dropped"] is False
    elapsed = time.perf_counter() - t0
    fps = n / elapsed
    assert fps >= 30.0, f"pipeline ran at {fps:.1f} fps"
