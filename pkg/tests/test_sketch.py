import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sketchguide.errors import NoRegions, ResultDegenerate, StrokeTooShort
from sketchguide.sketch import (
    BACKGROUND,
    Palette,
    PaletteEntry,
    SketchDocument,
    Stroke,
    clean_stroke,
    default_bento_palette,
    extract_color_regions,
    parse_sketch_document,
    prune_dense_vertices,
    quantize_canvas,
    resample_stroke,
    sketch_document_to_json,
    smooth_stroke,
)


def _arc_position(polyline: np.ndarray, point: np.ndarray) -> float:
    """Oracle: arc-length coordinate of a point lying on the polyline."""
    best = None
    s0 = 0.0
    for i in range(len(polyline) - 1):
        a, b = polyline[i], polyline[i + 1]
        seg = b - a
        ln = np.hypot(*seg)
        if ln == 0:
            continue
        if ln < 1e-9:
            s0 += ln
            continue
        t = np.dot(point - a, seg) / (ln * ln)
        t = min(max(t, 0.0), 1.0)
        close = a + t * seg
        err = np.hypot(*(point - close))
        cand = (err, s0 + t * ln)
        if best is None or cand[0] < best[0]:
            best = cand
        s0 += ln
    assert best[0] < 1e-6, "point does not lie on the polyline"
    return best[1]


# --- resampling ---


def test_resample_straight_line():
    s = Stroke([(0.0, 0.0), (100.0, 0.0)])
    out = resample_stroke(s, 10.0, 1.0)
    assert len(out.points) == 11
    assert np.allclose(out.points[:, 0], np.arange(0, 101, 10))
    assert np.allclose(out.points[:, 1], 0)


def test_resample_preserves_endpoints():
    s = Stroke([(3.0, 7.0), (40.0, 9.0), (80.0, -5.0)])
    out = resample_stroke(s, 7.0, 1.0)
    assert tuple(out.points[0]) == (3.0, 7.0)
    assert tuple(out.points[-1]) == (80.0, -5.0)


def test_resample_corner():
    s = Stroke([(0.0, 0.0), (50.0, 0.0), (50.0, 50.0)])
    out = resample_stroke(s, 25.0, 1.0)
    assert np.allclose(
        out.points, [(0, 0), (25, 0), (50, 0), (50, 25), (50, 50)], atol=1e-9
    )


def test_resample_px_per_mm_scaling():
    # 2 px per mm: a 10 mm interval is 20 px
    s = Stroke([(0.0, 0.0), (200.0, 0.0)])
    out = resample_stroke(s, 10.0, 2.0)
    assert len(out.points) == 11
    assert np.allclose(np.diff(out.points[:, 0]), 20.0)


def test_resample_too_short():
    with pytest.raises(StrokeTooShort):
        resample_stroke(Stroke([(0, 0), (4, 0)]), 5.0, 1.0)


@given(
    st.lists(st.integers(0, 3000), min_size=2, max_size=12, unique=True),
    st.lists(st.integers(0, 3000), min_size=12, max_size=12),
    st.floats(2.0, 30.0),
)
def test_resample_spacing_property(xs, ys, interval):
    # monotone x keeps the polyline from crossing itself, so the
    # arc-position oracle is unambiguous
    pts = np.column_stack([sorted(xs), ys[: len(xs)]]) * 0.1
    s = Stroke(pts).dedupe()
    cum = np.concatenate(
        [[0], np.cumsum(np.hypot(*np.diff(s.points, axis=0).T))]
    )
    if cum[-1] < interval:
        return
    out = resample_stroke(s, interval, 1.0)
    arcs = np.array([_arc_position(s.points, p) for p in out.points])
    deltas = np.diff(arcs)
    assert np.all(deltas[:-1] == pytest.approx(interval, abs=1e-6))
    # the step count tolerates a hair of float slack, so the trailing
    # hop may exceed the interval by the same hair
    assert deltas[-1] <= interval * (1 + 1e-5) + 1e-6
    assert np.allclose(out.points[0], s.points[0])
    assert np.allclose(out.points[-1], s.points[-1])


# --- smoothing ---


def test_smooth_zigzag():
    ys = [1.0, -1.0, 1.0, -1.0, 1.0, -1.0]
    s = Stroke(np.column_stack([np.arange(6.0), ys]))
    out = smooth_stroke(s, 3)
    # interior points average their neighborhood of three
    assert out.points[2, 1] == pytest.approx(-1.0 / 3.0)
    assert out.points[3, 1] == pytest.approx(1.0 / 3.0)
    assert len(out.points) == 6


def test_smooth_collinear_uniform_identity():
    s = Stroke(np.column_stack([np.arange(0.0, 20.0, 2.0), np.arange(0.0, 10.0, 1.0)]))
    out = smooth_stroke(s, 5)
    assert np.allclose(out.points, s.points, atol=1e-12)


def test_smooth_endpoints_fixed():
    s = Stroke([(0.0, 0.0), (1.0, 5.0), (2.0, -4.0), (3.0, 2.0), (9.0, 9.0)])
    out = smooth_stroke(s, 5)
    assert tuple(out.points[0]) == (0.0, 0.0)
    assert tuple(out.points[-1]) == (9.0, 9.0)
    assert len(out.points) == len(s.points)


def test_smooth_window_validation():
    s = Stroke([(0, 0), (1, 1), (2, 2)])
    with pytest.raises(ValueError):
        smooth_stroke(s, 4)
    with pytest.raises(ValueError):
        smooth_stroke(s, 0)
    out = smooth_stroke(s, 1)
    assert np.array_equal(out.points, s.points)


# --- pruning ---


def test_prune_unit_chain():
    pts = np.column_stack([np.arange(11.0), np.zeros(11)])
    out = prune_dense_vertices(Stroke(pts), 3.0, 1.0)
    assert list(out.points[:, 0]) == [0.0, 3.0, 6.0, 9.0, 10.0]


def test_prune_keeps_endpoints():
    pts = np.array([(0.0, 0.0), (0.4, 0.0), (0.5, 0.1), (0.6, 0.0), (10.0, 0.0)])
    out = prune_dense_vertices(Stroke(pts), 2.0, 1.0)
    assert tuple(out.points[0]) == (0.0, 0.0)
    assert tuple(out.points[-1]) == (10.0, 0.0)


def test_prune_degenerate():
    pts = np.array([(0.0, 0.0), (0.1, 0.0), (0.0, 0.0)])
    with pytest.raises(ResultDegenerate):
        prune_dense_vertices(Stroke(pts), 1.0, 1.0)


def test_prune_min_gap_respected():
    rng = np.random.default_rng(7)
    walk = np.cumsum(rng.uniform(0.05, 0.9, size=(80, 2)), axis=0)
    out = prune_dense_vertices(Stroke(walk), 1.5, 1.0)
    gaps = np.hypot(*np.diff(out.points, axis=0).T)
    assert np.all(gaps[:-1] >= 1.5 - 1e-9)  # the final hop may be short


def test_clean_chain_preserves_straight_length():
    s = Stroke([(100.0, 150.0), (380.0, 150.0)])
    out = clean_stroke(s, 1.0)
    assert out.arc_length() == pytest.approx(280.0, abs=1e-9)


# --- quantization ---


def test_quantize_exact_palette_color():
    pal = default_bento_palette()
    img = np.zeros((1, 2, 3), dtype=np.uint8)
    img[0, 0] = pal.rgb(0)
    img[0, 1] = (255, 255, 255)
    labels = quantize_canvas(img, pal)
    assert labels[0, 0] == 0
    assert labels[0, 1] == BACKGROUND


def test_quantize_white_is_background_for_every_entry():
    pal = default_bento_palette()
    white = np.array([255.0, 255.0, 255.0])
    for e in pal:
        assert np.linalg.norm(white - np.array(e.rgb)) > 60


def test_quantize_within_tolerance():
    pal = Palette([PaletteEntry(0, (100, 0, 0)), PaletteEntry(5, (0, 100, 0))])
    img = np.array([[[130, 0, 0], [100, 65, 0], [0, 90, 10]]], dtype=np.uint8)
    labels = quantize_canvas(img, pal, tolerance=60.0)
    assert labels[0, 0] == 0  # distance 30
    assert labels[0, 1] == BACKGROUND  # distance 65 from red, 119 from green
    assert labels[0, 2] == 5


def test_quantize_tie_breaks_low_id():
    pal = Palette([PaletteEntry(2, (0, 0, 0)), PaletteEntry(7, (0, 0, 60))])
    img = np.array([[[0, 0, 30]]], dtype=np.uint8)
    assert quantize_canvas(img, pal)[0, 0] == 2


# --- regions ---


def _flood_regions(labels):
    """Oracle: 4-connected flood fill, pure python."""
    h, w = labels.shape
    seen = np.zeros_like(labels, dtype=bool)
    out = []
    for y in range(h):
        for x in range(w):
            if seen[y, x] or labels[y, x] == BACKGROUND:
                continue
            color = labels[y, x]
            stack = [(y, x)]
            seen[y, x] = True
            pix = []
            while stack:
                cy, cx = stack.pop()
                pix.append((cy, cx))
                for ny, nx in ((cy - 1, cx), (cy + 1, cx), (cy, cx - 1), (cy, cx + 1)):
                    if 0 <= ny < h and 0 <= nx < w and not seen[ny, nx] and labels[ny, nx] == color:
                        seen[ny, nx] = True
                        stack.append((ny, nx))
            out.append((int(color), frozenset(pix)))
    return out


def test_regions_order_and_filtering():
    labels = np.full((40, 60), BACKGROUND, dtype=np.uint8)
    labels[2:8, 2:8] = 3        # 36 px
    labels[20:30, 20:40] = 3    # 200 px
    labels[5:10, 40:50] = 1     # 50 px
    labels[35:37, 2:4] = 1      # 4 px speckle, dropped
    regs = extract_color_regions(labels, min_area=25)
    assert [(r.color_id, r.area_px) for r in regs] == [(1, 50), (3, 200), (3, 36)]
    assert regs[0].bbox == (40, 5, 50, 10)


def test_regions_no_survivors():
    labels = np.full((10, 10), BACKGROUND, dtype=np.uint8)
    labels[0, 0] = 2
    with pytest.raises(NoRegions):
        extract_color_regions(labels, min_area=25)


def test_regions_diagonal_not_connected():
    labels = np.full((12, 12), BACKGROUND, dtype=np.uint8)
    labels[0:4, 0:4] = 5
    labels[4:8, 4:8] = 5  # touches only at a corner
    regs = extract_color_regions(labels, min_area=10)
    assert len(regs) == 2


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_regions_match_flood_fill_oracle(seed):
    rng = np.random.default_rng(seed)
    labels = rng.choice(
        np.array([BACKGROUND, 0, 1], dtype=np.uint8), size=(18, 22), p=[0.6, 0.2, 0.2]
    )
    oracle = {(c, p) for c, p in _flood_regions(labels) if len(p) >= 5}
    try:
        regs = extract_color_regions(labels, min_area=5)
    except NoRegions:
        assert not oracle
        return
    got = {
        (r.color_id, frozenset(map(tuple, np.argwhere(r.mask))))
        for r in regs
    }
    assert got == oracle
    areas_by_color = {}
    for r in regs:
        areas_by_color.setdefault(r.color_id, []).append(r.area_px)
    assert sorted(areas_by_color) == list(areas_by_color)
    for areas in areas_by_color.values():
        assert areas == sorted(areas, reverse=True)


# --- documents ---


def test_document_round_trip():
    pal = default_bento_palette()
    raster = np.full((405, 600), BACKGROUND, dtype=np.uint8)
    raster[10:50, 10:80] = 1
    doc = SketchDocument(600, 405, pal, [Stroke([(0.0, 0.0), (10.0, 4.0)], 2)], raster)
    again = parse_sketch_document(sketch_document_to_json(doc))
    assert again.canvas_w == 600 and again.canvas_h == 405
    assert np.array_equal(again.raster, raster)
    assert len(again.strokes) == 1
    assert again.strokes[0].color_id == 2
    assert np.allclose(again.strokes[0].points, doc.strokes[0].points)
    assert [e.ingredient for e in again.palette] == [e.ingredient for e in pal]


def test_document_drops_dot_strokes():
    obj = {
        "canvas": {"w": 100, "h": 100},
        "palette": [{"id": 0, "rgb": [0, 0, 0]}],
        "strokes": [{"color": 0, "pts": [[5, 5]]}, {"color": 0, "pts": [[0, 0], [9, 9]]}],
    }
    doc = parse_sketch_document(obj)
    assert len(doc.strokes) == 1


def test_rasterize_strokes_paints_line():
    pal = default_bento_palette()
    doc = SketchDocument(60, 60, pal, [Stroke([(10.0, 30.0), (50.0, 30.0)], 1)])
    labels = doc.labeled_raster(brush_radius_px=3)
    assert labels[30, 30] == 1
    assert labels[30, 9] in (1, BACKGROUND)
    assert labels[5, 5] == BACKGROUND
    assert (labels == 1).sum() > 200
