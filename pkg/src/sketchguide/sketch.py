"""Sketch capture model: strokes on a canvas, palettes, labeled rasters.

Canvas coordinates are pixels with x right, y down. Physical parameters
(sampling interval, gaps) arrive in millimeters together with the canvas
px-per-mm scale, so the cleaning chain is resolution independent.
"""

from __future__ import annotations

import base64
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .errors import (
    DimMismatch,
    EmptyInput,
    NoRegions,
    ResultDegenerate,
    StrokeTooShort,
)

BACKGROUND = 255


@dataclass(frozen=True)
class PaletteEntry:
    color_id: int
    rgb: tuple[int, int, int]
    ingredient: str | None = None


class Palette:
    """Sketch color table; ids are unique u8 values below 255."""

    def __init__(self, entries):
        entries = sorted(entries, key=lambda e: e.color_id)
        ids = [e.color_id for e in entries]
        if len(set(ids)) != len(ids):
            raise ValueError("palette ids must be unique")
        for e in entries:
            if not (0 <= e.color_id < BACKGROUND):
                raise ValueError(f"palette id {e.color_id} out of range")
        self.entries = entries
        self._by_id = {e.color_id: e for e in entries}

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def get(self, color_id: int) -> PaletteEntry:
        return self._by_id[color_id]

    def rgb(self, color_id: int) -> tuple[int, int, int]:
        return self._by_id[color_id].rgb


def default_bento_palette() -> Palette:
    return Palette(
        [
            PaletteEntry(0, (0, 160, 0), "broccoli"),
            PaletteEntry(1, (250, 210, 0), "fried egg"),
            PaletteEntry(2, (255, 130, 0), "sausage"),
            PaletteEntry(3, (255, 105, 180), "crab stick"),
            PaletteEntry(4, (0, 0, 0), None),
        ]
    )


def default_domino_palette() -> Palette:
    return Palette([PaletteEntry(0, (0, 0, 0), None)])


class Stroke:
    """Ordered polyline on the canvas.

    points: (N, 2) float64, N >= 2; color_id indexes the palette.
    """

    __slots__ = ("points", "color_id")

    def __init__(self, points, color_id: int = 0):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("stroke needs an (N, 2) array with N >= 2")
        if not np.all(np.isfinite(pts)):
            raise ValueError("stroke points must be finite")
        self.points = pts
        self.color_id = int(color_id)

    def dedupe(self) -> "Stroke":
        """Drop consecutive identical points."""
        pts = self.points
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        out = pts[keep]
        if len(out) < 2:
            raise ResultDegenerate("stroke collapses to a single point")
        return Stroke(out, self.color_id)

    def arc_length(self) -> float:
        seg = np.diff(self.points, axis=0)
        return float(np.sum(np.hypot(seg[:, 0], seg[:, 1])))


def _cumulative(points: np.ndarray) -> np.ndarray:
    seg = np.diff(points, axis=0)
    return np.concatenate([[0.0], np.cumsum(np.hypot(seg[:, 0], seg[:, 1]))])


def resample_stroke(s: Stroke, interval: float, px_per_mm: float) -> Stroke:
    """Resample to uniform arc-length spacing, keeping both endpoints.

    interval is in mm; the stroke stays in canvas px. Consecutive output
    samples sit `interval` apart along the input polyline; the final pair
    may be shorter. Raises StrokeTooShort when the whole stroke is shorter
    than one interval.
    """
    if interval <= 0 or px_per_mm <= 0:
        raise ValueError("interval and px_per_mm must be positive")
    s = s.dedupe()
    step = interval * px_per_mm
    cum = _cumulative(s.points)
    length = cum[-1]
    if length < step:
        raise StrokeTooShort(f"arc length {length / px_per_mm:.3f} mm < interval {interval} mm")
    n_steps = int(np.floor((length + 1e-9 * max(length, 1.0)) / step))
    svals = np.minimum(np.arange(n_steps + 1) * step, length)
    xs = np.interp(svals, cum, s.points[:, 0])
    ys = np.interp(svals, cum, s.points[:, 1])
    pts = np.column_stack([xs, ys])
    pts[0] = s.points[0]
    if length - svals[-1] <= 1e-6 * step:
        pts[-1] = s.points[-1]
    else:
        pts = np.vstack([pts, s.points[-1]])
    return Stroke(pts, s.color_id)


def smooth_stroke(s: Stroke, window: int = 5) -> Stroke:
    """Centered moving average with the window shrinking symmetrically at the ends.

    Output has the same point count; the first and last points are untouched
    because their shrunk window is just themselves.
    """
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be an odd int >= 1")
    pts = s.points
    n = len(pts)
    half = window // 2
    out = np.empty_like(pts)
    for i in range(n):
        h = min(i, n - 1 - i, half)
        out[i] = pts[i - h : i + h + 1].mean(axis=0)
    return Stroke(out, s.color_id)


def prune_dense_vertices(s: Stroke, min_gap: float, px_per_mm: float) -> Stroke:
    """Greedily drop interior vertices closer than min_gap (mm) to the last kept one.

    Endpoints always survive. Raises ResultDegenerate if fewer than two
    distinct points remain.
    """
    if min_gap <= 0 or px_per_mm <= 0:
        raise ValueError("min_gap and px_per_mm must be positive")
    s = s.dedupe()
    gap = min_gap * px_per_mm
    pts = s.points
    kept = [pts[0]]
    for i in range(1, len(pts) - 1):
        d = np.hypot(*(pts[i] - kept[-1]))
        if d >= gap:
            kept.append(pts[i])
    kept.append(pts[-1])
    out = np.array(kept)
    distinct = np.any(np.any(out != out[0], axis=1))
    if len(out) < 2 or not distinct:
        raise ResultDegenerate("pruning left fewer than two distinct points")
    return Stroke(out, s.color_id).dedupe()


def clean_stroke(
    s: Stroke,
    px_per_mm: float,
    resample_mm: float = 2.0,
    smooth_window: int = 5,
    prune_gap_mm: float = 1.0,
) -> Stroke:
    """Full cleaning chain: resample, smooth, prune."""
    out = resample_stroke(s, resample_mm, px_per_mm)
    out = smooth_stroke(out, smooth_window)
    return prune_dense_vertices(out, prune_gap_mm, px_per_mm)


def quantize_canvas(rgb: np.ndarray, palette: Palette, tolerance: float = 60.0) -> np.ndarray:
    """Map an RGB canvas to palette labels.

    Each pixel takes the nearest palette color within Euclidean RGB distance
    `tolerance`, ties going to the lower color_id; everything else becomes
    the background label 255.
    """
    img = np.asarray(rgb)
    if img.ndim != 3 or img.shape[2] != 3:
        raise DimMismatch("expected an (H, W, 3) RGB array")
    flat = img.reshape(-1, 3).astype(np.float64)
    colors = np.array([e.rgb for e in palette], dtype=np.float64)
    ids = np.array([e.color_id for e in palette], dtype=np.uint8)
    d2 = ((flat[:, None, :] - colors[None, :, :]) ** 2).sum(axis=2)
    best = np.argmin(d2, axis=1)  # palette sorted by id, so ties pick the lower id
    labels = ids[best]
    labels = np.where(d2[np.arange(len(flat)), best] <= tolerance**2, labels, BACKGROUND)
    return labels.reshape(img.shape[0], img.shape[1]).astype(np.uint8)


@dataclass
class ColorRegion:
    color_id: int
    mask: np.ndarray
    area_px: int
    bbox: tuple[int, int, int, int]  # x0, y0, x1, y1 (exclusive)


def extract_color_regions(labels: np.ndarray, min_area: int = 25) -> list[ColorRegion]:
    """4-connected components per color, small speckles dropped.

    Regions come back sorted by (color_id, descending area). Raises
    NoRegions when nothing survives the area filter.
    """
    lab = np.asarray(labels)
    if lab.ndim != 2:
        raise DimMismatch("labels must be 2D")
    regions: list[ColorRegion] = []
    for color_id in sorted(int(c) for c in np.unique(lab) if c != BACKGROUND):
        comp, n = ndimage.label(lab == color_id)
        if n == 0:
            continue
        areas = ndimage.sum_labels(np.ones_like(comp), comp, index=range(1, n + 1))
        slices = ndimage.find_objects(comp)
        per_color = []
        for k in range(n):
            area = int(areas[k])
            if area < min_area:
                continue
            mask = comp == (k + 1)
            sy, sx = slices[k]
            per_color.append(
                ColorRegion(color_id, mask, area, (sx.start, sy.start, sx.stop, sy.stop))
            )
        per_color.sort(key=lambda r: -r.area_px)
        regions.extend(per_color)
    if not regions:
        raise NoRegions("no colored region meets the minimum area")
    return regions


@dataclass
class SketchDocument:
    """One submitted sketch: canvas dims, palette, strokes, optional labeled raster."""

    canvas_w: int
    canvas_h: int
    palette: Palette
    strokes: list[Stroke] = field(default_factory=list)
    raster: np.ndarray | None = None

    def __post_init__(self):
        if self.canvas_w <= 0 or self.canvas_h <= 0:
            raise ValueError("canvas dims must be positive")
        if self.raster is not None:
            r = np.asarray(self.raster, dtype=np.uint8)
            if r.shape != (self.canvas_h, self.canvas_w):
                raise DimMismatch("raster shape must match canvas dims")
            self.raster = r

    def labeled_raster(self, brush_radius_px: float = 6.0) -> np.ndarray:
        """The document raster, or strokes rasterized with a round brush."""
        if self.raster is not None:
            return self.raster
        if not self.strokes:
            raise EmptyInput("document has neither raster nor strokes")
        return rasterize_strokes(self, brush_radius_px)


def rasterize_strokes(doc: SketchDocument, brush_radius_px: float = 6.0) -> np.ndarray:
    """Paint stroke polylines with a round brush into a label raster."""
    labels = np.full((doc.canvas_h, doc.canvas_w), BACKGROUND, dtype=np.uint8)
    r = max(1.0, float(brush_radius_px))
    yy, xx = np.mgrid[-int(np.ceil(r)) : int(np.ceil(r)) + 1, -int(np.ceil(r)) : int(np.ceil(r)) + 1]
    disc = np.column_stack([xx[xx**2 + yy**2 <= r**2], yy[xx**2 + yy**2 <= r**2]])
    for stroke in doc.strokes:
        pts = stroke.points
        seg = np.diff(pts, axis=0)
        lens = np.hypot(seg[:, 0], seg[:, 1])
        samples = [pts[0]]
        for i, ln in enumerate(lens):
            n = max(1, int(np.ceil(ln / (r / 2.0))))
            t = np.linspace(0, 1, n + 1)[1:]
            samples.extend(pts[i] + t[:, None] * seg[i])
        centers = np.rint(np.array(samples)).astype(int)
        for cx, cy in centers:
            px = disc[:, 0] + cx
            py = disc[:, 1] + cy
            ok = (px >= 0) & (px < doc.canvas_w) & (py >= 0) & (py < doc.canvas_h)
            labels[py[ok], px[ok]] = stroke.color_id
    return labels


def parse_sketch_document(obj: dict) -> SketchDocument:
    """Build a document from its JSON wire form.

    Expected shape: {canvas: {w, h}, palette: [{id, rgb, ingredient?}],
    strokes: [{color, pts: [[x, y], ...]}], raster?: base64 u8 row-major}.
    Strokes with fewer than two points are dropped.
    """
    try:
        canvas = obj["canvas"]
        w, h = int(canvas["w"]), int(canvas["h"])
        palette = Palette(
            [
                PaletteEntry(int(p["id"]), tuple(int(v) for v in p["rgb"]), p.get("ingredient"))
                for p in obj["palette"]
            ]
        )
        strokes = []
        for s in obj.get("strokes", []):
            pts = s["pts"]
            if len(pts) >= 2:
                strokes.append(Stroke(np.asarray(pts, dtype=np.float64), int(s["color"])))
        raster = None
        if obj.get("raster"):
            buf = np.frombuffer(base64.b64decode(obj["raster"]), dtype=np.uint8)
            if buf.size != w * h:
                raise DimMismatch(f"raster has {buf.size} bytes, expected {w * h}")
            raster = buf.reshape(h, w).copy()
    except (KeyError, TypeError, IndexError) as exc:
        raise EmptyInput(f"malformed sketch document: {exc}") from exc
    return SketchDocument(w, h, palette, strokes, raster)


def sketch_document_to_json(doc: SketchDocument) -> dict:
    out = {
        "canvas": {"w": doc.canvas_w, "h": doc.canvas_h},
        "palette": [
            {"id": e.color_id, "rgb": list(e.rgb), "ingredient": e.ingredient}
            for e in doc.palette
        ],
        "strokes": [
            {"color": s.color_id, "pts": [[float(x), float(y)] for x, y in s.points]}
            for s in doc.strokes
        ],
    }
    if doc.raster is not None:
        out["raster"] = base64.b64encode(doc.raster.tobytes()).decode("ascii")
    return out
