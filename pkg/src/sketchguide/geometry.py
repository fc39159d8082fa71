"""Planar geometry: homographies, oriented rectangles, raster warping.

All homographies are 3x3, row-major, normalized so the last element is 1.
Points are (x, y) pairs; bulk operations take (N, 2) float arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration, PointAtInfinity, TooFewPoints

# Denominator below this is treated as a point at infinity.
_W_EPS = 1e-12

# |det| at or below this rejects a homography as non-invertible.
_DET_EPS = 1e-9


class Homography:
    """Invertible projective map of the plane.

    Wraps a 3x3 float matrix with m[2,2] == 1. Instances are immutable;
    the inverse is computed lazily and cached.
    """

    __slots__ = ("mat", "_inv")

    def __init__(self, mat):
        m = np.asarray(mat, dtype=np.float64).reshape(3, 3)
        if not np.all(np.isfinite(m)):
            raise DegenerateConfiguration("non-finite homography entries")
        if abs(m[2, 2]) < _W_EPS:
            raise DegenerateConfiguration("cannot normalize: m[8] ~ 0")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) <= _DET_EPS:
            raise DegenerateConfiguration("homography is not invertible")
        self.mat = m
        self.mat.setflags(write=False)
        self._inv = None

    @classmethod
    def identity(cls) -> "Homography":
        return cls(np.eye(3))

    @classmethod
    def from_flat(cls, values) -> "Homography":
        """Build from 9 row-major numbers, e.g. a deserialized JSON array."""
        v = np.asarray(values, dtype=np.float64)
        if v.shape != (9,):
            raise DegenerateConfiguration("expected 9 row-major values")
        return cls(v.reshape(3, 3))

    def to_flat(self) -> list[float]:
        """Row-major list of 9 numbers, last element exactly 1."""
        out = [float(v) for v in self.mat.ravel()]
        out[8] = 1.0
        return out

    def inverse(self) -> "Homography":
        if self._inv is None:
            self._inv = Homography(np.linalg.inv(self.mat))
        return self._inv

    def compose(self, other: "Homography") -> "Homography":
        """Map that applies `other` first, then this one."""
        return Homography(self.mat @ other.mat)

    def apply(self, point) -> tuple[float, float]:
        x, y = float(point[0]), float(point[1])
        den = self.mat[2, 0] * x + self.mat[2, 1] * y + self.mat[2, 2]
        if abs(den) < _W_EPS:
            raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
        nx = self.mat[0, 0] * x + self.mat[0, 1] * y + self.mat[0, 2]
        ny = self.mat[1, 0] * x + self.mat[1, 1] * y + self.mat[1, 2]
        return (nx / den, ny / den)

    def apply_array(self, points: np.ndarray) -> np.ndarray:
        """Apply to an (N, 2) array; returns (N, 2) float64."""
        pts = np.asarray(points, dtype=np.float64)
        ones = np.ones((pts.shape[0], 1))
        h = np.hstack([pts, ones]) @ self.mat.T
        den = h[:, 2]
        if np.any(np.abs(den) < _W_EPS):
            raise PointAtInfinity("some points map to infinity")
        return h[:, :2] / den[:, None]

    def jacobian_det(self, point) -> float:
        """Determinant of the local 2x2 Jacobian at `point`.

        Gives the local area scale factor of the map (e.g. px^2 per mm^2
        for a mm -> px homography).
        """
        x, y = float(point[0]), float(point[1])
        m = self.mat
        den = m[2, 0] * x + m[2, 1] * y + m[2, 2]
        if abs(den) < _W_EPS:
            raise PointAtInfinity(f"point ({x}, {y}) maps to infinity")
        nx = m[0, 0] * x + m[0, 1] * y + m[0, 2]
        ny = m[1, 0] * x + m[1, 1] * y + m[1, 2]
        # d(nx/den)/dx etc. via quotient rule
        j00 = (m[0, 0] * den - nx * m[2, 0]) / den**2
        j01 = (m[0, 1] * den - nx * m[2, 1]) / den**2
        j10 = (m[1, 0] * den - ny * m[2, 0]) / den**2
        j11 = (m[1, 1] * den - ny * m[2, 1]) / den**2
        return j00 * j11 - j01 * j10

    def __repr__(self):
        return f"Homography({self.to_flat()})"


def apply_homography(h: Homography, point) -> tuple[float, float]:
    return h.apply(point)


def _normalization(points: np.ndarray) -> np.ndarray:
    """Similarity transform taking `points` to zero mean and unit RMS radius."""
    mean = points.mean(axis=0)
    rms = np.sqrt(np.mean(np.sum((points - mean) ** 2, axis=1)))
    if rms < _W_EPS:
        raise DegenerateConfiguration("all points coincide")
    s = 1.0 / rms
    return np.array(
        [[s, 0.0, -s * mean[0]], [0.0, s, -s * mean[1]], [0.0, 0.0, 1.0]]
    )


def _collinear(a, b, c) -> bool:
    # twice the signed triangle area, scaled by the span
    area2 = abs(
        (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    )
    span = max(
        abs(b[0] - a[0]), abs(b[1] - a[1]), abs(c[0] - a[0]), abs(c[1] - a[1]), 1.0
    )
    return area2 <= 1e-9 * span * span


def homography_from_correspondences(pairs) -> tuple[Homography, float]:
    """Fit src -> dst homography from (src_point, dst_point) pairs.

    Uses the normalized direct linear transform: both point sets are
    translated and scaled to zero mean and unit RMS radius, the 2Nx9
    system is solved by SVD, and the result is denormalized.

    Returns the homography and the RMS reprojection residual of the
    input pairs, in destination units.

    Raises TooFewPoints below 4 pairs and DegenerateConfiguration for
    configurations that cannot pin down the map (duplicate points, a
    collinear minimal set, rank-deficient systems).
    """
    src = np.asarray([p[0] for p in pairs], dtype=np.float64)
    dst = np.asarray([p[1] for p in pairs], dtype=np.float64)
    n = src.shape[0]
    if n < 4:
        raise TooFewPoints(f"need at least 4 pairs, got {n}")
    if not (np.all(np.isfinite(src)) and np.all(np.isfinite(dst))):
        raise DegenerateConfiguration("non-finite correspondence points")
    for pts in (src, dst):
        d = pts[:, None, :] - pts[None, :, :]
        dist2 = np.sum(d * d, axis=2)
        np.fill_diagonal(dist2, np.inf)
        if dist2.min() < _W_EPS:
            raise DegenerateConfiguration("duplicate points in correspondence set")
    if n == 4:
        idx = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
        for i, j, k in idx:
            if _collinear(src[i], src[j], src[k]):
                raise DegenerateConfiguration("three source points are collinear")

    t_src = _normalization(src)
    t_dst = _normalization(dst)
    sn = (np.column_stack([src, np.ones(n)]) @ t_src.T)[:, :2]
    dn = (np.column_stack([dst, np.ones(n)]) @ t_dst.T)[:, :2]

    a = np.zeros((2 * n, 9))
    for i in range(n):
        x, y = sn[i]
        u, v = dn[i]
        a[2 * i] = [-x, -y, -1, 0, 0, 0, u * x, u * y, u]
        a[2 * i + 1] = [0, 0, 0, -x, -y, -1, v * x, v * y, v]
    _, sv, vt = np.linalg.svd(a)
    if sv[7] <= 1e-12 * sv[0]:
        raise DegenerateConfiguration("correspondences do not determine a map")
    hn = vt[-1].reshape(3, 3)

    h_mat = np.linalg.inv(t_dst) @ hn @ t_src
    h = Homography(h_mat)

    proj = h.apply_array(src)
    rms = float(np.sqrt(np.mean(np.sum((proj - dst) ** 2, axis=1))))
    return h, rms


def warp_image(src: np.ndarray, h: Homography, out_w: int, out_h: int) -> np.ndarray:
    """Resample `src` under `h` (src coords -> dst coords) onto an out_h x out_w grid.

    Inverse mapping with nearest-neighbor lookup; destination pixels whose
    preimage falls outside the source are zero.
    """
    src = np.asarray(src)
    ys, xs = np.arange(out_h), np.arange(out_w)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    back = h.inverse().apply_array(pts)
    sx = np.rint(back[:, 0]).astype(np.int64)
    sy = np.rint(back[:, 1]).astype(np.int64)
    inside = (sx >= 0) & (sx < src.shape[1]) & (sy >= 0) & (sy < src.shape[0])
    out_shape = (out_h, out_w) + src.shape[2:]
    out = np.zeros(out_shape, dtype=src.dtype)
    flat_idx = np.flatnonzero(inside)
    out.reshape((out_h * out_w,) + src.shape[2:])[flat_idx] = src[
        sy[inside], sx[inside]
    ]
    return out


def warp_grid(h: Homography, out_w: int, out_h: int, src_w: int, src_h: int):
    """Precompute the nearest-neighbor gather map used by warp_image.

    Returns (flat destination indices, source y, source x) restricted to
    in-bounds preimages, so repeated warps under one map become a gather.
    """
    ys, xs = np.arange(out_h), np.arange(out_w)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()]).astype(np.float64)
    back = h.inverse().apply_array(pts)
    sx = np.rint(back[:, 0]).astype(np.int64)
    sy = np.rint(back[:, 1]).astype(np.int64)
    inside = (sx >= 0) & (sx < src_w) & (sy >= 0) & (sy < src_h)
    return np.flatnonzero(inside), sy[inside], sx[inside]


def normalize_angle(theta: float) -> float:
    """Wrap to [-pi, pi)."""
    t = math.fmod(theta + math.pi, 2.0 * math.pi)
    if t < 0:
        t += 2.0 * math.pi
    return t - math.pi


def normalize_axis_angle(theta: float) -> float:
    """Wrap an undirected axis angle to [-pi/2, pi/2)."""
    t = math.fmod(theta, math.pi)
    if t < -math.pi / 2:
        t += math.pi
    elif t >= math.pi / 2:
        t -= math.pi
    return t


@dataclass
class Pose2:
    """Position in mm plus heading in radians.

    theta is the block long-axis direction, wrapped to [-pi, pi).
    """

    x: float
    y: float
    theta: float

    def __post_init__(self):
        if not (
            math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)
        ):
            raise ValueError("pose components must be finite")
        self.theta = normalize_angle(self.theta)


@dataclass
class OrientedRect:
    """Rectangle footprint: `width` extends along pose.theta, `thickness` across it."""

    pose: Pose2
    width: float
    thickness: float

    def __post_init__(self):
        if self.width <= 0 or self.thickness <= 0:
            raise ValueError("rectangle extents must be positive")

    def corners(self) -> np.ndarray:
        """(4, 2) corner array, counterclockwise."""
        c, s = math.cos(self.pose.theta), math.sin(self.pose.theta)
        ax = np.array([c, s])
        ay = np.array([-s, c])
        ctr = np.array([self.pose.x, self.pose.y])
        hw, ht = self.width / 2.0, self.thickness / 2.0
        return np.array(
            [
                ctr + hw * ax + ht * ay,
                ctr - hw * ax + ht * ay,
                ctr - hw * ax - ht * ay,
                ctr + hw * ax - ht * ay,
            ]
        )

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Boolean mask of (N, 2) points inside the footprint (boundary counts)."""
        pts = np.asarray(points, dtype=np.float64)
        c, s = math.cos(self.pose.theta), math.sin(self.pose.theta)
        dx = pts[:, 0] - self.pose.x
        dy = pts[:, 1] - self.pose.y
        u = dx * c + dy * s
        v = -dx * s + dy * c
        return (np.abs(u) <= self.width / 2.0) & (np.abs(v) <= self.thickness / 2.0)


def rects_intersect(a: OrientedRect, b: OrientedRect) -> bool:
    """True iff the footprints overlap with positive area.

    Separating-axis test over both rectangles' edge normals; shapes that
    merely touch along an edge or corner do not count as overlapping.
    """
    ca, cb = a.corners(), b.corners()
    for rect in (a, b):
        c, s = math.cos(rect.pose.theta), math.sin(rect.pose.theta)
        for axis in ((c, s), (-s, c)):
            pa = ca @ axis
            pb = cb @ axis
            if pa.max() <= pb.min() + 1e-12 or pb.max() <= pa.min() + 1e-12:
                return False
    return True
