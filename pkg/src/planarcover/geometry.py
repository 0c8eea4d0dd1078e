"""Plain planar geometry: rectangles, disks, distances to segments, and a
few deterministic point samplers used by verification code."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import EmptyInput

GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle [x0, x1] x [y0, y1]."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle must have positive width and height")

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def center(self):
        return complex((self.x0 + self.x1) / 2, (self.y0 + self.y1) / 2)

    def contains(self, z, margin=0.0):
        """Membership test, vectorized over complex arrays."""
        x = np.real(z)
        y = np.imag(z)
        return (
            (x >= self.x0 + margin)
            & (x <= self.x1 - margin)
            & (y >= self.y0 + margin)
            & (y <= self.y1 - margin)
        )

    def shrunk(self, margin):
        return Rect(self.x0 + margin, self.y0 + margin, self.x1 - margin, self.y1 - margin)

    def expanded(self, margin):
        return Rect(self.x0 - margin, self.y0 - margin, self.x1 + margin, self.y1 + margin)

    def interior_distance(self, z):
        """Distance from z to the rectangle's boundary (negative outside)."""
        x, y = z.real, z.imag
        return min(x - self.x0, self.x1 - x, y - self.y0, self.y1 - y)

    @staticmethod
    def square(center, half_side):
        cx, cy = center.real, center.imag
        return Rect(cx - half_side, cy - half_side, cx + half_side, cy + half_side)


@dataclass(frozen=True)
class Disk:
    """Open disk B(center, radius)."""

    center: complex
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("disk must have positive radius")

    def contains(self, z):
        return np.abs(np.asarray(z) - self.center) < self.radius


def dist_to_segment(points, a, b):
    """Euclidean distance from each point to the segment [a, b].

    points is a complex array; a, b are complex endpoints.
    """
    points = np.asarray(points)
    ab = b - a
    denom = abs(ab) ** 2
    if denom == 0.0:
        return np.abs(points - a)
    t = ((points - a) * np.conj(ab)).real / denom
    t = np.clip(t, 0.0, 1.0)
    return np.abs(points - (a + t * ab))


def dist_to_polyline(points, vertices):
    """Distance from each point to a polyline given by its vertex array."""
    vertices = np.asarray(vertices)
    if vertices.size == 1:
        return np.abs(np.asarray(points) - vertices[0])
    d = dist_to_segment(points, vertices[0], vertices[1])
    for i in range(1, len(vertices) - 1):
        np.minimum(d, dist_to_segment(points, vertices[i], vertices[i + 1]), out=d)
    return d


def circle_points(center, radius, n, phase=0.0):
    theta = phase + 2.0 * np.pi * np.arange(n) / n
    return center + radius * np.exp(1j * theta)


def square_boundary_points(rect, spacing):
    """Points along the rectangle boundary at roughly the given spacing,
    corners included, ordered counterclockwise from (x0, y0)."""
    nx = max(2, int(math.ceil(rect.width / spacing)) + 1)
    ny = max(2, int(math.ceil(rect.height / spacing)) + 1)
    xs = np.linspace(rect.x0, rect.x1, nx)
    ys = np.linspace(rect.y0, rect.y1, ny)
    bottom = xs + 1j * rect.y0
    right = rect.x1 + 1j * ys[1:]
    top = xs[-2::-1] + 1j * rect.y1
    left = rect.x0 + 1j * ys[-2:0:-1]
    return np.concatenate([bottom, right, top, left])


def disk_sample(center, radius, n):
    """Deterministic low-discrepancy sample of n points in an open disk,
    laid out on a golden-angle spiral."""
    i = np.arange(n)
    rho = radius * np.sqrt((i + 0.5) / n)
    theta = i * GOLDEN_ANGLE
    return center + rho * np.exp(1j * theta)


def max_pairwise_distance(points):
    """Diameter of a finite complex point set.

    Uses the convex hull for large sets; degenerate (collinear) sets fall
    back to the bounding-box diagonal, which is exact for them.
    """
    pts = np.unique(np.asarray(points, dtype=complex))
    if pts.size == 0:
        raise EmptyInput("empty point set")
    if pts.size == 1:
        return 0.0
    if pts.size <= 3:
        return float(np.abs(pts[:, None] - pts[None, :]).max())
    xy = np.column_stack([pts.real, pts.imag])
    try:
        from scipy.spatial import ConvexHull

        hull = xy[ConvexHull(xy).vertices]
        d = np.hypot(
            hull[:, None, 0] - hull[None, :, 0], hull[:, None, 1] - hull[None, :, 1]
        )
        return float(d.max())
    except Exception:
        span_x = pts.real.max() - pts.real.min()
        span_y = pts.imag.max() - pts.imag.min()
        return float(math.hypot(span_x, span_y))
