"""Planar geometry primitives shared by collision checking, visibility and labeling.

Everything works on axis-aligned rectangles and segments in the cabinet
ground plane. Functions come in scalar and vectorized (numpy) flavours;
the vectorized ones are the hot path of the motion planner.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Rect2:
    """Axis-aligned rectangle [x_min, x_max] x [y_min, y_max]."""

    x_min: float
    x_max: float
    y_min: float
    y_max: float

    def __post_init__(self) -> None:
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"degenerate rectangle: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))

    def contains_point(self, x: float, y: float) -> bool:
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def overlaps(self, other: "Rect2") -> bool:
        """Positive-area intersection; shared edges do not count."""
        return (
            self.x_min < other.x_max
            and other.x_min < self.x_max
            and self.y_min < other.y_max
            and other.y_min < self.y_max
        )

    def contains_rect(self, other: "Rect2") -> bool:
        return (
            self.x_min <= other.x_min
            and other.x_max <= self.x_max
            and self.y_min <= other.y_min
            and other.y_max <= self.y_max
        )

    def recentered(self, cx: float, cy: float) -> "Rect2":
        hw, hh = 0.5 * self.width, 0.5 * self.height
        return Rect2(cx - hw, cx + hw, cy - hh, cy + hh)


def rects_to_array(rects: list[Rect2]) -> np.ndarray:
    """Pack rectangles into an (R, 4) float array [x_min, x_max, y_min, y_max]."""
    if not rects:
        return np.zeros((0, 4), dtype=np.float64)
    return np.array(
        [[r.x_min, r.x_max, r.y_min, r.y_max] for r in rects], dtype=np.float64
    )


def point_rect_distance(x: float, y: float, rect: Rect2) -> float:
    """Euclidean distance from a point to a closed rectangle (0 inside)."""
    dx = max(rect.x_min - x, 0.0, x - rect.x_max)
    dy = max(rect.y_min - y, 0.0, y - rect.y_max)
    return math.hypot(dx, dy)


def points_rects_distance(points: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """Distances from each point to each rectangle.

    points: (N, 2); rects: (R, 4) as packed by rects_to_array. Returns (N, R).
    """
    px = points[:, 0][:, None]
    py = points[:, 1][:, None]
    dx = np.maximum(rects[None, :, 0] - px, 0.0)
    dx = np.maximum(dx, px - rects[None, :, 1])
    dy = np.maximum(rects[None, :, 2] - py, 0.0)
    dy = np.maximum(dy, py - rects[None, :, 3])
    return np.hypot(dx, dy)


def points_segments_distance(points: np.ndarray, segs: np.ndarray) -> np.ndarray:
    """Distances from each point (N, 2) to each segment (S, 4) [ax, ay, bx, by]."""
    a = segs[None, :, 0:2]
    d = segs[None, :, 2:4] - a
    w = points[:, None, :] - a
    denom = np.einsum("nsk,nsk->ns", d, d)
    t = np.zeros_like(denom)
    nz = denom > 0.0
    t[nz] = np.einsum("nsk,nsk->ns", w, d)[nz] / denom[nz]
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[:, :, None] * d
    return np.hypot(points[:, None, 0] - closest[:, :, 0], points[:, None, 1] - closest[:, :, 1])


def segment_point_distance(ax: float, ay: float, bx: float, by: float, px: float, py: float) -> float:
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    if denom == 0.0:
        return math.hypot(px - ax, py - ay)
    t = ((px - ax) * dx + (py - ay) * dy) / denom
    t = min(1.0, max(0.0, t))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _orient(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def segments_intersect(
    ax: float, ay: float, bx: float, by: float,
    cx: float, cy: float, dx: float, dy: float,
) -> bool:
    """Closed-segment intersection test (touching counts)."""
    o1 = _orient(ax, ay, bx, by, cx, cy)
    o2 = _orient(ax, ay, bx, by, dx, dy)
    o3 = _orient(cx, cy, dx, dy, ax, ay)
    o4 = _orient(cx, cy, dx, dy, bx, by)
    if ((o1 > 0) != (o2 > 0)) and ((o3 > 0) != (o4 > 0)) and o1 != 0 and o2 != 0 and o3 != 0 and o4 != 0:
        return True

    def on_seg(px, py, qx, qy, rx, ry):
        return (
            _orient(px, py, qx, qy, rx, ry) == 0.0
            and min(px, qx) <= rx <= max(px, qx)
            and min(py, qy) <= ry <= max(py, qy)
        )

    return (
        on_seg(ax, ay, bx, by, cx, cy)
        or on_seg(ax, ay, bx, by, dx, dy)
        or on_seg(cx, cy, dx, dy, ax, ay)
        or on_seg(cx, cy, dx, dy, bx, by)
    )


def segment_intersects_rect(ax: float, ay: float, bx: float, by: float, rect: Rect2) -> bool:
    """True iff the closed segment meets the closed rectangle (slab clipping)."""
    dx, dy = bx - ax, by - ay
    t0, t1 = 0.0, 1.0
    for d, lo, hi, o in ((dx, rect.x_min, rect.x_max, ax), (dy, rect.y_min, rect.y_max, ay)):
        if d == 0.0:
            if o < lo or o > hi:
                return False
        else:
            ta = (lo - o) / d
            tb = (hi - o) / d
            if ta > tb:
                ta, tb = tb, ta
            t0 = max(t0, ta)
            t1 = min(t1, tb)
            if t0 > t1:
                return False
    return True


def segment_rect_distance(ax: float, ay: float, bx: float, by: float, rect: Rect2) -> float:
    """Exact distance between a segment and a closed rectangle (0 on contact)."""
    if segment_intersects_rect(ax, ay, bx, by, rect):
        return 0.0
    corners = (
        (rect.x_min, rect.y_min),
        (rect.x_max, rect.y_min),
        (rect.x_max, rect.y_max),
        (rect.x_min, rect.y_max),
    )
    best = min(
        point_rect_distance(ax, ay, rect),
        point_rect_distance(bx, by, rect),
    )
    for i in range(4):
        cx, cy = corners[i]
        best = min(best, segment_point_distance(ax, ay, bx, by, cx, cy))
    return best


def segments_rects_distance(segs: np.ndarray, rects: np.ndarray) -> np.ndarray:
    """Exact distance between each segment (S, 4) and each rectangle (R, 4).

    Vectorized counterpart of segment_rect_distance: distance is zero when
    the segment crosses the rectangle, otherwise the minimum of endpoint-to-
    rect and segment-to-corner distances.
    """
    S = segs.shape[0]
    R = rects.shape[0]
    if S == 0 or R == 0:
        return np.zeros((S, R), dtype=np.float64)

    # endpoint-to-rect distances
    d_ends = np.minimum(
        points_rects_distance(segs[:, 0:2], rects),
        points_rects_distance(segs[:, 2:4], rects),
    )

    # segment-to-corner distances
    corners = np.stack(
        [
            rects[:, [0, 2]],
            rects[:, [1, 2]],
            rects[:, [1, 3]],
            rects[:, [0, 3]],
        ],
        axis=1,
    )  # (R, 4, 2)
    a = segs[:, None, None, 0:2]
    d = segs[:, None, None, 2:4] - a
    w = corners[None, :, :, :] - a
    denom = np.einsum("srck,srck->src", d, d)
    t = np.zeros_like(denom)
    nz = denom > 0.0
    num = np.einsum("srck,srck->src", w, d)
    t[nz] = num[nz] / denom[nz]
    t = np.clip(t, 0.0, 1.0)
    closest = a + t[..., None] * d
    d_corner = np.hypot(
        corners[None, :, :, 0] - closest[..., 0],
        corners[None, :, :, 1] - closest[..., 1],
    ).min(axis=2)

    dist = np.minimum(d_ends, d_corner)

    # zero out crossing pairs via slab clipping
    t0 = np.zeros((S, R))
    t1 = np.ones((S, R))
    ok = np.ones((S, R), dtype=bool)
    for axis, (lo_i, hi_i) in enumerate(((0, 1), (2, 3))):
        o = segs[:, axis][:, None]
        dd = (segs[:, 2 + axis] - segs[:, axis])[:, None]
        lo = rects[None, :, lo_i]
        hi = rects[None, :, hi_i]
        par = dd == 0.0
        ok &= ~(par & ((o < lo) | (o > hi)))
        with np.errstate(divide="ignore", invalid="ignore"):
            ta = (lo - o) / dd
            tb = (hi - o) / dd
        lo_t = np.minimum(ta, tb)
        hi_t = np.maximum(ta, tb)
        take = ~par
        t0 = np.where(take, np.maximum(t0, lo_t), t0)
        t1 = np.where(take, np.minimum(t1, hi_t), t1)
    crossing = ok & (t0 <= t1)
    dist[crossing] = 0.0
    return dist
