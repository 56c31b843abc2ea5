"""Planar motion planning for a disc gripper: collision tests, RRTConnect, smoothing.

The robot is a disc of the scene's gripper radius translating in the ground
plane. Free space is the cabinet interior plus a margin strip outside the
opening, minus object footprints inflated by the disc radius (exact
Minkowski inflation via distance-to-rectangle) and minus the walls. The
collision set is closed: distance exactly equal to the radius collides.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Rect2, points_rects_distance, points_segments_distance, rects_to_array
from .scene import GraspPose, SceneSpec, SceneState, Vec3, entry_point, footprint

DEFAULT_STEP = 0.03
DEFAULT_RESOLUTION = 0.005
ENTRY_MARGIN = 0.2


class StartGoalCollisionError(RuntimeError):
    """Planning query whose start or goal configuration is already in collision."""


@dataclass(frozen=True)
class Config:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite configuration: {self}")

    def distance(self, other: "Config") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass
class Path:
    waypoints: list[Config]

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("a path needs at least two waypoints")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if a == b:
                raise ValueError("consecutive waypoints must be distinct")

    @property
    def start(self) -> Config:
        return self.waypoints[0]

    @property
    def goal(self) -> Config:
        return self.waypoints[-1]

    def as_array(self) -> np.ndarray:
        return np.array([[w.x, w.y] for w in self.waypoints], dtype=np.float64)

    def segments(self) -> np.ndarray:
        """(S, 4) array of [ax, ay, bx, by] per consecutive waypoint pair."""
        pts = self.as_array()
        return np.hstack([pts[:-1], pts[1:]])


@dataclass(frozen=True)
class PlanBudget:
    """Iteration cap and optional wall-clock cap; whichever trips first ends the query."""

    max_iterations: int = 20000
    max_seconds: float | None = 1.0

    def __post_init__(self) -> None:
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if self.max_seconds is not None and self.max_seconds <= 0:
            raise ValueError("max_seconds must be positive when set")


class ObstacleSet:
    """Inflated object footprints plus the cabinet walls with their opening gap.

    Rectangles are stored uninflated together with the inflation radius; the
    point test is exact (distance-to-rectangle <= inflation).
    """

    def __init__(
        self,
        rects: list[Rect2],
        spec: SceneSpec,
        inflation: float,
        entry_margin: float = ENTRY_MARGIN,
    ) -> None:
        if inflation <= 0:
            raise ValueError("inflation must be positive")
        self.rects = list(rects)
        self.spec = spec
        self.inflation = float(inflation)
        self.entry_margin = float(entry_margin)
        self._rects_arr = rects_to_array(self.rects)
        segs = [
            (0.0, 0.0, 0.0, spec.d_y),
            (spec.d_x, 0.0, spec.d_x, spec.d_y),
            (0.0, spec.d_y, spec.d_x, spec.d_y),
        ]
        if spec.opening_min > 0.0:
            segs.append((0.0, 0.0, spec.opening_min, 0.0))
        if spec.opening_max < spec.d_x:
            segs.append((spec.opening_max, 0.0, spec.d_x, 0.0))
        self._wall_segs = np.array(segs, dtype=np.float64)
        self.sample_lo = np.array([0.0, -self.entry_margin])
        self.sample_hi = np.array([spec.d_x, spec.d_y])

    def collide_points(self, points: np.ndarray, inflation: float | None = None) -> np.ndarray:
        """Vectorized disc-collision test for an (N, 2) array of configurations."""
        r = self.inflation if inflation is None else inflation
        spec = self.spec
        x, y = points[:, 0], points[:, 1]
        in_cabinet = (x >= 0.0) & (x <= spec.d_x) & (y >= 0.0) & (y <= spec.d_y)
        in_strip = (
            (x >= spec.opening_min)
            & (x <= spec.opening_max)
            & (y >= -self.entry_margin)
            & (y <= 0.0)
        )
        out = ~(in_cabinet | in_strip)
        if self._rects_arr.shape[0]:
            out |= points_rects_distance(points, self._rects_arr).min(axis=1) <= r
        out |= points_segments_distance(points, self._wall_segs).min(axis=1) <= r
        return out


def collide(q: Config, obs: ObstacleSet) -> bool:
    """Closed-set membership test for the obstacle region."""
    return bool(obs.collide_points(np.array([[q.x, q.y]]))[0])


def _segment_samples(a: Config, b: Config, resolution: float) -> np.ndarray:
    n = max(2, int(math.ceil(a.distance(b) / resolution)) + 1)
    t = np.linspace(0.0, 1.0, n)
    return np.column_stack([a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)])


def segment_collides(
    a: Config, b: Config, obs: ObstacleSet, resolution: float = DEFAULT_RESOLUTION
) -> bool:
    """Sampled edge test at spacing <= resolution, endpoints included."""
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    return bool(obs.collide_points(_segment_samples(a, b, resolution)).any())


def validate_path(p: Path, obs: ObstacleSet, resolution: float = DEFAULT_RESOLUTION) -> bool:
    """Full re-validation of every edge; planners must only return paths passing this."""
    return not any(
        segment_collides(a, b, obs, resolution)
        for a, b in zip(p.waypoints, p.waypoints[1:])
    )


# ---------------------------------------------------------------------------
# Sound disconnection proof on an occupancy grid
# ---------------------------------------------------------------------------


def grid_disconnected(start: Config, goal: Config, obs: ObstacleSet, cell: float = 0.01) -> bool:
    """Prove start and goal are in different free-space components, if possible.

    Obstacles are shrunk by the grid half-diagonal before rasterizing, so any
    continuous collision-free path maps to an 8-connected chain of free
    cells; disconnection of the relaxed grid is therefore exact. Returns
    False whenever no proof is available (never a false positive).
    """
    relax = cell * math.sqrt(2.0) / 2.0
    r_eff = obs.inflation - relax
    if r_eff <= 0.0:
        return False
    spec = obs.spec
    x0, y0 = -relax - cell, -obs.entry_margin - relax - cell
    nx = int(math.ceil((spec.d_x + relax + cell - x0) / cell)) + 1
    ny = int(math.ceil((spec.d_y + relax + cell - y0) / cell)) + 1
    xs = x0 + (np.arange(nx) + 0.5) * cell
    ys = y0 + (np.arange(ny) + 0.5) * cell
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([gx.ravel(), gy.ravel()])

    x, y = pts[:, 0], pts[:, 1]
    in_cab = (
        (x >= -relax) & (x <= spec.d_x + relax) & (y >= -relax) & (y <= spec.d_y + relax)
    )
    in_strip = (
        (x >= spec.opening_min - relax)
        & (x <= spec.opening_max + relax)
        & (y >= -obs.entry_margin - relax)
        & (y <= relax)
    )
    free = in_cab | in_strip
    if obs._rects_arr.shape[0]:
        free &= points_rects_distance(pts, obs._rects_arr).min(axis=1) > r_eff
    free &= points_segments_distance(pts, obs._wall_segs).min(axis=1) > r_eff
    free = free.reshape(nx, ny)

    labels, _ = ndimage.label(free, structure=np.ones((3, 3), dtype=int))

    def cell_of(q: Config) -> tuple[int, int]:
        i = min(nx - 1, max(0, int((q.x - x0) / cell)))
        j = min(ny - 1, max(0, int((q.y - y0) / cell)))
        return i, j

    si, sj = cell_of(start)
    gi, gj = cell_of(goal)
    ls, lg = labels[si, sj], labels[gi, gj]
    if ls == 0 or lg == 0:
        return False
    return bool(ls != lg)


# ---------------------------------------------------------------------------
# RRTConnect
# ---------------------------------------------------------------------------


class _Tree:
    def __init__(self, root: Config, capacity: int) -> None:
        self.nodes = np.empty((capacity + 2, 2), dtype=np.float64)
        self.parent = np.empty(capacity + 2, dtype=np.int64)
        self.nodes[0] = (root.x, root.y)
        self.parent[0] = -1
        self.size = 1

    def nearest(self, q: np.ndarray) -> int:
        d = self.nodes[: self.size] - q
        return int(np.argmin(np.einsum("ij,ij->i", d, d)))

    def add(self, q: np.ndarray, parent: int) -> int:
        i = self.size
        if i >= self.nodes.shape[0]:
            self.nodes = np.vstack([self.nodes, np.empty_like(self.nodes)])
            self.parent = np.concatenate([self.parent, np.empty_like(self.parent)])
        self.nodes[i] = q
        self.parent[i] = parent
        self.size = i + 1
        return i

    def trace(self, i: int) -> list[tuple[float, float]]:
        out = []
        while i >= 0:
            out.append((float(self.nodes[i, 0]), float(self.nodes[i, 1])))
            i = int(self.parent[i])
        return out


_TRAPPED, _ADVANCED, _REACHED = 0, 1, 2


def _edge_free(obs: ObstacleSet, a: np.ndarray, b: np.ndarray, resolution: float) -> bool:
    dist = math.hypot(b[0] - a[0], b[1] - a[1])
    n = max(2, int(math.ceil(dist / resolution)) + 1)
    t = np.linspace(0.0, 1.0, n)[:, None]
    pts = a[None, :] + t * (b - a)[None, :]
    return not obs.collide_points(pts).any()


def _extend(tree: _Tree, q: np.ndarray, obs: ObstacleSet, step: float, resolution: float):
    near = tree.nearest(q)
    base = tree.nodes[near]
    delta = q - base
    dist = math.hypot(delta[0], delta[1])
    if dist <= 1e-12:
        return _REACHED, near
    if dist <= step:
        qnew, status = q, _REACHED
    else:
        qnew, status = base + (step / dist) * delta, _ADVANCED
    if not _edge_free(obs, base, qnew, resolution):
        return _TRAPPED, -1
    return status, tree.add(qnew, near)


def _connect(tree: _Tree, q: np.ndarray, obs: ObstacleSet, step: float, resolution: float):
    while True:
        status, idx = _extend(tree, q, obs, step, resolution)
        if status != _ADVANCED:
            return status, idx


def rrt_connect(
    start: Config,
    goal: Config,
    obs: ObstacleSet,
    budget: PlanBudget,
    seed: int,
    step: float = DEFAULT_STEP,
    resolution: float = DEFAULT_RESOLUTION,
    disconnect_check_after: int | None = 300,
) -> Path | None:
    """Bidirectional RRTConnect over the cabinet interior plus the opening margin.

    Deterministic for fixed inputs and seed. Returns None when the budget is
    exhausted, or earlier when the occupancy-grid proof certifies that start
    and goal are disconnected (disable with disconnect_check_after=None).
    Raises StartGoalCollisionError when either query configuration collides.
    """
    if collide(start, obs) or collide(goal, obs):
        raise StartGoalCollisionError(f"start or goal in collision: {start} -> {goal}")

    qs = np.array([start.x, start.y])
    qg = np.array([goal.x, goal.y])
    rng = np.random.default_rng(seed)
    cap = min(budget.max_iterations + 2, 40000)
    ta, tb = _Tree(start, cap), _Tree(goal, cap)
    swapped = False
    deadline = (
        time.monotonic() + budget.max_seconds if budget.max_seconds is not None else None
    )
    span = obs.sample_hi - obs.sample_lo

    for it in range(budget.max_iterations):
        if deadline is not None and time.monotonic() > deadline:
            return None
        if disconnect_check_after is not None and it == disconnect_check_after:
            if grid_disconnected(start, goal, obs):
                return None
        qrand = obs.sample_lo + rng.random(2) * span
        status, idx = _extend(ta, qrand, obs, step, resolution)
        if status != _TRAPPED:
            qnew = ta.nodes[idx].copy()
            cstatus, cidx = _connect(tb, qnew, obs, step, resolution)
            if cstatus == _REACHED:
                if swapped:
                    pts = tb.trace(cidx)[::-1] + ta.trace(idx)
                else:
                    pts = ta.trace(idx)[::-1] + tb.trace(cidx)
                waypoints = [Config(x, y) for x, y in pts]
                deduped = [waypoints[0]]
                for w in waypoints[1:]:
                    if w != deduped[-1]:
                        deduped.append(w)
                if len(deduped) < 2:
                    return None
                return Path(deduped)
        ta, tb = tb, ta
        swapped = not swapped
    return None


def _point_at(pts: np.ndarray, cum: np.ndarray, sdist: float) -> tuple[np.ndarray, int]:
    """Point at arc length sdist along a polyline, and the segment index it lies on."""
    i = int(np.searchsorted(cum, sdist, side="right") - 1)
    i = min(i, len(pts) - 2)
    seg_len = cum[i + 1] - cum[i]
    t = 0.0 if seg_len <= 0 else (sdist - cum[i]) / seg_len
    return pts[i] + t * (pts[i + 1] - pts[i]), i


def smooth(
    p: Path,
    obs: ObstacleSet,
    iterations: int = 200,
    seed: int = 0,
    resolution: float = DEFAULT_RESOLUTION,
) -> Path:
    """Random shortcut smoothing; never increases length, deterministic per seed.

    Each trial picks two arc-length parameters, replacing the intermediate
    polyline with a straight segment when it is collision-free and strictly
    shorter.
    """
    rng = np.random.default_rng(seed)
    pts = p.as_array()
    for _ in range(iterations):
        diffs = np.diff(pts, axis=0)
        seg_lens = np.hypot(diffs[:, 0], diffs[:, 1])
        cum = np.concatenate([[0.0], np.cumsum(seg_lens)])
        total = cum[-1]
        if total <= 0:
            break
        s1, s2 = sorted(rng.random(2) * total)
        if s2 - s1 <= 1e-12:
            continue
        pa, ia = _point_at(pts, cum, s1)
        pb, ib = _point_at(pts, cum, s2)
        straight = math.hypot(pb[0] - pa[0], pb[1] - pa[1])
        if (s2 - s1) - straight <= 1e-12:
            continue
        if not _edge_free(obs, pa, pb, resolution):
            continue
        pts = np.vstack([pts[: ia + 1], pa, pb, pts[ib + 1 :]])
        keep = [0]
        for k in range(1, len(pts)):
            if math.hypot(*(pts[k] - pts[keep[-1]])) > 1e-12:
                keep.append(k)
        pts = pts[keep]
    return Path([Config(float(x), float(y)) for x, y in pts])


# ---------------------------------------------------------------------------
# Scene-level queries
# ---------------------------------------------------------------------------


def grasp_config(g: GraspPose) -> Config:
    """Planar projection of the grasp pose (z and yaw drop out)."""
    return Config(g.position.x, g.position.y)


def entry_config(s: SceneState) -> Config:
    ex, ey = entry_point(s.spec)
    return Config(ex, ey)


def build_obstacles(
    s: SceneState,
    exclude_ids: set[int] | frozenset[int] = frozenset(),
    inflation: float | None = None,
    entry_margin: float = ENTRY_MARGIN,
) -> ObstacleSet:
    rects = [footprint(o) for o in s.objects if o.id not in exclude_ids]
    return ObstacleSet(
        rects,
        s.spec,
        s.gripper_radius if inflation is None else inflation,
        entry_margin=entry_margin,
    )


def walls_only_obstacles(s: SceneState, entry_margin: float = ENTRY_MARGIN) -> ObstacleSet:
    return ObstacleSet([], s.spec, s.gripper_radius, entry_margin=entry_margin)


def reachable(
    s: SceneState,
    exclude_ids: set[int] | frozenset[int] = frozenset(),
    budget: PlanBudget = PlanBudget(),
    seed: int = 0,
    step: float = DEFAULT_STEP,
    resolution: float = DEFAULT_RESOLUTION,
) -> Path | None:
    """Entry-to-grasp query ignoring the target and exclude_ids; present iff retrievable.

    Propagates StartGoalCollisionError when the entry or grasp configuration
    is itself blocked by a remaining obstacle.
    """
    exclude = set(exclude_ids) | {s.target.id}
    obs = build_obstacles(s, exclude)
    return rrt_connect(
        entry_config(s), grasp_config(s.grasp), obs, budget, seed,
        step=step, resolution=resolution,
    )


def path_length(p: Path) -> float:
    pts = p.as_array()
    return float(np.hypot(*(np.diff(pts, axis=0).T)).sum())


def move_distance(l_r: Vec3, l_s: Vec3, l_g: Vec3) -> float:
    """Robot-base travel proxy: base to pick location, then to place location."""
    return l_r.distance(l_s) + l_s.distance(l_g)
