"""Scene state for confined-cabinet retrieval: types, random generation, region grid, serialization.

Coordinate convention: the cabinet floor spans [0, d_x] x [0, d_y] with the
single opening on the y = 0 edge. The robot base sits outside the opening at
negative y. Objects are axis-aligned boxes resting on the floor.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import Rect2

FORMAT_VERSION = 1


class SceneError(ValueError):
    """Invalid scene state or scene construction input."""


class SceneGenerationError(RuntimeError):
    """Rejection sampling exhausted its attempt budget; retry with another seed."""


class SceneParseError(ValueError):
    """Malformed serialized scene record."""


@dataclass(frozen=True)
class Vec3:
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise SceneError(f"non-finite vector: {self}")

    def distance(self, other: "Vec3") -> float:
        return math.sqrt(
            (self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2
        )


@dataclass(frozen=True)
class SceneSpec:
    """Cabinet outer dimensions, region cell size, and the front-face opening."""

    d_x: float
    d_y: float
    d_z: float
    cell: float
    opening_min: float = 0.0
    opening_max: float | None = None

    def __post_init__(self) -> None:
        if self.opening_max is None:
            object.__setattr__(self, "opening_max", self.d_x)
        if min(self.d_x, self.d_y, self.d_z) <= 0:
            raise SceneError("cabinet dimensions must be positive")
        if not (0 < self.cell <= min(self.d_x, self.d_y)):
            raise SceneError("cell size must be in (0, min(d_x, d_y)]")
        if not (0.0 <= self.opening_min < self.opening_max <= self.d_x):
            raise SceneError("opening interval must be a sub-interval of [0, d_x]")

    @property
    def opening_mid(self) -> float:
        return 0.5 * (self.opening_min + self.opening_max)

    @property
    def floor_diag(self) -> float:
        return math.hypot(self.d_x, self.d_y)

    def floor_rect(self) -> Rect2:
        return Rect2(0.0, self.d_x, 0.0, self.d_y)


@dataclass(frozen=True)
class ObjectState:
    """One object: center of its tightest axis-aligned box plus the box dimensions."""

    id: int
    cx: float
    cy: float
    cz: float
    dx: float
    dy: float
    dz: float
    is_target: bool = False

    def __post_init__(self) -> None:
        if min(self.dx, self.dy, self.dz) <= 0:
            raise SceneError(f"object {self.id}: dimensions must be positive")

    def moved_to(self, cx: float, cy: float) -> "ObjectState":
        """Same object relocated in the plane; stays resting on the floor."""
        return replace(self, cx=cx, cy=cy, cz=self.dz / 2.0)


@dataclass(frozen=True)
class Region:
    """Floor grid cell center with its observed flag (1 observed, 0 not)."""

    cx: float
    cy: float
    cz: float = 0.0
    flag: int = 0

    def __post_init__(self) -> None:
        if self.flag not in (0, 1):
            raise SceneError(f"region flag must be 0 or 1, got {self.flag}")


@dataclass(frozen=True)
class GraspPose:
    position: Vec3
    yaw: float

    def __post_init__(self) -> None:
        if not (-math.pi <= self.yaw < math.pi):
            raise SceneError(f"yaw must lie in [-pi, pi), got {self.yaw}")


@dataclass
class SceneState:
    """Full world state: cabinet, robot base, target grasp, objects and floor regions."""

    spec: SceneSpec
    robot_base: Vec3
    grasp: GraspPose
    objects: list[ObjectState]
    regions: list[Region]
    gripper_radius: float

    def __post_init__(self) -> None:
        if self.gripper_radius <= 0:
            raise SceneError("gripper_radius must be positive")
        if sum(1 for o in self.objects if o.is_target) != 1:
            raise SceneError("scene must contain exactly one target object")

    @property
    def target(self) -> ObjectState:
        return next(o for o in self.objects if o.is_target)

    @property
    def non_targets(self) -> list[ObjectState]:
        return [o for o in self.objects if not o.is_target]

    def object_by_id(self, obj_id: int) -> ObjectState:
        for o in self.objects:
            if o.id == obj_id:
                return o
        raise SceneError(f"no object with id {obj_id}")

    def copy(self) -> "SceneState":
        return SceneState(
            spec=self.spec,
            robot_base=self.robot_base,
            grasp=self.grasp,
            objects=list(self.objects),
            regions=list(self.regions),
            gripper_radius=self.gripper_radius,
        )

    def with_objects(self, objects: list[ObjectState]) -> "SceneState":
        s = self.copy()
        s.objects = objects
        return s

    def validate(self) -> None:
        """Check placement invariants; raises SceneError on violation."""
        floor = self.spec.floor_rect()
        fps = [(o.id, footprint(o)) for o in self.objects]
        for oid, fp in fps:
            if not floor.contains_rect(fp):
                raise SceneError(f"object {oid} footprint leaves the cabinet floor")
        for i in range(len(fps)):
            for j in range(i + 1, len(fps)):
                if fps[i][1].overlaps(fps[j][1]):
                    raise SceneError(
                        f"objects {fps[i][0]} and {fps[j][0]} overlap in the plane"
                    )


def footprint(o: ObjectState) -> Rect2:
    """Planar footprint of an object's bounding box."""
    return Rect2(
        o.cx - o.dx / 2.0, o.cx + o.dx / 2.0, o.cy - o.dy / 2.0, o.cy + o.dy / 2.0
    )


def region_cell_rect(spec: SceneSpec, r: Region) -> Rect2:
    h = spec.cell / 2.0
    return Rect2(r.cx - h, r.cx + h, r.cy - h, r.cy + h)


def region_grid(spec: SceneSpec) -> list[Region]:
    """Uniform n_x by n_y cell grid on the floor, truncated boundary cells dropped.

    Row-major ordering: index = row * n_x + col with rows advancing along +y.
    All flags start unobserved.
    """
    eps = 1e-9
    n_x = int(math.floor(spec.d_x / spec.cell + eps))
    n_y = int(math.floor(spec.d_y / spec.cell + eps))
    out = []
    for j in range(n_y):
        for i in range(n_x):
            out.append(Region(cx=(i + 0.5) * spec.cell, cy=(j + 0.5) * spec.cell))
    return out


def region_occupied(r: Region, s: SceneState, exclude_id: int | None = None) -> bool:
    """True iff the region's cell rectangle overlaps any object footprint.

    exclude_id skips one object (used when scoring placements for that object).
    """
    cell = region_cell_rect(s.spec, r)
    for o in s.objects:
        if exclude_id is not None and o.id == exclude_id:
            continue
        if cell.overlaps(footprint(o)):
            return True
    return False


def region_index_at(s: SceneState, x: float, y: float) -> int | None:
    """Index of the grid cell containing (x, y), or None over dropped border strips."""
    for i, r in enumerate(s.regions):
        if region_cell_rect(s.spec, r).contains_point(x, y):
            return i
    return None


# ---------------------------------------------------------------------------
# Random scene generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SceneGenConfig:
    """Knobs for random confined-scene generation.

    Defaults mirror the physical cabinet (0.56 x 0.86 x 0.50 m). Footprint
    sides are sampled in [obj_side_min, obj_side_max]; the target is forced
    to the deep half of the cabinet with probability target_deep_prob so most
    scenes start blocked.
    """

    d_x: float = 0.56
    d_y: float = 0.86
    d_z: float = 0.50
    cell: float = 0.08
    opening_min: float = 0.0
    opening_max: float | None = None
    m_min: int = 3
    m_max: int = 8
    obj_side_min: float = 0.04
    obj_side_max: float = 0.15
    obj_height_min: float = 0.05
    obj_height_max: float = 0.30
    gripper_radius: float = 0.04
    target_deep_prob: float = 0.85
    wall_margin: float = 0.01
    min_gap: float = 0.01
    robot_standoff: float = 0.2
    max_attempts: int = 2000

    def scene_spec(self) -> SceneSpec:
        return SceneSpec(
            d_x=self.d_x,
            d_y=self.d_y,
            d_z=self.d_z,
            cell=self.cell,
            opening_min=self.opening_min,
            opening_max=self.d_x if self.opening_max is None else self.opening_max,
        )


def entry_point(spec: SceneSpec) -> tuple[float, float]:
    """Planar entry position: midpoint of the opening on the y = 0 edge."""
    return (spec.opening_mid, 0.0)


def default_robot_base(spec: SceneSpec, standoff: float = 0.2) -> Vec3:
    return Vec3(spec.opening_mid, -standoff, 0.0)


def _sample_box(rng: np.random.Generator, cfg: SceneGenConfig) -> tuple[float, float, float]:
    dx = rng.uniform(cfg.obj_side_min, cfg.obj_side_max)
    dy = rng.uniform(cfg.obj_side_min, cfg.obj_side_max)
    dz = rng.uniform(cfg.obj_height_min, cfg.obj_height_max)
    return dx, dy, dz


def _grown(fp: Rect2, pad: float) -> Rect2:
    return Rect2(fp.x_min - pad, fp.x_max + pad, fp.y_min - pad, fp.y_max + pad)


def generate_scene(gen_config: SceneGenConfig, seed: int) -> SceneState:
    """Sample a valid random scene; pure function of (gen_config, seed).

    The target keeps gripper clearance from the walls so its grasp
    configuration is always wall-free, and every object keeps the entry
    point clear so planning queries start in free space. Raises
    SceneGenerationError when rejection sampling runs out of attempts.
    """
    cfg = gen_config
    spec = cfg.scene_spec()
    rng = np.random.default_rng(seed)
    ex, ey = entry_point(spec)
    entry_clear = cfg.gripper_radius + 0.01

    m = int(rng.integers(cfg.m_min, cfg.m_max + 1))

    placed: list[ObjectState] = []
    footprints: list[Rect2] = []

    def try_place(obj_id: int, is_target: bool) -> ObjectState | None:
        dx, dy, dz = _sample_box(rng, cfg)
        half_x, half_y = dx / 2.0, dy / 2.0
        lo_x = half_x + cfg.wall_margin
        hi_x = spec.d_x - half_x - cfg.wall_margin
        lo_y = half_y + cfg.wall_margin
        hi_y = spec.d_y - half_y - cfg.wall_margin
        if is_target:
            # keep the grasp configuration clear of the walls
            clear = cfg.gripper_radius + 0.01
            lo_x, hi_x = max(lo_x, clear), min(hi_x, spec.d_x - clear)
            lo_y, hi_y = max(lo_y, clear), min(hi_y, spec.d_y - clear)
            if rng.random() < cfg.target_deep_prob:
                lo_y = max(lo_y, spec.d_y / 2.0)
        if lo_x >= hi_x or lo_y >= hi_y:
            return None
        cx = rng.uniform(lo_x, hi_x)
        cy = rng.uniform(lo_y, hi_y)
        cand = ObjectState(
            id=obj_id, cx=cx, cy=cy, cz=dz / 2.0, dx=dx, dy=dy, dz=dz,
            is_target=is_target,
        )
        fp = footprint(cand)
        if _grown(fp, cfg.gripper_radius).contains_point(ex, ey):
            return None
        grown = _grown(fp, cfg.min_gap)
        if any(grown.overlaps(other) for other in footprints):
            return None
        return cand

    # target first (index 0 keeps id assignment stable), then the m others
    for obj_id, is_target in [(0, True)] + [(i + 1, False) for i in range(m)]:
        for _ in range(cfg.max_attempts):
            cand = try_place(obj_id, is_target)
            if cand is not None:
                placed.append(cand)
                footprints.append(footprint(cand))
                break
        else:
            raise SceneGenerationError(
                f"could not place object {obj_id} after {cfg.max_attempts} attempts (seed {seed})"
            )

    target = placed[0]
    yaw = math.atan2(ey - target.cy, ex - target.cx)
    if yaw >= math.pi:
        yaw = -math.pi
    grasp = GraspPose(position=Vec3(target.cx, target.cy, target.cz), yaw=yaw)

    scene = SceneState(
        spec=spec,
        robot_base=default_robot_base(spec, cfg.robot_standoff),
        grasp=grasp,
        objects=placed,
        regions=region_grid(spec),
        gripper_radius=cfg.gripper_radius,
    )
    scene.validate()
    return scene


# ---------------------------------------------------------------------------
# Serialization (one JSON record per scene; full float precision)
# ---------------------------------------------------------------------------


def scene_to_record(s: SceneState) -> dict:
    return {
        "spec": {
            "dx": s.spec.d_x,
            "dy": s.spec.d_y,
            "dz": s.spec.d_z,
            "cell": s.spec.cell,
            "opening_min": s.spec.opening_min,
            "opening_max": s.spec.opening_max,
        },
        "robot_base": {"x": s.robot_base.x, "y": s.robot_base.y, "z": s.robot_base.z},
        "grasp": {
            "x": s.grasp.position.x,
            "y": s.grasp.position.y,
            "z": s.grasp.position.z,
            "yaw": s.grasp.yaw,
        },
        "gripper_radius": s.gripper_radius,
        "objects": [
            {
                "id": o.id,
                "cx": o.cx,
                "cy": o.cy,
                "cz": o.cz,
                "dx": o.dx,
                "dy": o.dy,
                "dz": o.dz,
                "is_target": o.is_target,
            }
            for o in s.objects
        ],
        "regions": [
            {"cx": r.cx, "cy": r.cy, "cz": r.cz, "flag": r.flag} for r in s.regions
        ],
    }


def serialize_scene(s: SceneState) -> str:
    """One-line JSON record; floats keep full round-trip precision."""
    return json.dumps(scene_to_record(s), separators=(",", ":"))


def _take(record: dict, key: str, context: str):
    if key not in record:
        raise SceneParseError(f"{context}: missing field {key!r}")
    return record[key]


def scene_from_record(record: dict, context: str = "scene record") -> SceneState:
    try:
        sp = _take(record, "spec", context)
        spec = SceneSpec(
            d_x=float(_take(sp, "dx", context + ".spec")),
            d_y=float(_take(sp, "dy", context + ".spec")),
            d_z=float(_take(sp, "dz", context + ".spec")),
            cell=float(_take(sp, "cell", context + ".spec")),
            opening_min=float(_take(sp, "opening_min", context + ".spec")),
            opening_max=float(_take(sp, "opening_max", context + ".spec")),
        )
        rb = _take(record, "robot_base", context)
        gr = _take(record, "grasp", context)
        objects = [
            ObjectState(
                id=int(_take(o, "id", f"{context}.objects[{i}]")),
                cx=float(_take(o, "cx", f"{context}.objects[{i}]")),
                cy=float(_take(o, "cy", f"{context}.objects[{i}]")),
                cz=float(_take(o, "cz", f"{context}.objects[{i}]")),
                dx=float(_take(o, "dx", f"{context}.objects[{i}]")),
                dy=float(_take(o, "dy", f"{context}.objects[{i}]")),
                dz=float(_take(o, "dz", f"{context}.objects[{i}]")),
                is_target=bool(_take(o, "is_target", f"{context}.objects[{i}]")),
            )
            for i, o in enumerate(_take(record, "objects", context))
        ]
        regions = [
            Region(
                cx=float(_take(r, "cx", f"{context}.regions[{i}]")),
                cy=float(_take(r, "cy", f"{context}.regions[{i}]")),
                cz=float(_take(r, "cz", f"{context}.regions[{i}]")),
                flag=int(_take(r, "flag", f"{context}.regions[{i}]")),
            )
            for i, r in enumerate(_take(record, "regions", context))
        ]
        return SceneState(
            spec=spec,
            robot_base=Vec3(
                float(_take(rb, "x", context + ".robot_base")),
                float(_take(rb, "y", context + ".robot_base")),
                float(_take(rb, "z", context + ".robot_base")),
            ),
            grasp=GraspPose(
                position=Vec3(
                    float(_take(gr, "x", context + ".grasp")),
                    float(_take(gr, "y", context + ".grasp")),
                    float(_take(gr, "z", context + ".grasp")),
                ),
                yaw=float(_take(gr, "yaw", context + ".grasp")),
            ),
            objects=objects,
            regions=regions,
            gripper_radius=float(_take(record, "gripper_radius", context)),
        )
    except SceneParseError:
        raise
    except (TypeError, ValueError, SceneError) as exc:
        raise SceneParseError(f"{context}: {exc}") from exc


def deserialize_scene(text: str, context: str = "scene record") -> SceneState:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"{context}: invalid JSON at char {exc.pos}: {exc.msg}") from exc
    if not isinstance(record, dict):
        raise SceneParseError(f"{context}: expected a JSON object")
    return scene_from_record(record, context)


def write_corpus(path, scenes: list[SceneState]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in scenes:
            fh.write(serialize_scene(s) + "\n")


def read_corpus(path) -> list[SceneState]:
    scenes = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            scenes.append(deserialize_scene(line, context=f"{path}:{lineno}"))
    return scenes
