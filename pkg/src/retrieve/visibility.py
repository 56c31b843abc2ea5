"""Ground-region observation via 2D raycasts from viewpoints at the cabinet opening.

Stands in for an in-hand-camera sensing pass: a floor region counts as
observed when some viewpoint has an unobstructed straight ray to its cell
center inside the viewpoint's field of view. Object poses are treated as
known; only the floor observed/unobserved flags evolve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geometry import segment_intersects_rect
from .scene import SceneSpec, SceneState, Vec3, footprint


@dataclass(frozen=True)
class Viewpoint:
    """Camera position at or outside the opening, looking straight into the cabinet (+y)."""

    position: Vec3
    fov_half_angle: float = math.pi / 3.0

    def __post_init__(self) -> None:
        if self.position.y > 0.0:
            raise ValueError("viewpoint must sit on or outside the front face (y <= 0)")
        if not (0.0 < self.fov_half_angle <= math.pi / 2.0):
            raise ValueError("fov_half_angle must lie in (0, pi/2]")


def default_viewpoints(
    spec: SceneSpec,
    count: int = 3,
    standoff: float = 0.1,
    fov_half_angle: float = math.pi / 3.0,
) -> list[Viewpoint]:
    """A fan of viewpoints across the opening, standoff meters outside it.

    The standoff widens the field-of-view footprint on the front region row,
    which is what makes an empty cabinet fully observed by three viewpoints.
    """
    width = spec.opening_max - spec.opening_min
    return [
        Viewpoint(
            position=Vec3(
                spec.opening_min + width * (k + 0.5) / count, -standoff, 0.0
            ),
            fov_half_angle=fov_half_angle,
        )
        for k in range(count)
    ]


def _center_visible(vx: float, vy: float, fov: float, cx: float, cy: float, rects) -> bool:
    # viewing axis is +y; reject rays outside the fov cone
    dx, dy = cx - vx, cy - vy
    if dy <= 0.0:
        return False
    if abs(math.atan2(dx, dy)) > fov:
        return False
    for rect in rects:
        if segment_intersects_rect(vx, vy, cx, cy, rect):
            return False
    return True


def observe(
    s: SceneState, viewpoints: list[Viewpoint], ray_count: int = 256
) -> SceneState:
    """Return the scene with region flags ORed with the current visibility.

    One ray is aimed at every region cell center (the dense limit of a
    ray_count-ray fan; ray_count is validated for interface compatibility).
    A flag never reverts to unobserved, so the call is idempotent.
    """
    if ray_count < 1:
        raise ValueError("ray_count must be >= 1")
    if not viewpoints:
        raise ValueError("at least one viewpoint required")
    rects = [footprint(o) for o in s.objects]
    regions = []
    for r in s.regions:
        flag = r.flag
        if flag == 0:
            for vp in viewpoints:
                if _center_visible(
                    vp.position.x, vp.position.y, vp.fov_half_angle, r.cx, r.cy, rects
                ):
                    flag = 1
                    break
        regions.append(replace(r, flag=flag))
    out = s.copy()
    out.regions = regions
    return out


def reobserve_after_move(
    s: SceneState, viewpoints: list[Viewpoint], ray_count: int = 256
) -> SceneState:
    """Recompute visibility on the current object poses, keeping old flags (OR).

    The observed map is persistent: relocating an occluder can only grow the
    observed set.
    """
    return observe(s, viewpoints, ray_count)
