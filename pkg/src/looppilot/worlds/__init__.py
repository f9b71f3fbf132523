"""Deterministic, seedable desk-scale worlds and their reference algorithms."""

from __future__ import annotations

from ..errors import ScenarioError
from .base import (
    Box,
    CameraModel,
    Detection,
    Pose2,
    Pose3,
    SceneDescription,
    SceneEntry,
    World,
    canonical_hash,
    norm_deg,
    ray_box_distance,
)
from .blocks import BlocksWorld
from .catch2d import CatchWorld, run_reference_servo, servo_command
from .drone3d import (
    DroneWorld,
    gen_circle,
    gen_lawnmower,
    random_avoidance_world,
    run_reference_avoid,
)
from .nav2d import NavWorld, depth_mask, estimate_angle, random_nav_world

WORLD_TYPES = ("catch2d", "drone3d", "nav2d", "blocks")


def make_world(world_type: str, seed: int, params: dict | None = None) -> World:
    """Construct a world from its scenario-file declaration."""
    params = dict(params or {})
    try:
        if world_type == "catch2d":
            camera = params.pop("camera", None)
            if camera:
                camera = CameraModel(**camera)
            return CatchWorld(seed=seed, camera=camera, **params)
        if world_type == "drone3d":
            boxes = [Box(tuple(b["min"]), tuple(b["max"])) for b in params.pop("boxes", [])]
            start = tuple(params.pop("start", (0.0, 0.0)))
            return DroneWorld(seed=seed, boxes=boxes, start=start, **params)
        if world_type == "nav2d":
            agent = tuple(params.pop("agent", (0.0, 0.0, 0.0)))
            camera = params.pop("camera", None)
            if camera:
                camera = CameraModel(**camera)
            return NavWorld(seed=seed, agent=agent, camera=camera, **params)
        if world_type == "blocks":
            grid = params.pop("grid", {})
            return BlocksWorld(
                seed=seed,
                blocks=params.pop("blocks", []),
                grid_origin=tuple(grid.get("origin", (0.0, 0.0))),
                cell_size=grid.get("cell_size", 0.12),
                target_layout=params.pop("target_layout", None),
                **params,
            )
    except TypeError as exc:
        raise ScenarioError("world.params", str(exc)) from exc
    raise ScenarioError("world.type", f"unknown world type {world_type!r}")


__all__ = [
    "BlocksWorld",
    "Box",
    "CameraModel",
    "CatchWorld",
    "Detection",
    "DroneWorld",
    "NavWorld",
    "Pose2",
    "Pose3",
    "SceneDescription",
    "SceneEntry",
    "World",
    "WORLD_TYPES",
    "canonical_hash",
    "depth_mask",
    "estimate_angle",
    "gen_circle",
    "gen_lawnmower",
    "make_world",
    "norm_deg",
    "random_avoidance_world",
    "random_nav_world",
    "ray_box_distance",
    "run_reference_avoid",
    "run_reference_servo",
    "servo_command",
]
