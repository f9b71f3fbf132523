"""Shared geometry types and helpers for the simulated worlds.

Angle conventions, used consistently everywhere:
  - poses and turns are degrees in (-180, 180], positive counterclockwise;
  - camera bearings are degrees, positive to the RIGHT of the optical axis
    (so pixel u grows with camera bearing).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass


def norm_deg(angle: float) -> float:
    """Normalize an angle in degrees into (-180, 180]."""
    r = math.fmod(angle, 360.0)
    if r > 180.0:
        r -= 360.0
    elif r <= -180.0:
        r += 360.0
    return r


def _require_finite(name: str, *values: float) -> None:
    for v in values:
        if not math.isfinite(v):
            raise ValueError(f"{name} must be finite, got {v!r}")


@dataclass(frozen=True)
class Pose2:
    x: float
    y: float
    theta: float  # degrees CCW, (-180, 180]

    def __post_init__(self):
        _require_finite("Pose2", self.x, self.y, self.theta)
        object.__setattr__(self, "theta", norm_deg(self.theta))


@dataclass(frozen=True)
class Pose3:
    x: float
    y: float
    z: float
    yaw: float = 0.0  # degrees CCW, (-180, 180]

    def __post_init__(self):
        _require_finite("Pose3", self.x, self.y, self.z, self.yaw)
        object.__setattr__(self, "yaw", norm_deg(self.yaw))


@dataclass(frozen=True)
class CameraModel:
    width_px: int = 640
    height_px: int = 480
    hfov_deg: float = 90.0

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ValueError("image dimensions must be >= 1 pixel")
        if not (0.0 < self.hfov_deg < 180.0):
            raise ValueError("hfov must be in (0, 180) degrees")

    @property
    def focal_px(self) -> float:
        return (self.width_px / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)

    @property
    def cx(self) -> float:
        return self.width_px / 2.0

    @property
    def cy(self) -> float:
        return self.height_px / 2.0


@dataclass(frozen=True)
class Detection:
    label: str
    bbox: tuple[float, float, float, float]  # u_min, v_min, u_max, v_max in pixels
    median_depth_m: float | None = None

    def __post_init__(self):
        u0, v0, u1, v1 = self.bbox
        if u0 > u1 or v0 > v1:
            raise ValueError("bbox corners must be ordered")

    @property
    def u_center(self) -> float:
        return (self.bbox[0] + self.bbox[2]) / 2.0

    def to_dict(self) -> dict:
        return {"label": self.label, "bbox": list(self.bbox), "median_depth_m": self.median_depth_m}


@dataclass(frozen=True)
class SceneEntry:
    label: str
    range_m: float  # quantized to 0.1 m
    bearing_deg: float  # quantized to 1 degree, positive CCW


@dataclass(frozen=True)
class SceneDescription:
    entries: tuple[SceneEntry, ...]

    def render(self) -> str:
        if not self.entries:
            return "nothing visible"
        return "; ".join(
            f"{e.label}: range {e.range_m:.1f} m, bearing {e.bearing_deg:.0f} deg"
            for e in self.entries
        )


@dataclass(frozen=True)
class Box:
    """Axis-aligned box given by two corners (min, max)."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self):
        for lo, hi in zip(self.min_corner, self.max_corner):
            if lo > hi:
                raise ValueError("box corners must be ordered min <= max")

    def contains(self, p: tuple[float, float, float], inflate: float = 0.0) -> bool:
        return all(
            lo - inflate <= v <= hi + inflate
            for v, lo, hi in zip(p, self.min_corner, self.max_corner)
        )

    def to_dict(self) -> dict:
        return {"min": list(self.min_corner), "max": list(self.max_corner)}


def ray_box_distance(
    origin: tuple[float, float, float],
    direction: tuple[float, float, float],
    box: Box,
) -> float | None:
    """Distance along a unit ray to the box surface, or None if the ray misses."""
    t_enter, t_exit = -math.inf, math.inf
    for o, d, lo, hi in zip(origin, direction, box.min_corner, box.max_corner):
        if abs(d) < 1e-12:
            if not (lo <= o <= hi):
                return None
            continue
        t0 = (lo - o) / d
        t1 = (hi - o) / d
        if t0 > t1:
            t0, t1 = t1, t0
        t_enter = max(t_enter, t0)
        t_exit = min(t_exit, t1)
    if t_enter > t_exit or t_exit < 0.0:
        return None
    return max(t_enter, 0.0)


def canonical_hash(obj) -> str:
    """Deterministic digest of a JSON-serializable snapshot."""
    def enc(v):
        if isinstance(v, float):
            return repr(v)
        if isinstance(v, (list, tuple)):
            return [enc(x) for x in v]
        if isinstance(v, dict):
            return {k: enc(v[k]) for k in sorted(v)}
        return v

    blob = json.dumps(enc(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


class World:
    """Common surface every world provides to the session engine."""

    kind = "world"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.sample_observer = None  # callable(snapshot) for telemetry streams

    def api_effects(self) -> dict:
        raise NotImplementedError

    def snapshot(self) -> dict:
        raise NotImplementedError

    def state_hash(self) -> str:
        return canonical_hash(self.snapshot())

    def collision_count(self) -> int:
        return 0

    def _notify(self) -> None:
        if self.sample_observer is not None:
            self.sample_observer(self.snapshot())
