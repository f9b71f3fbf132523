"""2D embodied navigation world with textual perception.

The agent moves on a plane among named point objects (0.25 m disks).  It
perceives the world through a forward camera (90 degree field of view) as
either detection records with bounding boxes or a polar textual scene
description — the latter is what closed-loop dialog navigation feeds to the
language model each turn.

No occlusion: an object is visible whenever it is within range and field of
view.  Motion is blocking-aware: driving forward stops 0.1 m before the
agent would overlap an object.
"""

from __future__ import annotations

import math
import random

from ..errors import BadParams, MissingDepth
from .base import CameraModel, Detection, Pose2, SceneDescription, SceneEntry, World, norm_deg

MAX_RANGE = 10.0
OBJECT_RADIUS = 0.25
STOP_MARGIN = 0.1


class WorldObject:
    __slots__ = ("label", "x", "y")

    def __init__(self, label: str, x: float, y: float):
        self.label = label
        self.x = float(x)
        self.y = float(y)

    def to_dict(self) -> dict:
        return {"label": self.label, "x": self.x, "y": self.y}


class NavWorld(World):
    kind = "nav2d"

    def __init__(
        self,
        seed: int = 0,
        agent: Pose2 | tuple[float, float, float] = (0.0, 0.0, 0.0),
        objects: list[dict] | None = None,
        camera: CameraModel | None = None,
        max_range: float = MAX_RANGE,
        depth_enabled: bool = True,
    ):
        super().__init__(seed)
        if not isinstance(agent, Pose2):
            agent = Pose2(*agent)
        self.agent = agent
        self.objects = [WorldObject(o["label"], o["x"], o["y"]) for o in (objects or [])]
        self.camera = camera or CameraModel()
        self.max_range = max_range
        self.depth_enabled = depth_enabled

    # --- motion ---

    def turn(self, delta_deg: float) -> None:
        self.agent = Pose2(self.agent.x, self.agent.y, self.agent.theta + float(delta_deg))
        self._notify()

    def forward(self, d: float) -> float:
        """Drive along the heading; returns the distance actually covered."""
        if d < 0:
            raise BadParams("forward distance must be >= 0")
        theta = math.radians(self.agent.theta)
        dirx, diry = math.cos(theta), math.sin(theta)
        stop_dist = OBJECT_RADIUS + STOP_MARGIN
        travel = float(d)
        for obj in self.objects:
            relx, rely = obj.x - self.agent.x, obj.y - self.agent.y
            along = relx * dirx + rely * diry
            lateral = abs(relx * diry - rely * dirx)
            if along <= 0.0 or lateral >= stop_dist:
                continue
            t_stop = along - math.sqrt(stop_dist * stop_dist - lateral * lateral)
            travel = min(travel, max(0.0, t_stop))
        self.agent = Pose2(self.agent.x + travel * dirx, self.agent.y + travel * diry, self.agent.theta)
        self._notify()
        return travel

    def get_pose(self) -> Pose2:
        return self.agent

    # --- perception ---

    def _polar(self, obj: WorldObject) -> tuple[float, float]:
        """(range, bearing) in the agent frame; bearing positive CCW."""
        dx, dy = obj.x - self.agent.x, obj.y - self.agent.y
        rng = math.hypot(dx, dy)
        bearing = norm_deg(math.degrees(math.atan2(dy, dx)) - self.agent.theta)
        return rng, bearing

    def visible_objects(self) -> list[tuple[WorldObject, float, float]]:
        half = self.camera.hfov_deg / 2.0
        seen = []
        for obj in self.objects:
            rng, bearing = self._polar(obj)
            if rng <= self.max_range + 1e-9 and abs(bearing) <= half + 1e-9:
                seen.append((obj, rng, bearing))
        seen.sort(key=lambda t: (t[1], t[0].label))
        return seen

    def describe_scene(self) -> SceneDescription:
        entries = tuple(
            SceneEntry(obj.label, round(rng * 10.0) / 10.0, float(round(bearing)))
            for obj, rng, bearing in self.visible_objects()
        )
        return SceneDescription(entries)

    def get_detections(self) -> list[Detection]:
        cam = self.camera
        dets: list[Detection] = []
        for obj, rng, bearing in self.visible_objects():
            alpha = math.degrees(math.asin(min(1.0, OBJECT_RADIUS / max(rng, 1e-9))))
            # camera bearings grow to the right: negate the CCW bearing
            lo = _clamp_deg(-bearing - alpha)
            hi = _clamp_deg(-bearing + alpha)
            u0 = cam.cx + cam.focal_px * math.tan(math.radians(lo))
            u1 = cam.cx + cam.focal_px * math.tan(math.radians(hi))
            v_half = cam.focal_px * OBJECT_RADIUS / max(rng, 1e-9)
            bbox = (
                max(0.0, min(u0, u1)),
                max(0.0, cam.cy - v_half),
                min(float(cam.width_px), max(u0, u1)),
                min(float(cam.height_px), cam.cy + v_half),
            )
            dets.append(Detection(obj.label, bbox, rng if self.depth_enabled else None))
        return dets

    def get_depth_for(self, detection: Detection) -> float:
        if detection.median_depth_m is not None:
            return detection.median_depth_m
        cam_bearing = estimate_angle(detection, self.camera)
        best = None
        for obj, rng, bearing in self.visible_objects():
            if obj.label != detection.label:
                continue
            diff = abs(-bearing - cam_bearing)
            if best is None or diff < best[0]:
                best = (diff, rng)
        if best is None:
            raise MissingDepth(f"no depth available for {detection.label!r}")
        return best[1]

    # --- session plumbing ---

    def api_effects(self) -> dict:
        return {
            "forward": self.forward,
            "turn": self.turn,
            "get_pose": lambda: [self.agent.x, self.agent.y, self.agent.theta],
            "describe_scene": lambda: [
                {"label": e.label, "range_m": e.range_m, "bearing_deg": e.bearing_deg}
                for e in self.describe_scene().entries
            ],
            "get_detections": lambda: [d.to_dict() for d in self.get_detections()],
            "get_depth_for": lambda rec: self.get_depth_for(_detection_from(rec)),
            "estimate_angle": lambda rec: estimate_angle(_detection_from(rec), self.camera),
            "depth_mask": lambda recs, near, far: [
                d.to_dict() for d in depth_mask([_detection_from(r) for r in recs], near, far)
            ],
        }

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "agent": [self.agent.x, self.agent.y, self.agent.theta],
            "objects": [o.to_dict() for o in self.objects],
        }

    def distance_to_label(self, label: str) -> float | None:
        ds = [
            math.hypot(o.x - self.agent.x, o.y - self.agent.y)
            for o in self.objects
            if o.label == label
        ]
        return min(ds) if ds else None


def _clamp_deg(b: float) -> float:
    return max(-89.0, min(89.0, b))


def _detection_from(rec) -> Detection:
    if isinstance(rec, Detection):
        return rec
    return Detection(rec["label"], tuple(rec["bbox"]), rec.get("median_depth_m"))


def estimate_angle(detection: Detection, camera: CameraModel) -> float:
    """Pinhole bearing of a detection in degrees, positive to the right."""
    return math.degrees(math.atan((detection.u_center - camera.cx) / camera.focal_px))


def depth_mask(detections: list[Detection], near_m: float, far_m: float) -> list[Detection]:
    """Keep detections whose median depth lies in [near, far], order preserved."""
    if near_m >= far_m:
        raise BadParams("near must be < far")
    for d in detections:
        if d.median_depth_m is None:
            raise MissingDepth(f"detection {d.label!r} has no depth")
    return [d for d in detections if near_m <= d.median_depth_m <= far_m]


# --- seeded world generation for dialog navigation experiments ---

LABEL_POOL = ("chair", "table", "plant", "lamp", "sofa", "crate")


def random_nav_world(seed: int) -> tuple[NavWorld, str]:
    """Agent at the origin, one target object 4-8 m away, sparse distractors.

    Distractors keep clear of the straight agent-target corridor so the
    reference dialog policy has an unobstructed approach.
    """
    rng = random.Random(seed)
    theta = rng.uniform(-180.0, 180.0)
    target_label = rng.choice(LABEL_POOL)
    t_range = rng.uniform(4.0, 8.0)
    t_angle = rng.uniform(-math.pi, math.pi)
    tx, ty = t_range * math.cos(t_angle), t_range * math.sin(t_angle)
    objects = [{"label": target_label, "x": tx, "y": ty}]
    n_extra = rng.randint(3, 6)
    tries = 0
    while len(objects) < n_extra + 1 and tries < 200:
        tries += 1
        x = rng.uniform(-9.0, 9.0)
        y = rng.uniform(-9.0, 9.0)
        if math.hypot(x, y) < 1.2:
            continue
        if any(math.hypot(x - o["x"], y - o["y"]) < 1.5 for o in objects):
            continue
        if _segment_distance((0.0, 0.0), (tx, ty), (x, y)) < 0.8:
            continue
        label = rng.choice([l for l in LABEL_POOL if l != target_label])
        objects.append({"label": label, "x": x, "y": y})
    world = NavWorld(seed=seed, agent=(0.0, 0.0, theta), objects=objects)
    return world, target_label


def _segment_distance(a: tuple[float, float], b: tuple[float, float], p: tuple[float, float]) -> float:
    ax, ay = a
    bx, by = b
    px, py = p
    dx, dy = bx - ax, by - ay
    denom = dx * dx + dy * dy
    t = 0.0 if denom == 0 else max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / denom))
    return math.hypot(px - (ax + t * dx), py - (ay + t * dy))
