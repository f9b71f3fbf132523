"""3D drone world: straight-line flight among axis-aligned box obstacles.

Motion is sampled at a fixed rate (2 m/s, dt = 0.1 s) so trajectories are
deterministic and auditable: every sample is recorded, and a sample inside an
un-inflated obstacle counts as a collision.  A forward-facing horizontal
distance sensor (20 m range) is the only perception the reference avoidance
algorithm gets.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from ..errors import BadParams, NotAirborne, OutOfBounds
from ..report import ExecReport
from .base import Box, Pose3, World, norm_deg, ray_box_distance

SPEED = 2.0
DT = 0.1
STEP_LEN = SPEED * DT
SENSOR_MAX = 20.0
DEFAULT_BOUNDS = ((-60.0, -60.0, 0.0), (60.0, 60.0, 30.0))


class DroneWorld(World):
    kind = "drone3d"

    def __init__(
        self,
        seed: int = 0,
        boxes: list[Box] | None = None,
        bounds: tuple[tuple[float, float, float], tuple[float, float, float]] = DEFAULT_BOUNDS,
        start: tuple[float, float] = (0.0, 0.0),
        takeoff_altitude: float = 1.0,
    ):
        super().__init__(seed)
        self.boxes = list(boxes or [])
        self.bounds = bounds
        self.takeoff_altitude = takeoff_altitude
        self.position = [float(start[0]), float(start[1]), 0.0]
        self.yaw = 0.0
        self.airborne = False
        self.trajectory: list[tuple[float, float, float]] = [tuple(self.position)]
        self.collisions = 0
        self.journal: list[tuple] = []
        self.last_segment: list[tuple[float, float, float]] = []

    # --- motion ---

    def _in_bounds(self, p: tuple[float, float, float]) -> bool:
        (lx, ly, lz), (hx, hy, hz) = self.bounds
        return lx <= p[0] <= hx and ly <= p[1] <= hy and lz <= p[2] <= hz

    def _record(self, sample: tuple[float, float, float]) -> None:
        self.trajectory.append(sample)
        if any(b.contains(sample) for b in self.boxes):
            self.collisions += 1
        self.position = list(sample)
        self._notify()

    def _move_line(self, target: tuple[float, float, float]) -> None:
        if not self._in_bounds(target):
            raise OutOfBounds(f"target {target} leaves the arena {self.bounds}")
        start = tuple(self.position)
        dist = math.dist(start, target)
        samples = [start]
        if dist > 0.0:
            n = max(1, math.ceil(dist / STEP_LEN - 1e-9))
            for i in range(1, n):
                f = i / n
                samples.append(tuple(s + (t - s) * f for s, t in zip(start, target)))
            samples.append(tuple(map(float, target)))
        self.last_segment = samples
        for sample in samples[1:]:
            self._record(sample)

    def takeoff(self) -> None:
        if self.airborne:
            return
        self.airborne = True
        self.journal.append(("takeoff",))
        self._move_line((self.position[0], self.position[1], self.takeoff_altitude))

    def land(self) -> None:
        if not self.airborne:
            return
        self.journal.append(("land",))
        self._move_line((self.position[0], self.position[1], 0.0))
        self.airborne = False

    def fly_to(self, x: float, y: float, z: float) -> None:
        if not self.airborne:
            raise NotAirborne("takeoff before flying")
        if z < 0.0:
            raise OutOfBounds("cannot fly below the ground")
        self.journal.append(("fly_to", (float(x), float(y), float(z))))
        self._move_line((float(x), float(y), float(z)))

    def fly_path(self, waypoints) -> None:
        for wp in waypoints:
            if isinstance(wp, Pose3):
                self.fly_to(wp.x, wp.y, wp.z)
            else:
                self.fly_to(wp[0], wp[1], wp[2])

    def get_position(self) -> Pose3:
        return Pose3(self.position[0], self.position[1], self.position[2], self.yaw)

    def set_yaw(self, deg: float) -> None:
        self.yaw = norm_deg(float(deg))
        self.journal.append(("set_yaw", self.yaw))
        self._notify()

    def get_yaw(self) -> float:
        return self.yaw

    def turn(self, delta_deg: float) -> None:
        self.set_yaw(self.yaw + float(delta_deg))

    def get_distance_reading(self) -> float:
        """Forward horizontal ray along yaw to the nearest box surface, max 20 m."""
        yaw = math.radians(self.yaw)
        origin = tuple(self.position)
        direction = (math.cos(yaw), math.sin(yaw), 0.0)
        best = SENSOR_MAX
        for box in self.boxes:
            d = ray_box_distance(origin, direction, box)
            if d is not None and d < best:
                best = d
        return best

    def path_length(self, from_index: int = 0) -> float:
        pts = self.trajectory[from_index:]
        return sum(math.dist(a, b) for a, b in zip(pts, pts[1:]))

    # --- session plumbing ---

    def api_effects(self) -> dict:
        return {
            "takeoff": self.takeoff,
            "land": self.land,
            "fly_to": self.fly_to,
            "fly_path": self.fly_path,
            "get_position": lambda: list(self.position),
            "set_yaw": self.set_yaw,
            "get_yaw": self.get_yaw,
            "turn": self.turn,
            "get_distance_reading": self.get_distance_reading,
        }

    def snapshot(self) -> dict:
        return {
            "kind": self.kind,
            "position": list(self.position),
            "yaw": self.yaw,
            "airborne": self.airborne,
            "collisions": self.collisions,
            "samples": len(self.trajectory),
            "obstacles": [b.to_dict() for b in self.boxes],
        }

    def collision_count(self) -> int:
        return self.collisions


# --- coverage generators ---

def gen_lawnmower(
    origin: tuple[float, float],
    length_m: float,
    width_m: float,
    spacing_m: float,
    altitude_m: float,
) -> list[Pose3]:
    """Boustrophedon passes parallel to the length axis.

    Pass count is floor(width/spacing) + 1.  When the spacing tiles the width
    exactly the passes sit at multiples of the spacing; otherwise they are
    inset by half the effective gap so every point of the rectangle stays
    within spacing/2 of some pass.
    """
    if spacing_m <= 0 or length_m <= 0 or width_m <= 0:
        raise BadParams("length, width and spacing must be positive")
    ox, oy = origin
    n = int(math.floor(width_m / spacing_m + 1e-9)) + 1
    if n >= 2 and abs(width_m - (n - 1) * spacing_m) < 1e-9:
        ys = [k * spacing_m for k in range(n)]
    else:
        gap = width_m / n
        ys = [(k + 0.5) * gap for k in range(n)]
    waypoints: list[Pose3] = []
    for idx, y in enumerate(ys):
        x0, x1 = (0.0, length_m) if idx % 2 == 0 else (length_m, 0.0)
        yaw = 0.0 if idx % 2 == 0 else 180.0
        waypoints.append(Pose3(ox + x0, oy + y, altitude_m, yaw))
        waypoints.append(Pose3(ox + x1, oy + y, altitude_m, yaw))
    return waypoints


def gen_circle(
    center_xy: tuple[float, float],
    radius_m: float,
    n_points: int,
    altitude_m: float,
    face_center: bool = True,
) -> list[Pose3]:
    """Waypoints on a circle at angles 2*pi*k/n from the +x axis."""
    if n_points < 3:
        raise BadParams("a circle needs at least 3 waypoints")
    if radius_m <= 0:
        raise BadParams("radius must be positive")
    cx, cy = center_xy
    out: list[Pose3] = []
    for k in range(n_points):
        ang = 2.0 * math.pi * k / n_points
        x = cx + radius_m * math.cos(ang)
        y = cy + radius_m * math.sin(ang)
        yaw = math.degrees(math.atan2(cy - y, cx - x)) if face_center else 0.0
        out.append(Pose3(x, y, altitude_m, yaw))
    return out


# --- reference goal-reaching with obstacle avoidance ---

def _probe(world: DroneWorld, heading_deg: float) -> float:
    world.set_yaw(heading_deg)
    return world.get_distance_reading()


def _guarded_advance(
    world: DroneWorld,
    heading_deg: float,
    desired: float,
    clearance: float,
    fan_step_deg: float,
) -> float:
    """Largest advance along the heading keeping hit points at >= clearance.

    Probes a fan of rays over +/-90 degrees; each hit point at polar (R, b)
    relative to the heading caps the advance so the flown segment never
    enters the clearance disc around the point.
    """
    safe = desired
    steps = int(90.0 // fan_step_deg)
    for k in range(-steps, steps + 1):
        bearing = k * fan_step_deg
        reading = _probe(world, heading_deg + bearing)
        if reading >= SENSOR_MAX:
            continue
        b = math.radians(bearing)
        along = reading * math.cos(b)
        lateral = reading * abs(math.sin(b))
        if along <= 0.0 or lateral >= clearance:
            continue
        cap = along - math.sqrt(clearance * clearance - lateral * lateral)
        safe = min(safe, max(0.0, cap))
    world.set_yaw(heading_deg)
    return safe


def run_reference_avoid(
    world: DroneWorld,
    goal: Pose3 | tuple[float, float, float],
    threshold_m: float = 5.0,
    rotate_step_deg: float = 10.0,
    margin_m: float = 1.0,
) -> ExecReport:
    """Reach the goal using only the forward distance sensor.

    Each iteration re-aims the yaw at the goal before sensing (skipping that
    re-aim is the classic bug this loop exists to avoid), rotates away in an
    alternating-widening sweep while the front ray is blocked, and advances
    only as far as a fan probe proves clear of the safety margin.
    """
    if isinstance(goal, Pose3):
        gx, gy, gz = goal.x, goal.y, goal.z
    else:
        gx, gy, gz = goal
    if not world.airborne:
        raise NotAirborne("takeoff before running goal reaching")
    start = world.get_position()
    straight = math.hypot(gx - start.x, gy - start.y)
    budget = 10 * max(1, math.ceil(straight / 2.0))
    start_index = len(world.trajectory) - 1
    clearance = margin_m + 1.0  # buffer absorbs fan discretization
    prefer = 1.0
    reached = False
    for _ in range(budget):
        pos = world.get_position()
        d_goal = math.hypot(gx - pos.x, gy - pos.y)
        if d_goal <= 0.5:
            reached = True
            break
        goal_heading = math.degrees(math.atan2(gy - pos.y, gx - pos.x))
        world.set_yaw(goal_heading)
        advanced = False
        # candidate headings: straight at the goal, then alternating sweeps
        candidates: list[tuple[float, float, float]] = [(goal_heading, min(2.0, d_goal), 0.0)]
        max_k = int(180.0 // rotate_step_deg)
        for k in range(1, max_k + 1):
            for sign in (prefer, -prefer):
                candidates.append((goal_heading + sign * k * rotate_step_deg, 1.0, sign))
        for heading, desired, sign in candidates:
            if _probe(world, heading) < threshold_m:
                continue
            safe = _guarded_advance(world, heading, desired, clearance, rotate_step_deg)
            if safe < 0.25:
                continue
            if sign:
                prefer = sign
            rad = math.radians(heading)
            world.fly_to(
                pos.x + safe * math.cos(rad),
                pos.y + safe * math.sin(rad),
                gz,
            )
            advanced = True
            break
        if not advanced:
            break  # boxed in: give up rather than creep into the margin
    pos = world.get_position()
    final_d = math.hypot(gx - pos.x, gy - pos.y)
    reached = reached or final_d <= 0.5
    collisions = world.collisions
    return ExecReport(
        success=reached and collisions == 0,
        goal_metric=final_d,
        collisions=collisions,
        duration_steps=len(world.trajectory) - 1 - start_index,
        note="" if reached else "goal not reached",
    )


# --- seeded world generation for avoidance experiments ---

@dataclass(frozen=True)
class AvoidanceSetup:
    world: DroneWorld
    goal: Pose3


def random_avoidance_world(seed: int, max_boxes: int = 5, altitude: float = 5.0) -> AvoidanceSetup:
    """Sparse random box field between a start and a goal ~40 m apart.

    Boxes keep >= 6 m gaps from each other and from the endpoints so a
    margin-respecting corridor always exists.
    """
    rng = random.Random(seed)
    start = (-20.0, rng.uniform(-8.0, 8.0))
    goal = (20.0, rng.uniform(-8.0, 8.0))
    n = rng.randint(1, max_boxes)
    boxes: list[Box] = []
    tries = 0
    while len(boxes) < n and tries < 200:
        tries += 1
        cx = rng.uniform(-10.0, 10.0)
        cy = rng.uniform(-12.0, 12.0)
        hx = rng.uniform(1.0, 3.0)
        hy = rng.uniform(1.0, 3.0)
        top = rng.uniform(8.0, 12.0)
        box = Box((cx - hx, cy - hy, 0.0), (cx + hx, cy + hy, top))
        def clear_of(p):
            return not box.contains((p[0], p[1], altitude), inflate=6.0)
        if not (clear_of(start) and clear_of(goal)):
            continue
        if any(_box_gap(box, other) < 6.0 for other in boxes):
            continue
        boxes.append(box)
    world = DroneWorld(seed=seed, boxes=boxes, start=start)
    world.takeoff()
    world.fly_to(start[0], start[1], altitude)
    # reset accounting so experiments start from the hover point
    world.trajectory = [tuple(world.position)]
    world.collisions = 0
    world.journal.clear()
    return AvoidanceSetup(world, Pose3(goal[0], goal[1], altitude))


def _box_gap(a: Box, b: Box) -> float:
    gap = 0.0
    for axis in range(2):  # horizontal separation is what matters for corridors
        lo = max(a.min_corner[axis], b.min_corner[axis])
        hi = min(a.max_corner[axis], b.max_corner[axis])
        if lo > hi:
            gap = max(gap, lo - hi)
    return gap
