"""Planar catch world: a ground robot with an upward-facing camera.

A ball is launched on a ballistic arc above the robot; the robot sees it only
as a pixel through the pinhole camera and slides horizontally to be under it
when it lands.  Ball kinematics are evaluated in closed form each step, so
the trajectory matches the analytic arc to float precision and runs are
bit-deterministic for a given spawn seed.
"""

from __future__ import annotations

import math
import random

from ..errors import NotSpawned
from ..report import ExecReport
from .base import CameraModel, World

GRAVITY = 9.81
DT = 0.02
MAX_SPEED = 5.0
CATCH_RADIUS = 0.25
TOUCHDOWN_Z = 0.2


class CatchWorld(World):
    kind = "catch2d"

    def __init__(self, seed: int = 0, camera: CameraModel | None = None, max_sim_steps: int = 2000):
        super().__init__(seed)
        self.camera = camera or CameraModel()
        self.max_sim_steps = max_sim_steps
        self.robot = [0.0, 0.0]
        self.velocity = [0.0, 0.0]
        self.spawned = False
        self.done = False
        self.caught = False
        self.miss_distance = 0.0
        self.t = 0.0
        self.steps = 0
        self._ball0 = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)  # x, y, z, vx, vy, vz at launch

    # --- world API ---

    def spawn_ball(self, seed: float | int | None = None) -> None:
        """Launch a ball; the horizontal offset keeps it initially in view."""
        rng = random.Random(self.seed if seed is None else int(seed))
        z0 = rng.uniform(8.0, 12.0)
        half = math.radians(self.camera.hfov_deg) / 2.0
        max_offset = min(3.0, 0.8 * z0 * math.tan(half))
        r = max_offset * math.sqrt(rng.random())
        phi = rng.uniform(0.0, 2.0 * math.pi)
        x0 = self.robot[0] + r * math.cos(phi)
        y0 = self.robot[1] + r * math.sin(phi)
        vx = rng.uniform(-1.0, 1.0)
        vy = rng.uniform(-1.0, 1.0)
        vz = rng.uniform(-1.0, 0.5)
        self._ball0 = (x0, y0, z0, vx, vy, vz)
        self.spawned = True
        self.done = False
        self.caught = False
        self.miss_distance = 0.0
        self.t = 0.0
        self.steps = 0
        self._notify()

    def ball_position(self) -> tuple[float, float, float]:
        if not self.spawned:
            raise NotSpawned("spawn_ball before reading the ball state")
        x0, y0, z0, vx, vy, vz = self._ball0
        t = self.t
        return (
            x0 + vx * t,
            y0 + vy * t,
            z0 + vz * t - 0.5 * GRAVITY * t * t,
        )

    def step(self) -> None:
        if not self.spawned:
            raise NotSpawned("spawn_ball before stepping")
        if self.done:
            return
        self.t += DT
        self.steps += 1
        self.robot[0] += self.velocity[0] * DT
        self.robot[1] += self.velocity[1] * DT
        bx, by, bz = self.ball_position()
        if bz <= TOUCHDOWN_Z or self.steps >= self.max_sim_steps:
            self.done = True
            self.miss_distance = math.hypot(bx - self.robot[0], by - self.robot[1])
            self.caught = bz <= TOUCHDOWN_Z and self.miss_distance <= CATCH_RADIUS
        self._notify()

    def detect_ball(self) -> tuple[float, float] | None:
        """Pixel of the ball center through the upward camera, if visible."""
        if not self.spawned:
            raise NotSpawned("spawn_ball before detecting")
        bx, by, bz = self.ball_position()
        if bz <= 0.0:
            return None
        cam = self.camera
        u = cam.cx + cam.focal_px * (bx - self.robot[0]) / bz
        v = cam.cy + cam.focal_px * (by - self.robot[1]) / bz
        if not (0.0 <= u <= cam.width_px and 0.0 <= v <= cam.height_px):
            return None
        return (u, v)

    def set_velocity(self, vx: float, vy: float) -> None:
        speed = math.hypot(vx, vy)
        if speed > MAX_SPEED:
            scale = MAX_SPEED / speed
            vx, vy = vx * scale, vy * scale
        self.velocity = [vx, vy]

    def get_robot_position(self) -> tuple[float, float]:
        return (self.robot[0], self.robot[1])

    # --- session plumbing ---

    def api_effects(self) -> dict:
        return {
            "spawn_ball": lambda seed: self.spawn_ball(seed),
            "step": self.step,
            "detect_ball": lambda: list(self.detect_ball() or ()),
            "set_velocity": self.set_velocity,
            "get_robot_position": lambda: list(self.get_robot_position()),
        }

    def snapshot(self) -> dict:
        ball = list(self.ball_position()) if self.spawned else None
        return {
            "kind": self.kind,
            "robot": list(self.robot),
            "velocity": list(self.velocity),
            "ball": ball,
            "t": self.t,
            "done": self.done,
            "caught": self.caught,
        }


def servo_command(
    kp: float,
    pixel: tuple[float, float],
    z_est: float,
    camera: CameraModel,
) -> tuple[float, float]:
    """Proportional command from pixel error, before speed clamping.

    The normalized pixel offset equals the tangent of the view angle, so
    scaling by the height estimate recovers the metric horizontal offset.
    """
    ex = (pixel[0] - camera.cx) / camera.focal_px
    ey = (pixel[1] - camera.cy) / camera.focal_px
    return (kp * ex * z_est, kp * ey * z_est)


def run_reference_servo(world: CatchWorld, kp: float) -> ExecReport:
    """Drive the robot with the proportional controller until touchdown.

    When the detection drops out the previous command is held.
    """
    if not world.spawned:
        world.spawn_ball(world.seed)
    last_cmd = (0.0, 0.0)
    while not world.done:
        pixel = world.detect_ball()
        if pixel is not None:
            z = world.ball_position()[2]
            last_cmd = servo_command(kp, pixel, z, world.camera)
        world.set_velocity(*last_cmd)
        world.step()
    return ExecReport(
        success=world.caught,
        goal_metric=world.miss_distance,
        duration_steps=world.steps,
    )
