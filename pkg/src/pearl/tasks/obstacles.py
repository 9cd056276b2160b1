"""Planar navigation through stochastically moving circular obstacles.

Obstacles switch between three motion modes (straight line, counter-clockwise
arc, swerving heading) and redraw their mode at random with rate
``1 / resample_period``.  The arena is a disc; an obstacle leaving it
re-enters at the antipodal point with its heading and mode unchanged.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..dynamics import DoubleIntegrator
from ..features import ATTRACTOR, REPELLER, Preference, StateLayout
from .base import Task

PAPER_THETA = np.array([-0.23, -0.1696])

LINEAR, ARC, SWERVE = 0, 1, 2
MODE_NAMES = ("linear", "arc", "swerve")
SPEEDS = np.array([0.1, 0.2, 0.5, 0.7])
ARC_RATES = np.array([0.039, 0.058, 0.088, 0.117])
MODE_PROBS = np.array([0.4, 0.1, 0.2, 0.3])
ARC_RADIUS = 5.0
SWERVE_RATE = np.pi / 3


@dataclass(frozen=True)
class ObstacleWorld:
    """Value-semantic obstacle field; :meth:`advance` returns a new world.

    ``swerve_angle`` is the current heading offset from ``base_heading`` for
    swerving obstacles, ``swerve_dir`` its direction of change.
    """

    position: np.ndarray
    heading: np.ndarray
    mode: np.ndarray
    speed: np.ndarray
    omega: np.ndarray
    base_heading: np.ndarray
    swerve_angle: np.ndarray
    swerve_limit: np.ndarray
    swerve_dir: np.ndarray
    t: float = 0.0
    dt: float = 0.1
    arena_radius: float = 50.0
    obstacle_radius: float = 0.5
    resample_period: float = 2.0

    @property
    def n(self) -> int:
        return len(self.position)

    @property
    def refs(self) -> dict:
        return {"obstacles": self.position}

    @property
    def velocity(self) -> np.ndarray:
        return self.speed[:, None] * np.column_stack([np.cos(self.heading), np.sin(self.heading)])

    def advance(self, rng: np.random.Generator) -> "ObstacleWorld":
        return obstacle_step(self, rng)


def _draw_modes(rng: np.random.Generator, n: int, heading: np.ndarray) -> dict:
    mode = rng.integers(0, 3, n)
    speed = rng.choice(SPEEDS, size=n, p=MODE_PROBS)
    omega = rng.choice(ARC_RATES, size=n, p=MODE_PROBS)
    limit = np.abs(rng.uniform(-np.pi / 2, np.pi / 2, n))
    arc = mode == ARC
    speed = np.where(arc, ARC_RADIUS * omega, speed)
    return dict(
        mode=mode,
        speed=speed,
        omega=np.where(arc, omega, 0.0),
        base_heading=heading.copy(),
        swerve_angle=np.zeros(n),
        swerve_limit=limit,
        swerve_dir=rng.choice([-1.0, 1.0], size=n),
    )


def make_obstacle_world(n: int, rng: np.random.Generator, arena_radius: float = 50.0,
                        keep_clear: tuple = (), clearance: float = 1.0, dt: float = 0.1,
                        obstacle_radius: float = 0.5, resample_period: float = 2.0) -> ObstacleWorld:
    """``n`` obstacles placed uniformly in the arena with random modes.

    Placements within ``clearance`` of any point in ``keep_clear`` are
    redrawn, so the robot does not start inside an obstacle.
    """
    pos = np.empty((0, 2))
    clear = np.asarray(keep_clear, float).reshape(-1, 2)
    while len(pos) < n:
        m = n - len(pos)
        r = arena_radius * np.sqrt(rng.random(m))
        a = rng.uniform(0, 2 * np.pi, m)
        cand = np.column_stack([r * np.cos(a), r * np.sin(a)])
        if len(clear):
            dist = np.linalg.norm(cand[:, None] - clear[None], axis=-1).min(axis=1)
            cand = cand[dist > clearance]
        pos = np.vstack([pos, cand])
    heading = rng.uniform(-np.pi, np.pi, n)
    return ObstacleWorld(position=pos[:n], heading=heading, dt=dt, arena_radius=arena_radius,
                         obstacle_radius=obstacle_radius, resample_period=resample_period,
                         **_draw_modes(rng, n, heading))


def obstacle_step(world: ObstacleWorld, rng: np.random.Generator) -> ObstacleWorld:
    """Advance every obstacle by one ``dt``, resample modes, wrap at the boundary."""
    dt = world.dt
    heading = world.heading.copy()
    swerve = world.mode == SWERVE
    arc = world.mode == ARC
    ang = world.swerve_angle.copy()
    sdir = world.swerve_dir.copy()
    # swerving heading sweeps back and forth between -limit and +limit
    ang[swerve] += sdir[swerve] * SWERVE_RATE * dt
    over = swerve & (np.abs(ang) > world.swerve_limit)
    ang[over] = np.clip(ang[over], -world.swerve_limit[over], world.swerve_limit[over])
    sdir[over] = -sdir[over]
    heading[swerve] = world.base_heading[swerve] + ang[swerve]
    # arc heading turns at omega; position update uses the exact chord
    d_head = np.where(arc, world.omega * dt, 0.0)
    mid = heading + 0.5 * d_head
    chord = np.where(arc & (d_head != 0), 2 * ARC_RADIUS * np.sin(0.5 * d_head), world.speed * dt)
    pos = world.position + chord[:, None] * np.column_stack([np.cos(mid), np.sin(mid)])
    heading = heading + d_head

    r = np.linalg.norm(pos, axis=1)
    out = r > world.arena_radius
    if np.any(out):
        pos[out] = -pos[out] * (world.arena_radius / r[out])[:, None]

    new = replace(world, position=pos, heading=heading, swerve_angle=ang, swerve_dir=sdir,
                  t=world.t + dt)
    hit = rng.random(world.n) < dt / world.resample_period
    if np.any(hit):
        fresh = _draw_modes(rng, int(hit.sum()), heading[hit])
        upd = {}
        for k, v in fresh.items():
            arr = getattr(new, k).copy()
            arr[hit] = v
            upd[k] = arr
        new = replace(new, **upd)
    return new


class ObstacleTask(Task):
    """Single planar robot with a per-axis speed limit among moving obstacles."""

    name = "obstacles"

    def __init__(self, n_obstacles: int = 300, dt: float = 0.1, accel: float = 3.0,
                 max_speed: float = 0.37, start=(25.0, 0.0), goal=(-25.0, 0.0), theta=None,
                 beta: float = 0.01, arena_radius: float = 50.0, obstacle_radius: float = 0.5,
                 resample_period: float = 2.0, goal_tolerance: float = 0.5, horizon: float = 300.0,
                 static_obstacles=None, clearance: float = 1.0):
        self.layout = StateLayout((("robot", 2),))
        self.plant = DoubleIntegrator(2, dt)
        self.model = self.plant
        self.goal = np.asarray(goal, dtype=float)
        self.start = np.asarray(start, dtype=float)
        self.prefs = [
            Preference(ATTRACTOR, self.layout.select(["robot"]), target="point", point=self.goal,
                       name="goal"),
            Preference(REPELLER, self.layout.select(["robot"]), target="nearest",
                       reference="obstacles", beta=beta, name="nearest_obstacle"),
        ]
        self.theta = np.asarray(PAPER_THETA if theta is None else theta, dtype=float)
        self.accel = np.full(2, float(accel))
        self.max_speed = float(max_speed)
        self.n_obstacles = int(n_obstacles)
        self.arena_radius = float(arena_radius)
        self.obstacle_radius = float(obstacle_radius)
        self.resample_period = float(resample_period)
        self.goal_tolerance = float(goal_tolerance)
        self.horizon = float(horizon)
        self.stop_at_goal = True
        self.clearance = float(clearance)
        self.static_obstacles = None if static_obstacles is None else np.asarray(static_obstacles, float)

    def reset(self, rng: np.random.Generator):
        if self.static_obstacles is not None:
            from .base import StaticWorld

            return StaticWorld({"obstacles": self.static_obstacles})
        return make_obstacle_world(self.n_obstacles, rng, self.arena_radius,
                                   keep_clear=(self.start, self.goal), clearance=self.clearance,
                                   dt=self.plant.dt, obstacle_radius=self.obstacle_radius,
                                   resample_period=self.resample_period)

    def action_bounds(self, s, cfg=None):
        """Acceleration box intersected with the per-axis speed limit after one step."""
        v = np.asarray(s, float)[2:4]
        dt = self.plant.dt
        lo = np.maximum(-self.accel, (-self.max_speed - v) / dt)
        hi = np.minimum(self.accel, (self.max_speed - v) / dt)
        # an over-speed state brakes as hard as allowed
        lo = np.minimum(lo, hi)
        return lo, hi

    def in_goal(self, s, refs) -> bool:
        return bool(np.linalg.norm(np.asarray(s)[:2] - self.goal) < self.goal_tolerance)

    def failed(self, s, refs) -> bool:
        obs = np.asarray(refs.get("obstacles", np.empty((0, 2))))
        if len(obs) == 0:
            return False
        return bool(np.min(np.linalg.norm(obs - np.asarray(s)[:2], axis=1)) < self.obstacle_radius)

    def goal_distance(self, s, refs) -> float:
        return float(np.linalg.norm(np.asarray(s)[:2] - self.goal))

    def initial_state(self, rng=None) -> np.ndarray:
        return np.concatenate([self.start, np.zeros(2)])


def training_obstacle_task(distance: float = 3.0, **kw) -> ObstacleTask:
    """Four static obstacles around a goal at the origin."""
    obs = distance * np.array([[1.0, 0.0], [0.0, 1.0], [0.0, -1.0], [-1.0, 0.0]])
    kw.setdefault("goal", (0.0, 0.0))
    kw.setdefault("start", (5.0, 0.5))
    return ObstacleTask(static_obstacles=obs, **kw)
