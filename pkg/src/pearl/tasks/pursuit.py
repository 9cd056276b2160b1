"""Multi-agent pursuit: planar double-integrator pursuers chase a scripted prey.

The prey is not part of the planner state.  Preferences read its current
position and velocity from the per-step references, so the planner never
sees future prey states.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..dynamics import DoubleIntegrator
from ..features import ATTRACTOR, REPELLER, Preference, StateLayout
from .base import Task

PAPER_THETA = np.array([-16.43, -102.89, -0.77])
PREY_KINDS = ("static", "line", "spiral", "lemniscate", "brownian")


@dataclass(frozen=True)
class PreyParams:
    line_velocity: tuple[float, float] = (0.5, 0.0)
    spiral_rate: float = 0.05  # radial growth, m/s
    spiral_omega: float = 0.5  # rad/s
    lemniscate_scale: float = 4.0  # m
    lemniscate_omega: float = 0.25  # rad/s
    brownian_std: float = 1.0  # m/s^2
    brownian_max_speed: float = 1.0  # m/s


def prey_reference(kind: str, t: float, params: PreyParams | None = None,
                   seed: int = 0, dt: float = 0.02) -> tuple[np.ndarray, np.ndarray]:
    """Prey position and velocity at time ``t``.

    Analytic kinds return the exact derivative.  ``brownian`` integrates a
    seeded normal acceleration from rest at the origin with step ``dt``.
    """
    if t < 0:
        raise ValueError("t must be non-negative")
    prm = params or PreyParams()
    if kind == "static":
        return np.zeros(2), np.zeros(2)
    if kind == "line":
        v = np.asarray(prm.line_velocity, dtype=float)
        return v * t, v.copy()
    if kind == "spiral":
        k, w = prm.spiral_rate, prm.spiral_omega
        c, s = np.cos(w * t), np.sin(w * t)
        pos = k * t * np.array([c, s])
        vel = k * np.array([c, s]) + k * t * w * np.array([-s, c])
        return pos, vel
    if kind == "lemniscate":
        # lemniscate of Gerono, x = A sin(phi), y = A sin(phi) cos(phi)
        a, w = prm.lemniscate_scale, prm.lemniscate_omega
        ph = w * t
        pos = a * np.array([np.sin(ph), np.sin(ph) * np.cos(ph)])
        vel = a * w * np.array([np.cos(ph), np.cos(2 * ph)])
        return pos, vel
    if kind == "brownian":
        world = PreyWorld("brownian", dt=dt, params=prm)
        rng = np.random.default_rng(seed)
        for _ in range(int(round(t / dt))):
            world = world.advance(rng)
        return world.position, world.velocity
    raise ValueError(f"unknown prey kind {kind!r}; expected one of {PREY_KINDS}")


@dataclass(frozen=True)
class PreyWorld:
    kind: str
    t: float = 0.0
    dt: float = 0.02
    params: PreyParams = field(default_factory=PreyParams)
    position: np.ndarray = field(default_factory=lambda: np.zeros(2))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        if self.kind not in PREY_KINDS:
            raise ValueError(f"unknown prey kind {self.kind!r}")
        if self.kind != "brownian" and self.t == 0.0:
            p, v = prey_reference(self.kind, 0.0, self.params)
            object.__setattr__(self, "position", p)
            object.__setattr__(self, "velocity", v)

    @property
    def refs(self) -> dict:
        return {"prey_position": self.position, "prey_velocity": self.velocity}

    def advance(self, rng: np.random.Generator) -> "PreyWorld":
        t = self.t + self.dt
        if self.kind == "brownian":
            acc = self.params.brownian_std * rng.standard_normal(2)
            v = self.velocity + acc * self.dt
            speed = np.linalg.norm(v)
            if speed > self.params.brownian_max_speed:
                v = v * (self.params.brownian_max_speed / speed)
            p = self.position + 0.5 * (self.velocity + v) * self.dt
            return replace(self, t=t, position=p, velocity=v)
        p, v = prey_reference(self.kind, t, self.params)
        return replace(self, t=t, position=p, velocity=v)


def pursuit_preferences(layout: StateLayout, agents: list[str], spacing: bool = True,
                        variant: str = "shared") -> list[Preference]:
    prefs = [
        Preference(ATTRACTOR, layout.select(agents, "position"), target="reference",
                   reference="prey_position", name="prey_distance"),
        Preference(ATTRACTOR, layout.select(agents, "velocity"), target="reference",
                   reference="prey_velocity", name="prey_velocity"),
    ]
    if spacing:
        prefs.append(Preference(REPELLER, layout.select(agents, "position"), target="pairwise",
                                beta=1.0, variant=variant, name="agent_spacing"))
    return prefs


class PursuitTask(Task):
    """``n_agents`` planar pursuers with accel limit ``accel`` (m/s^2).

    ``plan_dt`` is the hold time the value lookahead uses; the plant still
    steps at ``dt``.
    """

    name = "pursuit"

    def __init__(self, n_agents: int = 25, prey: str = "spiral", dt: float = 0.02,
                 plan_dt: float = 2.0, accel: float = 3.0, theta=None, spacing: bool = True,
                 start_radius: float = 5.0, horizon: float = 20.0, goal_tolerance: float = 0.05,
                 stop_at_goal: bool = False, prey_params: PreyParams | dict | None = None,
                 variant: str = "shared", extrapolate: bool = True):
        if n_agents < 1:
            raise ValueError("need at least one pursuer")
        if prey not in PREY_KINDS:
            raise ValueError(f"unknown prey kind {prey!r}")
        self.n_agents = int(n_agents)
        self.prey = prey
        if isinstance(prey_params, dict):
            prey_params = PreyParams(**prey_params)
        self.prey_params = prey_params or PreyParams()
        self.agents = [f"agent{i}" for i in range(self.n_agents)]
        self.layout = StateLayout(tuple((a, 2) for a in self.agents))
        self.plant = DoubleIntegrator(2 * self.n_agents, dt)
        self.model = self.plant.with_dt(plan_dt)
        self.plan_dt = float(plan_dt)
        self.extrapolate = bool(extrapolate)
        self.prefs = pursuit_preferences(self.layout, self.agents, spacing, variant)
        default = PAPER_THETA if spacing else PAPER_THETA[:2]
        self.theta = np.asarray(default if theta is None else theta, dtype=float)
        self.accel = np.full(2 * self.n_agents, float(accel))
        self.start_radius = float(start_radius)
        self.horizon = float(horizon)
        self.goal_tolerance = float(goal_tolerance)
        self.stop_at_goal = bool(stop_at_goal)

    def reset(self, rng=None) -> PreyWorld:
        return PreyWorld(self.prey, dt=self.plant.dt, params=self.prey_params)

    def lookahead_refs(self, refs):
        """Prey extrapolated at constant velocity over the lookahead hold time."""
        if not self.extrapolate:
            return refs
        out = dict(refs)
        out["prey_position"] = refs["prey_position"] + self.plan_dt * refs["prey_velocity"]
        return out

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        r = self.start_radius * np.sqrt(rng.random(self.n_agents))
        ang = rng.uniform(0, 2 * np.pi, self.n_agents)
        pos = np.column_stack([r * np.cos(ang), r * np.sin(ang)]).ravel()
        return np.concatenate([pos, np.zeros(2 * self.n_agents)])

    def positions(self, S) -> np.ndarray:
        S = np.asarray(S, float)
        return S[..., : 2 * self.n_agents].reshape(S.shape[:-1] + (self.n_agents, 2))

    def prey_distances(self, s, refs) -> np.ndarray:
        return np.linalg.norm(self.positions(s) - refs["prey_position"], axis=-1)

    def goal_distance(self, s, refs) -> float:
        """Mean pursuer-to-prey distance."""
        return float(self.prey_distances(s, refs).mean())


def nearest_neighbour_distance(positions: np.ndarray) -> float:
    """Mean distance from each agent to its nearest team mate."""
    p = np.asarray(positions, float)
    if len(p) < 2:
        return float("nan")
    d = np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).mean())
