"""Quadrotor tasks with a suspended load or an inverted pendulum.

All three models are small-angle linearisations integrated with an exact
zero-order hold, so each is a :class:`LinearDynamics` and therefore exactly
affine in the acceleration input.

* suspended load:   load_angle'' = -(g/L) load_angle - a_xy / L
* inverted pendulum: x_p'' = +(g/L) x_p - a_xy     (unstable)
"""
from __future__ import annotations

import numpy as np

from ..dynamics import LinearDynamics
from ..features import ATTRACTOR, Preference, StateLayout
from .base import Task, uniform_in_ball

GRAVITY = 9.81

CARGO_THETA = np.array([-86290.0, -350350.0, -1430.0, -1160.0])
RENDEZVOUS_THETA = np.array([-92256.0, -44767.0, -866.0, -336.0, -107.0])
PENDULUM_THETA_POLE = np.array([-86.6809, -0.3345])
PENDULUM_THETA_SLOWDOWN = 1e6 * np.array([-1.6692, -0.0069, 0.0007])


def _linear_model(layout: StateLayout, actuated: list[tuple[str, str]], coupled: list[tuple],
                  dt: float) -> LinearDynamics:
    """Assemble ``x' = A x + B u`` for bodies that are double integrators.

    ``actuated`` lists (body, axes) driven directly by consecutive action
    entries.  ``coupled`` lists (body, stiffness, (driver action indices),
    gain): the body's acceleration is ``stiffness * pos + gain * a[idx]``.
    """
    n = layout.n_state
    npos = layout.n_pos
    A = np.zeros((n, n))
    A[:npos, npos:] = np.eye(npos)
    n_act = sum(len(ax) for _, ax in actuated)
    B = np.zeros((n, n_act))
    k = 0
    for body, axes in actuated:
        for i in layout.coords(body, "velocity", axes):
            B[i, k] = 1.0
            k += 1
    for body, stiffness, drivers, gain in coupled:
        pos = layout.coords(body, "position")
        vel = layout.coords(body, "velocity")
        A[vel, pos] = stiffness
        B[vel, list(drivers)] = gain
    return LinearDynamics(A, B, dt)


def suspended_load_model(cable: float = 0.62, dt: float = 0.02) -> LinearDynamics:
    layout = StateLayout((("quad", 3), ("load", 2)))
    return _linear_model(layout, [("quad", "xyz")],
                         [("load", -GRAVITY / cable, (0, 1), -1.0 / cable)], dt)


def rendezvous_model(cable: float = 0.62, dt: float = 0.02) -> LinearDynamics:
    layout = StateLayout((("quad", 3), ("ground", 3), ("load", 2)))
    return _linear_model(layout, [("quad", "xyz"), ("ground", "xy")],
                         [("load", -GRAVITY / cable, (0, 1), -1.0 / cable)], dt)


def inverted_pendulum_model(length: float = 1.0, dt: float = 0.02) -> LinearDynamics:
    layout = StateLayout((("quad", 3), ("pole", 2)))
    return _linear_model(layout, [("quad", "xy")], [("pole", GRAVITY / length, (0, 1), -1.0)], dt)


def cargo_step(s, a, dt: float = 0.02, cable: float = 0.62) -> np.ndarray:
    return suspended_load_model(cable, dt).step_batch(np.asarray(s, float), np.asarray(a, float))


def rendezvous_step(s, a, dt: float = 0.02, cable: float = 0.62) -> np.ndarray:
    return rendezvous_model(cable, dt).step_batch(np.asarray(s, float), np.asarray(a, float))


def pendulum_step(s, a, dt: float = 0.02, length: float = 1.0) -> np.ndarray:
    return inverted_pendulum_model(length, dt).step_batch(np.asarray(s, float), np.asarray(a, float))


class CargoTask(Task):
    """Deliver a quadrotor to ``goal`` with minimal swing of the suspended load."""

    name = "cargo"

    def __init__(self, goal=(1.0, 1.0, 1.0), dt: float = 0.02, cable: float = 0.62,
                 accel: float = 3.0, theta=None, start_radius: float = 5.0,
                 goal_tolerance: float = 0.05, horizon: float = 15.0, stop_at_goal: bool = True,
                 max_swing: float = np.pi / 2):
        self.layout = StateLayout((("quad", 3), ("load", 2)))
        self.plant = suspended_load_model(cable, dt)
        self.model = self.plant
        self.goal = np.asarray(goal, dtype=float)
        L = self.layout
        self.prefs = [
            Preference(ATTRACTOR, L.select(["quad"]), point=self.goal, name="quad_position"),
            Preference(ATTRACTOR, L.select(["load"]), name="load_angle"),
            Preference(ATTRACTOR, L.select(["quad"], "velocity"), name="quad_velocity"),
            Preference(ATTRACTOR, L.select(["load"], "velocity"), name="load_rate"),
        ]
        self.theta = np.asarray(CARGO_THETA if theta is None else theta, dtype=float)
        self.accel = np.full(3, float(accel))
        self.cable = float(cable)
        self.start_radius = float(start_radius)
        self.goal_tolerance = float(goal_tolerance)
        self.horizon = float(horizon)
        self.stop_at_goal = bool(stop_at_goal)
        self.max_swing = float(max_swing)

    def state_ok(self, s) -> bool:
        return bool(np.all(np.abs(np.asarray(s)[3:5]) <= self.max_swing))

    def goal_distance(self, s, refs=None) -> float:
        return float(np.linalg.norm(np.asarray(s)[:3] - self.goal))

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        s = np.zeros(10)
        s[:3] = self.goal + uniform_in_ball(rng, 3, self.start_radius)
        return s


class RendezvousTask(Task):
    """Quadrotor with suspended load meets a planar ground robot.

    The ground robot's height is a state coordinate without an actuator, so
    it stays at its initial value (zero).
    """

    name = "rendezvous"

    def __init__(self, dt: float = 0.02, cable: float = 0.62, height_offset: float = 0.6,
                 quad_accel: float = 3.0, ground_accel: float = 2.0, theta=None,
                 start_radius: float = 8.0, goal_tolerance: float = 0.05, horizon: float = 15.0,
                 stop_at_goal: bool = True, max_swing: float = np.pi / 2):
        self.layout = L = StateLayout((("quad", 3), ("ground", 3), ("load", 2)))
        self.plant = rendezvous_model(cable, dt)
        self.model = self.plant
        self.prefs = [
            Preference(ATTRACTOR, L.select(["quad"], axes="xy"), target="relation",
                       other=L.select(["ground"], axes="xy"), name="horizontal_offset"),
            Preference(ATTRACTOR, L.select(["quad"], axes="z"), target="relation",
                       other=L.select(["ground"], axes="z"), offset=[height_offset],
                       name="height_offset"),
            Preference(ATTRACTOR, L.select(["quad"], "velocity"), target="relation",
                       other=L.select(["ground"], "velocity"), name="relative_velocity"),
            Preference(ATTRACTOR, L.select(["load"]), name="load_angle"),
            Preference(ATTRACTOR, L.select(["load"], "velocity"), name="load_rate"),
        ]
        self.theta = np.asarray(RENDEZVOUS_THETA if theta is None else theta, dtype=float)
        self.accel = np.array([quad_accel] * 3 + [ground_accel] * 2, dtype=float)
        self.cable = float(cable)
        self.height_offset = float(height_offset)
        self.start_radius = float(start_radius)
        self.goal_tolerance = float(goal_tolerance)
        self.horizon = float(horizon)
        self.stop_at_goal = bool(stop_at_goal)
        self.max_swing = float(max_swing)

    def state_ok(self, s) -> bool:
        return bool(np.all(np.abs(np.asarray(s)[6:8]) <= self.max_swing))

    def load_separation(self, s) -> float:
        """Horizontal distance between the load and the ground robot."""
        s = np.asarray(s, float)
        load_xy = s[:2] + self.cable * np.sin(s[6:8])
        return float(np.linalg.norm(load_xy - s[3:5]))

    def goal_distance(self, s, refs=None) -> float:
        return self.load_separation(s)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        s = np.zeros(16)
        s[:2] = uniform_in_ball(rng, 2, self.start_radius)
        s[2] = rng.uniform(self.height_offset, 3.0)
        return s


class PendulumTask(Task):
    """Balance an inverted pendulum on a quadrotor, then slow the quadrotor.

    ``schedule='two-phase'`` uses the pole features until ``switch_time`` and
    the slowdown features afterwards; ``'pole'`` keeps the pole features
    throughout.
    """

    name = "pendulum"

    def __init__(self, dt: float = 0.02, length: float = 1.0, accel: float = 5.0,
                 initial_angle_deg: float = 23.0, schedule: str = "pole", switch_time: float = 5.0,
                 theta_pole=None, theta_slowdown=None, tolerance_ratio: float = 0.05,
                 horizon: float = 10.0, stop_at_goal: bool = False):
        if schedule not in ("pole", "two-phase"):
            raise ValueError(f"unknown pendulum schedule {schedule!r}")
        self.layout = L = StateLayout((("quad", 3), ("pole", 2)))
        self.plant = inverted_pendulum_model(length, dt)
        self.model = self.plant
        self.pole_prefs = [
            Preference(ATTRACTOR, L.select(["pole"]), name="pole_offset"),
            Preference(ATTRACTOR, L.select(["pole"], "velocity"), name="pole_rate"),
        ]
        self.slowdown_prefs = [
            Preference(ATTRACTOR, L.select(["quad"]), name="quad_position"),
            Preference(ATTRACTOR, L.select(["quad"], "velocity"), name="quad_velocity"),
            Preference(ATTRACTOR, L.select(["pole"], "velocity"), name="pole_rate"),
        ]
        self.theta_pole = np.asarray(PENDULUM_THETA_POLE if theta_pole is None else theta_pole, float)
        self.theta_slowdown = np.asarray(
            PENDULUM_THETA_SLOWDOWN if theta_slowdown is None else theta_slowdown, float)
        self.prefs = self.pole_prefs
        self.theta = self.theta_pole
        self.schedule = schedule
        self.switch_time = float(switch_time)
        self.accel = np.full(2, float(accel))
        self.length = float(length)
        self.initial_angle = np.deg2rad(initial_angle_deg)
        self.goal_tolerance = tolerance_ratio * self.length
        self.horizon = float(horizon)
        self.stop_at_goal = bool(stop_at_goal)

    def phase(self, t: float):
        if self.schedule == "two-phase" and t >= self.switch_time:
            return self.slowdown_prefs, self.theta_slowdown
        return self.pole_prefs, self.theta_pole

    def pole_offset(self, S) -> np.ndarray:
        return np.linalg.norm(np.asarray(S, float)[..., 3:5], axis=-1)

    def in_goal(self, s, refs=None) -> bool:
        return bool(self.pole_offset(s) < self.goal_tolerance)

    def goal_distance(self, s, refs=None) -> float:
        return float(self.pole_offset(s))

    def initial_state(self, rng=None) -> np.ndarray:
        s = np.zeros(10)
        s[3] = self.length * np.sin(self.initial_angle)
        return s

    def balanced(self, traj, settle: float = 5.0) -> bool:
        """Pole within tolerance from ``settle`` seconds to the end of the run."""
        S = traj.all_states()
        t = np.append(traj.t, traj.t[-1] + traj.dt if len(traj.t) else 0.0)
        late = t >= settle - 1e-9
        return bool(traj.status != "diverged" and late.any()
                    and np.all(self.pole_offset(S[late]) < self.goal_tolerance))
