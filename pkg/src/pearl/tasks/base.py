"""Shared task plumbing: worlds, action bounds and goal tests."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ..dynamics import ControlAffineDynamics
from ..features import Preference, StateLayout, feature_matrix


@dataclass(frozen=True)
class StaticWorld:
    """A world whose references never change."""

    refs: Mapping[str, np.ndarray] = field(default_factory=dict)
    t: float = 0.0

    def advance(self, rng: np.random.Generator) -> "StaticWorld":
        return self


class Task:
    """A planning problem: plant, planner model, preferences and success tests.

    ``plant`` is integrated at the simulation rate.  ``model`` is the
    simulator the value lookahead uses; it is the plant unless a task holds
    actions longer inside the lookahead (``plan_dt``).
    """

    name = "task"
    layout: StateLayout
    plant: ControlAffineDynamics
    model: ControlAffineDynamics
    prefs: list[Preference]
    theta: np.ndarray
    accel: np.ndarray
    goal_tolerance: float = 0.05
    horizon: float = 20.0
    stop_at_goal: bool = True

    @property
    def n_state(self) -> int:
        return self.plant.n_state

    @property
    def n_action(self) -> int:
        return self.plant.n_action

    @property
    def attractors(self) -> list[Preference]:
        return [p for p in self.prefs if p.is_attractor]

    def reset(self, rng: np.random.Generator):
        return StaticWorld({})

    def lookahead_refs(self, refs):
        """References as predicted at the time of the lookahead state."""
        return refs

    def action_bounds(self, s, cfg=None) -> tuple[np.ndarray, np.ndarray]:
        return -self.accel, self.accel.copy()

    def phase(self, t: float) -> tuple[Sequence[Preference], np.ndarray]:
        return self.prefs, self.theta

    def in_goal(self, s, refs) -> bool:
        F = feature_matrix(np.asarray(s, float), self.attractors, refs)[0]
        return bool(np.all(F < self.goal_tolerance**2))

    def failed(self, s, refs) -> bool:
        return False

    def state_ok(self, s) -> bool:
        return True

    def goal_distance(self, s, refs) -> float:
        att = self.attractors
        return float(np.sqrt(feature_matrix(np.asarray(s, float), att, refs)[0].sum()))

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def initial_states(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return np.array([self.initial_state(rng) for _ in range(n)])

    def __repr__(self):
        return f"{type(self).__name__}(n_state={self.n_state}, n_action={self.n_action})"


def uniform_in_ball(rng: np.random.Generator, dim: int, radius: float) -> np.ndarray:
    d = rng.standard_normal(dim)
    d /= np.linalg.norm(d)
    return d * radius * rng.random() ** (1.0 / dim)
