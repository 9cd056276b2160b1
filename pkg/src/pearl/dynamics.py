"""Control-affine discrete-time dynamics and Gaussian input disturbances.

Every simulator in the package maps a state ``s`` and an acceleration input
``a`` to ``f(s) + g(s) a``.  States are flat vectors laid out as all positions
followed by all velocities; actions are accelerations.  Disturbances enter
through the same input channel, so ``step_disturbed(s, a, xi)`` is exactly
``step(s, a + xi)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

__all__ = [
    "ControlAffineDynamics",
    "DoubleIntegrator",
    "LinearDynamics",
    "GaussianDisturbance",
    "step",
    "step_disturbed",
    "sample_disturbance",
    "estimate_disturbance",
]


class ControlAffineDynamics:
    """Base class for ``s' = f(s) + g(s) a`` simulators.

    Subclasses implement :meth:`step_batch`, which works on stacked states
    and actions of shape ``(B, n_state)`` and ``(B, n_action)``.
    """

    n_state: int
    n_action: int
    dt: float

    def step_batch(self, S: np.ndarray, U: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def with_dt(self, dt: float) -> "ControlAffineDynamics":
        """Same model discretised with a different hold time."""
        raise NotImplementedError

    def check(self, s: np.ndarray, a: np.ndarray) -> None:
        if s.shape[-1] != self.n_state:
            raise ValueError(f"state has {s.shape[-1]} coordinates, expected {self.n_state}")
        if a.shape[-1] != self.n_action:
            raise ValueError(f"action has {a.shape[-1]} coordinates, expected {self.n_action}")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a))):
            raise ValueError("non-finite state or action")


class DoubleIntegrator(ControlAffineDynamics):
    """``n_dof`` independent unit-mass point axes, exact zero-order hold.

    p' = p + v dt + a dt^2 / 2,   v' = v + a dt
    """

    def __init__(self, n_dof: int, dt: float):
        self.n_dof = int(n_dof)
        self.n_state = 2 * self.n_dof
        self.n_action = self.n_dof
        self.dt = float(dt)

    def step_batch(self, S, U):
        n, dt = self.n_dof, self.dt
        p, v = S[..., :n], S[..., n:]
        return np.concatenate([p + v * dt + (0.5 * dt * dt) * U, v + dt * U], axis=-1)

    def with_dt(self, dt):
        return DoubleIntegrator(self.n_dof, dt)

    def __repr__(self):
        return f"DoubleIntegrator(n_dof={self.n_dof}, dt={self.dt})"


class LinearDynamics(ControlAffineDynamics):
    """Exact ZOH discretisation of a continuous LTI model ``x' = A x + B u``.

    The discrete map is ``s' = Ad s + Bd a``: affine in ``a`` with a constant
    input matrix, which covers the suspended-load and inverted-pendulum models.
    """

    def __init__(self, A: np.ndarray, B: np.ndarray, dt: float):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.n_state, self.n_action = self.B.shape
        self.dt = float(dt)
        m = np.zeros((self.n_state + self.n_action,) * 2)
        m[: self.n_state, : self.n_state] = self.A
        m[: self.n_state, self.n_state:] = self.B
        em = expm(m * self.dt)
        self.Ad = em[: self.n_state, : self.n_state]
        self.Bd = em[: self.n_state, self.n_state:]

    def step_batch(self, S, U):
        return S @ self.Ad.T + U @ self.Bd.T

    def with_dt(self, dt):
        return LinearDynamics(self.A, self.B, dt)


def step(dyn: ControlAffineDynamics, s, a) -> np.ndarray:
    """One deterministic transition ``f(s) + g(s) a``."""
    s = np.asarray(s, dtype=float)
    a = np.asarray(a, dtype=float)
    dyn.check(s, a)
    return dyn.step_batch(s, a)


def step_disturbed(dyn: ControlAffineDynamics, s, a, xi) -> np.ndarray:
    """Transition under an additive input disturbance, ``f(s) + g(s)(a + xi)``."""
    a = np.asarray(a, dtype=float)
    xi = np.asarray(xi, dtype=float)
    if xi.shape[-1] != dyn.n_action:
        raise ValueError(f"disturbance has {xi.shape[-1]} coordinates, expected {dyn.n_action}")
    return step(dyn, s, a + xi)


@dataclass(frozen=True)
class GaussianDisturbance:
    """Per-axis normal input disturbance N(mean, std), in m/s^2."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        std = np.broadcast_to(np.asarray(self.std, dtype=float), mean.shape).copy()
        if np.any(std < 0):
            raise ValueError("disturbance std must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)

    @classmethod
    def isotropic(cls, n: int, mean: float = 0.0, std: float = 0.0) -> "GaussianDisturbance":
        return cls(np.full(n, float(mean)), np.full(n, float(std)))

    @property
    def is_zero(self) -> bool:
        return not (np.any(self.mean) or np.any(self.std))

    def draw(self, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
        shape = self.mean.shape if size is None else (size,) + self.mean.shape
        return self.mean + self.std * rng.standard_normal(shape)


def sample_disturbance(dist: GaussianDisturbance, rng: np.random.Generator) -> np.ndarray:
    return dist.draw(rng)


def estimate_disturbance(
    history: Sequence[tuple[np.ndarray, np.ndarray]], window: int = 100
) -> GaussianDisturbance:
    """Moving mean/std of ``observed - commanded`` acceleration over the last ``window`` entries."""
    if window < 2:
        raise ValueError("window must be at least 2")
    if len(history) == 0:
        raise ValueError("empty disturbance history")
    recent = history[-window:]
    err = np.array([np.asarray(obs, float) - np.asarray(cmd, float) for cmd, obs in recent])
    return GaussianDisturbance(err.mean(axis=0), err.std(axis=0))
