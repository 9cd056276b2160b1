"""Hand-tuned baseline controllers: Boids flocking and a Gaussian potential field."""
from __future__ import annotations

from typing import Mapping

import numpy as np

BOIDS_WEIGHTS = (1.0, 0.01, 0.01, 0.1, 1.0)


def boids_policy(s, prey: Mapping[str, np.ndarray], weights=BOIDS_WEIGHTS,
                 separation_radius: float = 0.1, accel: float = 3.0) -> np.ndarray:
    """Five proportional rules per agent, summed and clamped.

    Weights are for flock separation, alignment and cohesion, then prey
    velocity matching and prey cohesion.  Separation only acts between agents
    closer than ``separation_radius``.
    """
    s = np.asarray(s, dtype=float)
    n = s.size // 4
    p = s[: 2 * n].reshape(n, 2)
    v = s[2 * n:].reshape(n, 2)
    w_sep, w_ali, w_coh, w_pali, w_pcoh = weights
    diff = p[:, None, :] - p[None, :, :]
    dist = np.linalg.norm(diff, axis=-1)
    close = (dist < separation_radius) & ~np.eye(n, dtype=bool)
    sep = (diff * close[..., None]).sum(axis=1)
    if n > 1:
        others_v = (v.sum(axis=0) - v) / (n - 1)
        others_p = (p.sum(axis=0) - p) / (n - 1)
        ali = others_v - v
        coh = others_p - p
    else:
        ali = coh = np.zeros_like(p)
    prey_p = np.asarray(prey["prey_position"], float)
    prey_v = np.asarray(prey["prey_velocity"], float)
    a = w_sep * sep + w_ali * ali + w_coh * coh + w_pali * (prey_v - v) + w_pcoh * (prey_p - p)
    return np.clip(a.ravel(), -accel, accel)


def apf_gradient(x, goal, obstacles, alpha: float, sigma: float = 0.45) -> np.ndarray:
    """Gradient of ``alpha ||x-g||^2 + sum_o exp(-||x-o||^2 / (2 sigma^2))``."""
    x = np.asarray(x, float)
    grad = 2.0 * alpha * (x - np.asarray(goal, float))
    obs = np.asarray(obstacles, float).reshape(-1, x.size)
    if len(obs):
        d = x - obs
        w = np.exp(-np.einsum("ij,ij->i", d, d) / (2 * sigma**2))
        grad -= (w[:, None] * d).sum(axis=0) / sigma**2
    return grad


def gaussian_apf_policy(s, obstacles, goal, alpha: float, sigma: float = 0.45,
                        max_speed: float = 0.37, accel: float = 3.0, dt: float = 0.1,
                        bounds=None) -> np.ndarray:
    """Follow the negative potential gradient as a speed-capped velocity command.

    Larger ``alpha`` weights the goal more heavily against the obstacles.
    """
    s = np.asarray(s, float)
    x, v = s[:2], s[2:4]
    v_des = -apf_gradient(x, goal, obstacles, alpha, sigma)
    speed = np.linalg.norm(v_des)
    if speed > max_speed:
        v_des *= max_speed / speed
    a = (v_des - v) / dt
    lo, hi = (-accel, accel) if bounds is None else bounds
    return np.clip(a, lo, hi)


def apf_controller(task, alpha: float, sigma: float = 0.45):
    """Gaussian-APF controller for :func:`pearl.policies.plan_trajectory`."""

    def control(s, refs, bounds):
        return gaussian_apf_policy(s, refs.get("obstacles", ()), task.goal, alpha, sigma,
                                   task.max_speed, float(task.accel[0]), task.plant.dt, bounds)

    return control


def boids_controller(task, **kw):
    """Boids controller for :func:`pearl.policies.plan_trajectory`."""

    def control(s, refs, bounds):
        return np.clip(boids_policy(s, refs, **kw), *bounds)

    return control
