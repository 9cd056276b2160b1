"""Learning feature weights on a small training domain.

Approximate value iteration: sample states uniformly from a box around the
preference targets, back up ``R(s) + gamma * max_a V(D(s, a))`` with the
maximum taken by DAS, and refit the weights by least squares.  Several
independent runs are then compared on an evaluation set and the fittest kept.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .features import Preference, feature_matrix, values
from .policies import PolicyConfig, das_batch, plan_trajectory

__all__ = [
    "TrainingDomain",
    "TrainingConfig",
    "TrainingResult",
    "TrainingError",
    "make_training_domain",
    "goal_reward",
    "avi_train",
    "evaluate_policy",
    "select_fittest",
    "train_monte_carlo",
]


class TrainingError(RuntimeError):
    """Value iteration could not proceed (singular fit or diverging weights)."""


@dataclass
class TrainingDomain:
    """Axis-aligned state box ``S_l`` and action box ``A_l``."""

    state_low: np.ndarray
    state_high: np.ndarray
    action_low: np.ndarray
    action_high: np.ndarray

    def __post_init__(self):
        for name in ("state_low", "state_high", "action_low", "action_high"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            setattr(self, name, arr)
        if np.any(self.state_low > self.state_high) or np.any(self.action_low > self.action_high):
            raise ValueError("domain lower bounds exceed upper bounds")

    @property
    def n_state(self) -> int:
        return self.state_low.size

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.state_low, self.state_high, size=(n, self.n_state))

    def contains(self, s, strict: bool = False) -> bool:
        s = np.asarray(s, float)
        if strict:
            return bool(np.all(s > self.state_low) and np.all(s < self.state_high))
        return bool(np.all(s >= self.state_low) and np.all(s <= self.state_high))


@dataclass
class TrainingConfig:
    iterations: int = 300
    samples_per_iteration: int = 100
    gamma: float = 0.9
    goal_radius: float = 0.05
    goal_fraction: float = 0.2
    n_mc: int = 1
    eval_horizon: float = 20.0
    eval_size: int = 10
    divergence_factor: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.samples_per_iteration < 1:
            raise ValueError("samples_per_iteration must be positive")
        if not 0.0 <= self.goal_fraction < 1.0:
            raise ValueError("goal_fraction must lie in [0, 1)")
        if self.n_mc < 1:
            raise ValueError("n_mc must be at least 1")


@dataclass
class TrainingResult:
    theta: np.ndarray
    intercept: float
    theta_norms: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.theta_norms)


def _target_bounds(prefs: Sequence[Preference], n_state: int, refs) -> tuple[np.ndarray, np.ndarray]:
    lo = np.full(n_state + 1, np.inf)
    hi = np.full(n_state + 1, -np.inf)

    def mark(idx, vals):
        np.minimum.at(lo, idx, vals)
        np.maximum.at(hi, idx, vals)

    for p in prefs:
        if p.target == "point":
            for row in p.index:
                mark(row, p.point)
        elif p.target == "reference":
            val = np.asarray(refs[p.reference], float)
            for row in p.index:
                mark(row, val)
        elif p.target == "nearest":
            pts = np.asarray(refs[p.reference], float).reshape(-1, p.index.shape[1])
            for row in p.index:
                for q in pts:
                    mark(row, q)
    return lo[:n_state], hi[:n_state]


def make_training_domain(prefs: Sequence[Preference], margin: float, n_state: int, refs=None,
                         speed_limit: float | None = None, action_low=-3.0,
                         action_high=3.0, n_action: int | None = None) -> TrainingDomain:
    """Bounding box of all preference targets inflated by ``margin``.

    Coordinates no target pins down are centred on zero.  With a
    ``speed_limit``, velocity coordinates (the second half of the state) are
    bounded by it instead.
    """
    if not prefs:
        raise ValueError("no preferences to build a training domain from")
    if not margin > 0:
        raise ValueError("margin must be positive")
    refs = refs or {}
    lo, hi = _target_bounds(prefs, n_state, refs)
    free = ~np.isfinite(lo)
    lo[free] = 0.0
    hi[free] = 0.0
    lo -= margin
    hi += margin
    if speed_limit is not None:
        half = n_state // 2
        lo[half:] = -speed_limit
        hi[half:] = speed_limit
    n_action = n_action or n_state // 2
    alo = np.broadcast_to(np.asarray(action_low, float), (n_action,)).copy()
    ahi = np.broadcast_to(np.asarray(action_high, float), (n_action,)).copy()
    return TrainingDomain(lo, hi, alo, ahi)


def goal_reward(S, prefs: Sequence[Preference], radius: float, refs=None) -> np.ndarray:
    """1 where every attractor feature is below ``radius**2``, else 0."""
    att = [p for p in prefs if p.is_attractor]
    F = feature_matrix(S, att, refs)
    return np.all(F < radius**2, axis=1).astype(float)


def _goal_samples(task, refs, n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    from .features import goal_state

    g, _ = goal_state(task.prefs, task.n_state, refs)
    # small enough that the summed attractor features stay inside the radius
    att = [p for p in task.prefs if p.is_attractor]
    width = radius / (2.0 * np.sqrt(max(sum(p.index.size for p in att), 1)))
    return g + rng.uniform(-width, width, size=(n, task.n_state))


def avi_train(task, domain: TrainingDomain, config: TrainingConfig, rng: np.random.Generator,
              theta0=None, refs=None) -> TrainingResult:
    """Approximate value iteration with the task's plant simulator on ``domain``.

    Each iteration mixes uniform domain samples with a ``goal_fraction``
    share of near-goal samples (uniform samples almost never hit the goal
    region), backs up with DAS over the domain's action box, and refits
    ``theta`` with an intercept column by ordinary least squares.
    """
    prefs = task.prefs
    n_p = len(prefs)
    refs = task.reset(rng).refs if refs is None else refs
    theta = np.zeros(n_p) if theta0 is None else np.asarray(theta0, float).copy()
    if theta.shape != (n_p,):
        raise ValueError(f"initial weights have length {theta.size}, expected {n_p}")
    b = 0.0
    n = config.samples_per_iteration
    n_goal = int(round(config.goal_fraction * n))
    if n < n_p + 1:
        raise TrainingError(f"{n} samples per iteration cannot determine {n_p} weights and an intercept")
    norms = []
    for it in range(config.iterations):
        S = domain.sample(rng, n - n_goal)
        if n_goal:
            S = np.vstack([S, _goal_samples(task, refs, n_goal, config.goal_radius, rng)])
        R = goal_reward(S, prefs, config.goal_radius, refs)
        _, q_best = das_batch(S, task.plant, theta, prefs, domain.action_low, domain.action_high, refs)
        y = R + config.gamma * (q_best + b)
        X = np.column_stack([feature_matrix(S, prefs, refs), np.ones(len(S))])
        coef, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
        if rank < X.shape[1]:
            raise TrainingError(f"singular regression at iteration {it}: rank {rank} < {X.shape[1]}")
        new, b = coef[:-1], float(coef[-1])
        old_norm = np.linalg.norm(theta)
        new_norm = np.linalg.norm(new)
        if old_norm > 0 and new_norm > config.divergence_factor * old_norm:
            raise TrainingError(f"weights diverged at iteration {it}: |theta| {old_norm:.3g} -> {new_norm:.3g}")
        theta = new
        norms.append(float(new_norm))
    return TrainingResult(theta=theta, intercept=b, theta_norms=norms)


def evaluate_policy(theta, prefs: Sequence[Preference], task, eval_set, horizon: float,
                    cfg: PolicyConfig | None = None, seed: int = 0) -> tuple[float, float]:
    """Success rate over ``eval_set`` and mean time-to-goal among successes.

    The mean duration is ``inf`` when nothing succeeds.
    """
    eval_set = np.atleast_2d(np.asarray(eval_set, float))
    if len(eval_set) == 0:
        raise ValueError("empty evaluation set")
    cfg = cfg or PolicyConfig()
    ok, durations = 0, []
    for k, s0 in enumerate(eval_set):
        traj = plan_trajectory(s0, task, theta=theta, cfg=cfg, horizon=horizon, prefs=prefs,
                               rng=np.random.default_rng([seed, k]), stop_at_goal=True)
        if traj.success:
            ok += 1
            durations.append(traj.duration)
    mean_duration = float(np.mean(durations)) if durations else float("inf")
    return ok / len(eval_set), mean_duration


def select_fittest(candidates) -> int:
    """Index of the fittest ``(theta, success_rate, mean_duration)`` candidate.

    Highest success first, then shortest mean duration; ties keep the first.
    """
    if len(candidates) == 0:
        raise ValueError("no candidates to select from")
    best = 0
    for i, (_, rate, dur) in enumerate(candidates):
        _, brate, bdur = candidates[best]
        if rate > brate or (rate == brate and dur < bdur):
            best = i
    return best


@dataclass
class MonteCarloResult:
    theta: np.ndarray
    index: int
    candidates: list
    runs: list


def train_monte_carlo(task, domain: TrainingDomain, config: TrainingConfig, eval_set=None,
                      cfg: PolicyConfig | None = None, map_fn=map) -> MonteCarloResult:
    """``n_mc`` independent training runs, each scored on ``eval_set``."""
    root = np.random.default_rng(config.seed)
    if eval_set is None:
        eval_set = task.initial_states(config.eval_size, root.spawn(1)[0])
    jobs = [(task, domain, config, eval_set, cfg, config.seed, k) for k in range(config.n_mc)]
    runs = list(map_fn(_mc_trial, jobs))
    candidates = [(r.theta, rate, dur) for r, rate, dur in runs]
    i = select_fittest(candidates)
    return MonteCarloResult(theta=candidates[i][0], index=i, candidates=candidates,
                            runs=[r for r, _, _ in runs])


def _mc_trial(job):
    task, domain, config, eval_set, cfg, seed, k = job
    rng = np.random.default_rng([seed, k])
    try:
        res = avi_train(task, domain, config, rng)
    except TrainingError:
        return TrainingResult(np.zeros(len(task.prefs)), 0.0, []), 0.0, float("inf")
    rate, dur = evaluate_policy(res.theta, task.prefs, task, eval_set, config.eval_horizon, cfg, seed)
    return res, rate, dur
