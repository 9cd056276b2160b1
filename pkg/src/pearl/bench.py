"""Planning-time benchmarks and the scaling fits reported with them.

Every suite returns a list of row dicts with the columns in ``BENCH_COLUMNS``:
``sample`` rows hold one measured per-step time, ``fit`` rows hold the
power-law exponent (log-log slope) or linear fit of the suite.
"""
from __future__ import annotations

import time

import numpy as np

from .dynamics import DoubleIntegrator
from .features import ATTRACTOR, Preference, StateLayout, feature_matrix
from .policies import PolicyConfig, lsapa, plan_trajectory

__all__ = ["BENCH_COLUMNS", "SUITES", "fit_power_law", "fit_linear", "run_suite",
           "pursuit_scaling", "policy_timing", "feature_scaling", "lsapa_scaling", "obstacle_scaling"]

BENCH_COLUMNS = ["suite", "kind", "label", "x", "step", "plan_ms", "exponent", "slope", "intercept", "r2"]


def fit_linear(x, y) -> tuple[float, float, float]:
    """Least-squares ``y = slope * x + intercept``; returns (slope, intercept, R^2)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if x.size < 2 or np.ptp(x) == 0:
        raise ValueError("need at least two distinct x values")
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def fit_power_law(x, y) -> tuple[float, float]:
    """Exponent ``k`` of ``y ~ x^k`` from a log-log fit, with its R^2."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive data")
    k, _, r2 = fit_linear(np.log(x), np.log(y))
    return k, r2


def _row(suite, kind, label="", x="", step="", plan_ms="", exponent="", slope="", intercept="", r2=""):
    return dict(suite=suite, kind=kind, label=label, x=x, step=step, plan_ms=plan_ms,
                exponent=exponent, slope=slope, intercept=intercept, r2=r2)


def _samples(suite, label, x, ms):
    return [_row(suite, "sample", label, x, i, float(m)) for i, m in enumerate(ms)]


def pursuit_scaling(agents=(5, 10, 15, 20, 25), steps: int = 30, seed: int = 0) -> list[dict]:
    """DAS per-step time on the spiral pursuit task as the team grows."""
    from .tasks import PursuitTask

    rows, xs, ys = [], [], []
    for n in agents:
        task = PursuitTask(n_agents=n)
        rng = np.random.default_rng([seed, n])
        traj = plan_trajectory(task.initial_state(rng), task, horizon=steps * task.plant.dt, rng=rng)
        rows += _samples("pursuit-scaling", "das", n, traj.plan_ms)
        xs.append(n)
        ys.append(np.median(traj.plan_ms))
    k, r2 = fit_power_law(xs, ys)
    rows.append(_row("pursuit-scaling", "fit", "das", exponent=k, r2=r2))
    return rows


def policy_timing(task_name: str = "rendezvous", methods=("das", "lsapa", "hoot-grid"),
                  steps: int = 10, seed: int = 0, samples_per_axis: int = 100) -> list[dict]:
    """Per-step time of each policy on one task (default: the 5-input rendezvous)."""
    from .tasks import make_task

    task = make_task(task_name)
    rows = []
    for m in methods:
        cfg = PolicyConfig(method=m, samples_per_axis=samples_per_axis if m == "lsapa" else 3)
        rng = np.random.default_rng(seed)
        traj = plan_trajectory(task.initial_state(rng), task, cfg=cfg, horizon=steps * task.plant.dt,
                               rng=rng, stop_at_goal=False)
        rows += _samples("policy-timing", m, task.n_action, traj.plan_ms)
        rows.append(_row("policy-timing", "fit", m, x=task.n_action, plan_ms=float(np.median(traj.plan_ms))))
    return rows


def feature_scaling(dims=(10, 30, 100, 300, 1000), batch: int = 200, repeats: int = 20,
                    seed: int = 0) -> list[dict]:
    """Time to evaluate attractor features on a batch of states as the state grows."""
    rows, xs, ys = [], [], []
    rng = np.random.default_rng(seed)
    for d in dims:
        n_pos = d // 2
        layout = StateLayout(tuple((f"b{i}", 1) for i in range(n_pos)))
        prefs = [Preference(ATTRACTOR, layout.select(layout.names), point=np.ones(1)),
                 Preference(ATTRACTOR, layout.select(layout.names, "velocity"))]
        S = rng.standard_normal((batch, layout.n_state))
        ms = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            feature_matrix(S, prefs)
            ms.append(1e3 * (time.perf_counter() - t0))
        rows += _samples("feature-scaling", "attractor", layout.n_state, ms)
        xs.append(layout.n_state)
        ys.append(np.min(ms))
    k, r2 = fit_power_law(xs, ys)
    rows.append(_row("feature-scaling", "fit", "attractor", exponent=k, r2=r2))
    return rows


def lsapa_scaling(action_dims=(2, 10, 20, 50), samples_per_axis: int = 100, repeats: int = 5,
                  seed: int = 0) -> list[dict]:
    """LSAPA per-step time against the action dimension at fixed samples per axis."""
    rows, xs, ys = [], [], []
    for d_a in action_dims:
        rng = np.random.default_rng([seed, d_a])
        layout = StateLayout(tuple((f"j{i}", 1) for i in range(d_a)))
        dyn = DoubleIntegrator(d_a, 0.02)
        prefs = [Preference(ATTRACTOR, layout.select(layout.names), point=np.ones(1)),
                 Preference(ATTRACTOR, layout.select(layout.names, "velocity"))]
        theta = np.array([-1.0, -0.5])
        cfg = PolicyConfig(method="lsapa", samples_per_axis=samples_per_axis)
        s = rng.standard_normal(dyn.n_state)
        ms = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            lsapa(s, dyn, theta, prefs, None, cfg, rng)
            ms.append(1e3 * (time.perf_counter() - t0))
        rows += _samples("lsapa-scaling", "lsapa", d_a, ms)
        xs.append(d_a)
        ys.append(np.median(ms))
    slope, intercept, r2 = fit_linear(xs, ys)
    rows.append(_row("lsapa-scaling", "fit", "lsapa", slope=slope, intercept=intercept, r2=r2))
    return rows


def obstacle_scaling(counts=(300, 600, 900), steps: int = 20, rounds: int = 5, seed: int = 0) -> list[dict]:
    """DAS action-selection time on the obstacle task against the obstacle count.

    Each round times ``steps`` selections per count, visiting the counts in
    turn so slow drifts in machine load hit all of them alike; the fastest
    round's mean is the estimate.
    """
    from .policies import select_action
    from .tasks import ObstacleTask

    cfg = PolicyConfig()
    setups = []
    for n in counts:
        task = ObstacleTask(n_obstacles=n)
        world = task.reset(np.random.default_rng([seed, n]))
        setups.append((n, task, world.refs, task.initial_state()))
    per_round = {n: [] for n in counts}
    rows = []
    for _ in range(rounds):
        for n, task, refs, s in setups:
            ms = []
            for _ in range(steps):
                t0 = time.perf_counter()
                select_action("das", s, task, task.prefs, task.theta, cfg, refs, None, None)
                ms.append(1e3 * (time.perf_counter() - t0))
            per_round[n].append(np.mean(ms))
            rows += _samples("obstacle-scaling", "das", n, ms)
    xs = list(counts)
    ys = [min(per_round[n]) for n in counts]
    slope, intercept, r2 = fit_linear(xs, ys)
    k, _ = fit_power_law(xs, ys)
    rows.append(_row("obstacle-scaling", "fit", "das", exponent=k, slope=slope, intercept=intercept, r2=r2))
    return rows


SUITES = {
    "pursuit-scaling": pursuit_scaling,
    "policy-timing": policy_timing,
    "feature-scaling": feature_scaling,
    "lsapa-scaling": lsapa_scaling,
    "obstacle-scaling": obstacle_scaling,
}


def run_suite(name: str, seed: int = 0) -> list[dict]:
    try:
        fn = SUITES[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; expected one of {sorted(SUITES)}") from None
    return fn(seed=seed)
