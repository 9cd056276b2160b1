"""Acceptance criteria, one line each in the terminal summary.

Run with ``pytest tests/test_acceptance.py -v``.  Parts of a criterion are
separate tests; the criterion passes only when all of its parts do.
"""
import time

import numpy as np
import pytest

from pearl.analysis import (check_attractor_stability, critical_points, is_monotone,
                            satisfies_minimum_conditions, vx_second_derivative)
from pearl.bench import fit_linear, obstacle_scaling, pursuit_scaling
from pearl.config import load_config, preset_path
from pearl.dynamics import GaussianDisturbance
from pearl.features import values
from pearl.learning import TrainingConfig, make_training_domain, train_monte_carlo
from pearl.policies import (PolicyConfig, QObjective, das, fit_axial_quadratic, lsapa, plan_trajectory)
from pearl.tasks import (CargoTask, ObstacleTask, PendulumTask, PursuitTask, RendezvousTask, TASKS,
                         apf_controller, make_task)


def attractor_only(task):
    idx = [i for i, p in enumerate(task.prefs) if p.is_attractor]
    return [task.prefs[i] for i in idx], np.asarray(task.theta, float)[idx]


def random_state(task, rng):
    return task.initial_state(rng) + rng.normal(size=task.n_state)


def final_second_mean(traj, metric) -> float:
    S = traj.all_states()
    t = np.append(traj.t, traj.t[-1] + traj.dt)
    late = t >= t[-1] - 1.0 + 1e-9
    return float(np.mean([metric(s) for s in S[late]]))


# -- 1 ---------------------------------------------------------------------

def test_c1_axial_restriction_is_quadratic(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst_resid, worst_curv = 0.0, 0.0
    for name in TASKS:
        task = make_task(name)
        prefs, theta = attractor_only(task)
        refs = task.lookahead_refs(task.reset(rng).refs)
        lo, hi = task.action_bounds(task.initial_state(rng))
        for _ in range(100):
            s = random_state(task, rng)
            i = rng.integers(task.n_action)
            xi = rng.normal(size=task.n_action)
            obj = QObjective(s, task.model, theta, prefs, refs)
            u = np.linspace(lo[i], hi[i], 9)
            U = np.zeros((9, task.n_action))
            U[:, i] = u
            q0, qx = obj(U), obj(U + xi)
            fit0, fitx = fit_axial_quadratic(u, q0), fit_axial_quadratic(u, qx)
            scale = np.max(np.abs(qx))
            worst_resid = max(worst_resid, np.max(np.abs(qx - fitx(u))) / scale)
            worst_curv = max(worst_curv, abs(fitx.p2 - fit0.p2) / max(1.0, abs(fit0.p2)))
    elapsed = time.perf_counter() - t0
    ok = worst_resid < 1e-8 and worst_curv < 1e-8 and elapsed < 10
    report(1, "quadratic restriction", ok,
           f"max rel residual {worst_resid:.2e}, max curvature change {worst_curv:.2e}, {elapsed:.1f}s")
    assert ok


# -- 2 ---------------------------------------------------------------------

def test_c2_das_and_lsapa_agree_without_disturbance(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for name in TASKS:
        task = make_task(name)
        prefs, theta = attractor_only(task)
        refs = task.lookahead_refs(task.reset(rng).refs)
        for _ in range(100):
            s = random_state(task, rng)
            bounds = task.action_bounds(s)
            a_d = das(s, task.model, theta, prefs, refs=refs, bounds=bounds)
            a_l = lsapa(s, task.model, theta, prefs, None, rng=rng, refs=refs, bounds=bounds)
            worst = max(worst, float(np.max(np.abs(a_d - a_l))))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-6 and elapsed < 30
    report(2, "DAS/LSAPA agreement", ok, f"max action difference {worst:.2e}, {elapsed:.1f}s")
    assert ok


# -- 3 ---------------------------------------------------------------------

def test_c3_combined_policy_dominates(report):
    rng = np.random.default_rng(3)
    checked, violations = 0, 0
    for name in TASKS:
        task = make_task(name)
        world = task.reset(rng)
        refs = task.lookahead_refs(world.refs)
        dist = GaussianDisturbance.isotropic(task.n_action, 0.5, 0.5)
        for _ in range(20):
            s = random_state(task, rng)
            bounds = task.action_bounds(s)
            for res in (das(s, task.model, task.theta, task.prefs, refs=refs, bounds=bounds, info=True),
                        lsapa(s, task.model, task.theta, task.prefs, dist, rng=rng, refs=refs, bounds=bounds,
                              info=True)):
                checked += 1
                violations += not (res.q >= res.q_convex and res.q >= res.q_sum)
    ok = violations == 0
    report(3, "combined-policy dominance", ok, f"{violations} violations over {checked} evaluations")
    assert ok


# -- 4 ---------------------------------------------------------------------

def test_c4_pursuit_with_published_weights(report):
    task = PursuitTask(n_agents=25, prey="spiral")
    finals = []
    for seed in range(10):
        rng = np.random.default_rng(seed)
        traj = plan_trajectory(task.initial_state(rng), task, horizon=20.0, rng=rng)
        finals.append(task.goal_distance(traj.final_state, traj.final_refs))
    mean = float(np.mean(finals))
    ok = mean <= 0.5
    report(4, "pursuit prey distance", ok, f"mean final prey distance {mean:.3f} m (std {np.std(finals):.3f})")
    assert ok


# -- 5 ---------------------------------------------------------------------

def test_c5_pursuit_scaling(report):
    fit = [r for r in pursuit_scaling(steps=40) if r["kind"] == "fit"][0]
    ok = fit["exponent"] <= 1.3
    report(5, "pursuit scaling", ok, f"exponent {fit['exponent']:.2f} (R2 {fit['r2']:.2f})")
    assert ok


# -- 6 ---------------------------------------------------------------------

def test_c6_obstacle_success_ordering(report):
    task = ObstacleTask(n_obstacles=300)
    seeds = range(50)
    pearl = [plan_trajectory(task.initial_state(), task, rng=np.random.default_rng(k)).success for k in seeds]
    apf = {}
    for alpha in (0.1, 1.0, 10.0):
        ctl = apf_controller(task, alpha)
        apf[alpha] = np.mean([plan_trajectory(task.initial_state(), task, rng=np.random.default_rng(k),
                                              controller=ctl).success for k in seeds])
    best = max(apf.values())
    ok = np.mean(pearl) >= best
    detail = f"PEARL {np.mean(pearl):.2f} vs APF " + ", ".join(f"alpha={a:g}: {r:.2f}" for a, r in apf.items())
    report(6, "obstacle success ordering", ok, detail)
    assert ok


def test_c6_obstacle_time_linear_in_count(report):
    rows = obstacle_scaling(counts=(300, 450, 600, 750, 900), steps=50, rounds=8)
    fit = [r for r in rows if r["kind"] == "fit"][0]
    ok = fit["slope"] > 0 and fit["r2"] >= 0.9
    report(6, "obstacle timing", ok, f"linear fit slope {fit['slope']:.2e} ms/obstacle, R2 {fit['r2']:.3f}")
    assert ok


# -- 7 ---------------------------------------------------------------------

def test_c7_cargo_disturbance_rejection(report):
    task = CargoTask()
    dist = GaussianDisturbance.isotropic(3, 2.0, 0.5)
    result = {}
    for method in ("lsapa", "das"):
        cfg = PolicyConfig(method, samples_per_axis=100 if method == "lsapa" else 3)
        d = []
        for seed in range(25):
            rng = np.random.default_rng(seed)
            traj = plan_trajectory(task.initial_state(rng), task, cfg=cfg, dist=dist, rng=rng,
                                   stop_at_goal=False)
            d.append(final_second_mean(traj, task.goal_distance))
        result[method] = float(np.mean(d))
    ok = result["lsapa"] <= 0.1 and result["lsapa"] < result["das"]
    report(7, "cargo under N(2, 0.5)", ok,
           f"final-second distance LSAPA {result['lsapa']:.3f} m, DAS {result['das']:.3f} m")
    assert ok


# -- 8 ---------------------------------------------------------------------

def test_c8_rendezvous_completion(report):
    task = RendezvousTask()
    dist = GaussianDisturbance.isotropic(5, 1.0, 1.0)
    cfg = PolicyConfig("lsapa", samples_per_axis=100)
    done = 0
    for seed in range(25):
        rng = np.random.default_rng(seed)
        traj = plan_trajectory(task.initial_state(rng), task, cfg=cfg, dist=dist, rng=rng, stop_at_goal=False)
        done += final_second_mean(traj, task.load_separation) <= 0.1
    ok = done >= 20
    report(8, "rendezvous completion", ok, f"{done}/25 seeds within 0.1 m")
    assert ok


def test_c8_lsapa_much_faster_than_hoot(report):
    task = RendezvousTask()
    dist = GaussianDisturbance.isotropic(5, 1.0, 1.0)
    ms = {}
    for method in ("lsapa", "hoot-grid"):
        rng = np.random.default_rng(0)
        traj = plan_trajectory(task.initial_state(rng), task, cfg=PolicyConfig(method, samples_per_axis=100),
                               dist=dist, horizon=0.2, rng=rng, stop_at_goal=False)
        ms[method] = float(np.median(traj.plan_ms))
    ok = ms["lsapa"] <= 0.1 * ms["hoot-grid"]
    report(8, "LSAPA vs HOOT time", ok, f"LSAPA {ms['lsapa']:.2f} ms, HOOT {ms['hoot-grid']:.1f} ms per step")
    assert ok


# -- 9 ---------------------------------------------------------------------

PENDULUM_DIST = GaussianDisturbance.isotropic(2, 1.0, 1.0)


def _pendulum_runs(method, n=100, seeds=range(25)):
    task = PendulumTask()
    cfg = PolicyConfig(method, samples_per_axis=n if method == "lsapa" else 3)
    return task, [plan_trajectory(task.initial_state(), task, cfg=cfg, dist=PENDULUM_DIST,
                                  rng=np.random.default_rng(k)) for k in seeds]


def test_c9_lsapa_balances_pendulum(report):
    task, runs = _pendulum_runs("lsapa")
    held = sum(task.balanced(t, settle=5.0) for t in runs)
    ok = held >= 20
    report(9, "LSAPA balances", ok, f"{held}/25 seeds balanced from 5 s to 10 s")
    assert ok


def test_c9_das_fails_pendulum(report):
    task, runs = _pendulum_runs("das")
    failed = sum(not task.balanced(t, settle=5.0) for t in runs)
    late = np.mean([task.pole_offset(t.states[t.t >= 5.0]).mean() for t in runs])
    ok = failed >= 20
    report(9, "DAS fails", ok, f"{failed}/25 seeds unbalanced; mean late pole offset {late:.4f} m "
                               f"vs tolerance {task.goal_tolerance:.3f} m")
    assert ok


def test_c9_sample_size_saturation(report):
    reward = {}
    for n in (20, 100):
        task, runs = _pendulum_runs("lsapa", n)
        reward[n] = float(np.mean([np.mean(task.pole_offset(t.states) < task.goal_tolerance) for t in runs]))
    ok = reward[20] >= 0.95 * reward[100]
    report(9, "sample-size saturation", ok, f"reward d_n=20 {reward[20]:.4f}, d_n=100 {reward[100]:.4f}")
    assert ok


# -- 10 --------------------------------------------------------------------

def test_c10_training_end_to_end(report):
    t0 = time.perf_counter()
    cfg = load_config(preset_path("pursuit"))
    task = cfg.make_task(training=True)
    tc = cfg.training()
    assert task.n_agents == 3 and tc.iterations == 300
    refs = task.reset(np.random.default_rng(tc.seed)).refs
    domain = make_training_domain(task.prefs, 0.4, task.n_state, refs)
    mc = train_monte_carlo(task, domain, tc, cfg=PolicyConfig("das"))
    _, rate, _ = mc.candidates[mc.index]
    elapsed = time.perf_counter() - t0
    att = [i for i, p in enumerate(task.prefs) if p.is_attractor]
    ok = bool(np.all(mc.theta[att] < 0)) and rate >= 0.9 and elapsed < 600
    report(10, "training", ok, f"theta {np.round(mc.theta, 3).tolist()}, eval success {rate:.2f}, {elapsed:.1f}s")
    assert ok


# -- 11 --------------------------------------------------------------------

def _grid_oracle(c, d, lo=-10.0, hi=10.0, step=1e-5):
    x = np.arange(lo, hi + step / 2, step)
    q = (x - 1) ** 2 + d * d
    f = x * q * q - c * (x - 1)
    i = np.flatnonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)
    roots = 0.5 * (x[i] + x[i + 1])
    return roots, np.where(vx_second_derivative(roots, c, d) > 0, "min", "max")


def test_c11_local_minima_lattice(report):
    cs, ds = np.linspace(50, 200, 20), np.linspace(0.1, 1.5, 20)
    t0 = time.perf_counter()
    found = {(c, d): critical_points((c, d)) for c in cs for d in ds}
    elapsed = time.perf_counter() - t0
    count_bad, loc_err, cond_bad = 0, 0.0, 0
    for (c, d), pts in found.items():
        roots, kinds = _grid_oracle(c, d)
        if len(pts) != len(roots) or [k for _, k in pts] != list(kinds):
            count_bad += 1
            continue
        loc_err = max(loc_err, float(np.max(np.abs(np.array([x for x, _ in pts]) - roots))))
        cond_bad += sum(not satisfies_minimum_conditions(x, d) for x, k in pts if k == "min")
    ok = count_bad == 0 and loc_err < 1e-4 and cond_bad == 0 and elapsed < 10
    report(11, "local-minima analysis", ok, f"{count_bad} count mismatches, max location error {loc_err:.1e}, "
                                            f"{cond_bad} minima violating the conditions, {elapsed:.1f}s")
    assert ok


# -- 12 --------------------------------------------------------------------

def test_c12_monotone_progression(report):
    tasks = [CargoTask(), RendezvousTask(), PursuitTask(n_agents=3, prey="static", spacing=False), PendulumTask()]
    used, bad, skipped = [], 0, []
    for task in tasks:
        if not check_attractor_stability(task.theta, task.prefs, task.n_state):
            skipped.append(task.name)
            continue
        used.append(task.name)
        for k in range(20):
            rng = np.random.default_rng(k)
            traj = plan_trajectory(task.initial_state(rng), task, rng=rng, stop_at_goal=True)
            v = values(traj.all_states(), task.theta, task.prefs, traj.final_refs)
            bad += not is_monotone(v, 1e-9)
    ok = bad == 0 and len(used) >= 1
    report(12, "monotone progression", ok,
           f"{bad} non-monotone of {20 * len(used)} runs on {used}; excluded by the check: {skipped}")
    assert ok
