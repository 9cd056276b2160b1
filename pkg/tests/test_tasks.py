import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pearl.features import feature_matrix
from pearl.policies import PolicyConfig, plan_trajectory
from pearl.tasks import (CargoTask, ObstacleTask, PendulumTask, PursuitTask, RendezvousTask, TASKS,
                         apf_controller, boids_policy, make_obstacle_world, make_task, obstacle_step,
                         prey_reference, training_obstacle_task)
from pearl.tasks.baselines import apf_gradient


@pytest.mark.parametrize("kind", ["line", "spiral", "lemniscate"])
@settings(max_examples=20, deadline=None)
@given(t=st.floats(0.5, 60))
def test_prey_velocity_is_the_position_derivative(kind, t):
    h = 1e-5
    p1, _ = prey_reference(kind, t - h)
    p2, _ = prey_reference(kind, t + h)
    _, v = prey_reference(kind, t)
    np.testing.assert_allclose((p2 - p1) / (2 * h), v, atol=1e-6)


def test_lemniscate_spans_plus_minus_scale():
    t = np.linspace(0, 2 * np.pi / 0.25, 2001)
    xs = np.array([prey_reference("lemniscate", x)[0][0] for x in t])
    assert xs.max() == pytest.approx(4.0, abs=1e-4) and xs.min() == pytest.approx(-4.0, abs=1e-4)


def test_brownian_prey_is_seeded_and_speed_limited():
    a = prey_reference("brownian", 3.0, seed=4)
    b = prey_reference("brownian", 3.0, seed=4)
    np.testing.assert_array_equal(a[0], b[0])
    assert np.linalg.norm(a[1]) <= 1.0 + 1e-12


def test_pursuit_lookahead_extrapolates_prey():
    task = PursuitTask(n_agents=2, plan_dt=2.0)
    refs = {"prey_position": np.array([1.0, 0.0]), "prey_velocity": np.array([0.5, 0.5])}
    np.testing.assert_allclose(task.lookahead_refs(refs)["prey_position"], [2.0, 1.0])
    assert PursuitTask(n_agents=2, extrapolate=False).lookahead_refs(refs) is refs


def test_obstacle_world_stays_in_arena_and_clear_of_start():
    rng = np.random.default_rng(0)
    w = make_obstacle_world(300, rng, 50.0, keep_clear=(np.array([25.0, 0]), np.array([-25.0, 0])))
    assert np.min(np.linalg.norm(w.position - [25.0, 0], axis=1)) >= 1.0
    for _ in range(500):
        w = obstacle_step(w, rng)
    assert np.all(np.linalg.norm(w.position, axis=1) <= 50.0 + 1e-9)
    assert set(np.unique(w.mode)) <= {0, 1, 2}


def test_obstacle_action_bounds_enforce_speed_limit():
    task = ObstacleTask(n_obstacles=0)
    s = np.array([0.0, 0.0, 0.3, -0.37])
    lo, hi = task.action_bounds(s)
    v_next_hi = s[2:] + hi * task.plant.dt
    v_next_lo = s[2:] + lo * task.plant.dt
    assert np.all(v_next_hi <= 0.37 + 1e-12) and np.all(v_next_lo >= -0.37 - 1e-12)


def test_pearl_reaches_goal_without_obstacles():
    task = ObstacleTask(n_obstacles=0, start=(3.0, 0.0), goal=(-3.0, 0.0))
    traj = plan_trajectory(task.initial_state(), task, horizon=60, rng=np.random.default_rng(0))
    assert traj.success


def test_training_obstacle_task_is_static():
    task = training_obstacle_task()
    w = task.reset(np.random.default_rng(0))
    assert w.refs["obstacles"].shape == (4, 2) and w.advance(None) is w


def test_apf_gradient_matches_finite_differences():
    rng = np.random.default_rng(2)
    x, g, obs = rng.normal(size=2), rng.normal(size=2), rng.normal(size=(5, 2))

    def u(p):
        d = p - obs
        return 0.7 * np.sum((p - g) ** 2) + np.sum(np.exp(-np.sum(d * d, axis=1) / (2 * 0.45**2)))

    h = 1e-6
    fd = np.array([(u(x + h * e) - u(x - h * e)) / (2 * h) for e in np.eye(2)])
    np.testing.assert_allclose(apf_gradient(x, g, obs, 0.7), fd, atol=1e-6)


def test_apf_controller_respects_bounds():
    task = ObstacleTask(n_obstacles=10)
    ctl = apf_controller(task, 1.0)
    s = task.initial_state()
    lo, hi = task.action_bounds(s)
    a = ctl(s, task.reset(np.random.default_rng(0)).refs, (lo, hi))
    assert np.all(a >= lo - 1e-12) and np.all(a <= hi + 1e-12)


def test_boids_moves_towards_prey():
    s = np.array([1.0, 0.0, 0.0, 0.0])
    a = boids_policy(s, {"prey_position": np.zeros(2), "prey_velocity": np.zeros(2)})
    assert a[0] < 0


@pytest.mark.parametrize("cls", [CargoTask, RendezvousTask])
def test_aerial_goal_states_zero_the_attractors(cls):
    from pearl.features import goal_state

    task = cls()
    g, resid = goal_state(task.prefs, task.n_state)
    assert resid < 1e-12
    assert task.in_goal(g, {})


def test_rendezvous_separation_accounts_for_cable_swing():
    task = RendezvousTask()
    s = np.zeros(16)
    s[6] = np.arcsin(0.1 / 0.62)
    assert task.load_separation(s) == pytest.approx(0.1)


def test_pendulum_schedules():
    task = PendulumTask(schedule="two-phase")
    assert task.phase(1.0)[0] is task.pole_prefs
    assert task.phase(6.0)[0] is task.slowdown_prefs
    steady = PendulumTask()
    assert steady.phase(6.0)[0] is steady.pole_prefs
    assert task.pole_offset(task.initial_state()) == pytest.approx(np.sin(np.deg2rad(23)))
    with pytest.raises(ValueError):
        PendulumTask(schedule="other")


def test_factory_knows_every_task():
    for name in TASKS:
        task = make_task(name)
        assert len(task.theta) == len(task.prefs)
        s0 = task.initial_state(np.random.default_rng(0))
        F = feature_matrix(s0, task.prefs, task.lookahead_refs(task.reset(np.random.default_rng(0)).refs))
        assert F.shape == (1, len(task.prefs)) and np.all(np.isfinite(F))
    with pytest.raises(ValueError):
        make_task("nope")
