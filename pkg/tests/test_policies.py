import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pearl.dynamics import DoubleIntegrator, GaussianDisturbance
from pearl.features import ATTRACTOR, REPELLER, Preference, StateLayout, values
from pearl.policies import (AxialQuadratic, PolicyConfig, QObjective, RankDeficientFit, axial_maxima,
                            axis_maximum, combine_axial, das, das_batch, fit_axial_quadratic, hoot, lsapa,
                            plan_trajectory)
from pearl.tasks import CargoTask, PursuitTask

LAY = StateLayout((("r", 2),))
DYN = DoubleIntegrator(2, 0.1)
PREFS = [Preference(ATTRACTOR, LAY.select(["r"]), point=np.array([1.0, -0.5])),
         Preference(ATTRACTOR, LAY.select(["r"], "velocity"))]
THETA = np.array([-1.0, -0.3])
state = arrays(float, 4, elements=st.floats(-3, 3, allow_nan=False))


@settings(max_examples=60, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-5, 5), st.integers(3, 30))
def test_quadratic_fit_recovers_coefficients(p2, p1, p0, n):
    u = np.linspace(-3, 3, n)
    c = fit_axial_quadratic(u, p2 * u**2 + p1 * u + p0)
    np.testing.assert_allclose([c.p2, c.p1, c.p0], [p2, p1, p0], atol=1e-8)


def test_quadratic_fit_rank_checks():
    with pytest.raises(RankDeficientFit):
        fit_axial_quadratic([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    with pytest.raises(RankDeficientFit):
        fit_axial_quadratic([0.0, 1.0], [0.0, 1.0])


@settings(max_examples=80, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-4, 0), st.floats(0.01, 4))
def test_axis_maximum_matches_dense_grid(p2, p1, lo, width):
    hi = lo + width
    c = AxialQuadratic(p2, p1, 0.0)
    grid = np.linspace(lo, hi, 20001)
    best = grid[np.argmax(c(grid))]
    assert c(axis_maximum(c, lo, hi)) >= c(best) - 1e-9


@settings(max_examples=40, deadline=None)
@given(state)
def test_das_on_single_axis_is_the_exact_maximum(s2):
    dyn = DoubleIntegrator(1, 0.1)
    lay = StateLayout((("r", 1),))
    prefs = [Preference(ATTRACTOR, lay.select(["r"]), point=np.array([0.7])),
             Preference(ATTRACTOR, lay.select(["r"], "velocity"))]
    s = s2[:2]
    a = das(s, dyn, THETA, prefs)
    grid = np.linspace(-3, 3, 60001)[:, None]
    q_grid = values(dyn.step_batch(np.broadcast_to(s, (len(grid), 2)), grid), THETA, prefs)
    assert float(QObjective(s, dyn, THETA, prefs)(a[None])[0]) >= q_grid.max() - 1e-9


@settings(max_examples=40, deadline=None)
@given(state)
def test_batch_das_agrees_with_single_state_das(s):
    a_single = das(s, DYN, THETA, PREFS)
    a_batch, _ = das_batch(s[None], DYN, THETA, PREFS, -3.0, 3.0)
    np.testing.assert_allclose(a_batch[0], a_single, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(state, st.integers(0, 2**31))
def test_lsapa_without_disturbance_agrees_with_das(s, seed):
    a = lsapa(s, DYN, THETA, PREFS, None, rng=np.random.default_rng(seed))
    np.testing.assert_allclose(a, das(s, DYN, THETA, PREFS), atol=1e-6)


@settings(max_examples=40, deadline=None)
@given(state, arrays(float, 2, elements=st.floats(-3, 3)), st.integers(0, 2**31))
def test_combination_dominates_both_candidates(s, u_hat, seed):
    obj = QObjective(s, DYN, THETA, PREFS)
    res = combine_axial(u_hat, obj, -3.0, 3.0)
    assert res.q >= res.q_sum and res.q >= res.q_convex
    # independent re-evaluation, up to round-off from a different batch layout
    q_n = obj(u_hat[None])[0]
    q_c = obj(np.clip(u_hat / 2, -3, 3)[None])[0]
    tol = 1e-12 * max(1.0, abs(res.q))
    assert res.q >= q_n - tol and res.q >= q_c - tol


def test_lsapa_compensates_a_known_bias():
    # for quadratic values E[Q(s, a + xi)] peaks at the undisturbed optimum minus the mean
    s = np.array([0.2, 0.1, 0.0, 0.0])
    dist = GaussianDisturbance(np.array([1.0, -0.5]), np.array([0.3, 0.3]))
    lay = StateLayout((("r", 1),))
    dyn = DoubleIntegrator(1, 0.1)
    prefs = [Preference(ATTRACTOR, lay.select(["r"]), point=np.array([0.5])),
             Preference(ATTRACTOR, lay.select(["r"], "velocity"))]
    d1 = GaussianDisturbance(np.array([1.0]), np.array([0.3]))
    clean = das(s[:2], dyn, THETA, prefs)
    acts = [lsapa(s[:2], dyn, THETA, prefs, d1, PolicyConfig("lsapa", samples_per_axis=400),
                  np.random.default_rng(k)) for k in range(20)]
    assert np.mean(acts) == pytest.approx(clean[0] - 1.0, abs=0.1)
    assert dist.mean.size == 2


def test_hoot_is_at_least_as_good_as_its_first_grid():
    s = np.array([0.3, -0.2, 0.1, 0.0])
    cfg = PolicyConfig("hoot-grid", hoot_levels=3, hoot_branching=10)
    a = hoot(s, DYN, THETA, PREFS, cfg)
    obj = QObjective(s, DYN, THETA, PREFS)
    c = -3 + 6 * (np.arange(10) + 0.5) / 10
    grid = np.array(np.meshgrid(c, c)).reshape(2, -1).T
    assert obj(a[None])[0] >= obj(grid).max() - 1e-12
    a_das = das(s, DYN, THETA, PREFS)
    assert obj(a[None])[0] >= obj(a_das[None])[0] - 1e-3


def test_hoot_refuses_huge_grids():
    dyn = DoubleIntegrator(7, 0.1)
    lay = StateLayout(tuple((f"j{i}", 1) for i in range(7)))
    prefs = [Preference(ATTRACTOR, lay.select(lay.names))]
    with pytest.raises(ValueError, match="too large"):
        hoot(np.zeros(14), dyn, [-1.0], prefs)


def test_policy_config_validation():
    assert PolicyConfig(method="hoot").method == "hoot-grid"
    with pytest.raises(ValueError):
        PolicyConfig(method="random")
    with pytest.raises(ValueError):
        PolicyConfig(samples_per_axis=2)


def test_actions_respect_bounds():
    s = np.array([50.0, -50.0, 0.0, 0.0])
    for a in (das(s, DYN, THETA, PREFS), lsapa(s, DYN, THETA, PREFS, None, rng=np.random.default_rng(0)),
              hoot(s, DYN, THETA, PREFS)):
        assert np.all(np.abs(a) <= 3.0 + 1e-12)


def test_repeller_pushes_away():
    prefs = [Preference(REPELLER, LAY.select(["r"]), point=np.array([0.0, 0.0]))]
    a = das(np.array([0.1, 0.0, 0.0, 0.0]), DYN, [-1.0], prefs)
    assert a[0] > 0


def test_trajectory_record_shape_and_timing():
    task = CargoTask()
    traj = plan_trajectory(task.initial_state(np.random.default_rng(0)), task, horizon=0.5,
                           rng=np.random.default_rng(0), stop_at_goal=False)
    assert len(traj) == 25
    np.testing.assert_allclose(np.diff(traj.t), 0.02)
    assert traj.states.shape == (25, 10) and traj.actions.shape == (25, 3) and traj.xi.shape == (25, 3)
    assert traj.status == "horizon"


def test_horizon_zero_gives_empty_trajectory():
    task = CargoTask()
    traj = plan_trajectory(np.zeros(10), task, horizon=0.0, rng=np.random.default_rng(0))
    assert len(traj) == 0 and traj.status == "horizon"
    with pytest.raises(ValueError):
        plan_trajectory(np.zeros(10), task, horizon=-1.0)


def test_same_seed_same_trajectory():
    task = PursuitTask(n_agents=4)
    dist = GaussianDisturbance.isotropic(8, 0.5, 0.5)
    cfg = PolicyConfig("lsapa", samples_per_axis=20)
    runs = [plan_trajectory(task.initial_state(np.random.default_rng(1)), task, cfg=cfg, dist=dist,
                            horizon=0.4, rng=np.random.default_rng(7)) for _ in range(2)]
    np.testing.assert_array_equal(runs[0].states, runs[1].states)
    np.testing.assert_array_equal(runs[0].xi, runs[1].xi)
