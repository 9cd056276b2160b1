import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from pearl.features import (ATTRACTOR, REPELLER, Preference, StateLayout, attractor_feature,
                            check_well_formed, feature_matrix, goal_state, repeller_feature, value)

coords = st.floats(-20, 20, allow_nan=False)
LAYOUT = StateLayout((("a", 2), ("b", 2), ("c", 2)))


def test_layout_orders_positions_before_velocities():
    assert LAYOUT.n_state == 12
    np.testing.assert_array_equal(LAYOUT.coords("b"), [2, 3])
    np.testing.assert_array_equal(LAYOUT.coords("b", "velocity"), [8, 9])
    assert LAYOUT.column_names()[:3] == ["a_x", "a_y", "b_x"]
    assert LAYOUT.column_names()[6] == "a_vx"


def test_missing_axis_reads_zero():
    lay = StateLayout((("quad", 3), ("ground", 2)))
    p = Preference(ATTRACTOR, lay.select(["quad"], axes="z"), target="relation",
                   other=lay.select(["ground"], axes="z"), offset=[0.6])
    s = np.zeros(lay.n_state)
    s[2] = 1.0
    assert attractor_feature(s, p) == pytest.approx(0.16)


def test_attractor_point_by_hand():
    p = Preference(ATTRACTOR, LAYOUT.select(["a", "b"]), point=np.array([1.0, 0.0]))
    s = np.zeros(12)
    s[:4] = [2, 2, 1, -1]
    # (1 + 4) + (0 + 1)
    assert attractor_feature(s, p) == pytest.approx(6.0)


def test_repeller_point_by_hand():
    p = Preference(REPELLER, LAYOUT.select(["a"]), point=np.array([0.0, 0.0]), beta=0.5)
    s = np.zeros(12)
    s[:2] = [1.0, 1.0]
    assert repeller_feature(s, p) == pytest.approx(1 / 2.5)


def test_pairwise_shared_matches_brute_force():
    p = Preference(REPELLER, LAYOUT.select(["a", "b", "c"]), target="pairwise", beta=1.0)
    rng = np.random.default_rng(1)
    s = rng.normal(size=12)
    pos = s[:6].reshape(3, 2)
    # 2n sum |p_i - mean|^2 equals the sum over ordered pairs of |p_i - p_j|^2
    pair_sum = sum(np.sum((pos[i] - pos[j]) ** 2) for i in range(3) for j in range(3))
    assert repeller_feature(s, p) == pytest.approx(1 / (1 + pair_sum))


def test_nearest_uses_closest_reference_point():
    p = Preference(REPELLER, LAYOUT.select(["a"]), target="nearest", reference="obs", beta=0.01)
    refs = {"obs": np.array([[3.0, 0.0], [0.0, 1.0], [10.0, 10.0]])}
    s = np.zeros(12)
    assert repeller_feature(s, p, refs) == pytest.approx(1 / 1.01)


def test_reference_target_reads_refs():
    p = Preference(ATTRACTOR, LAYOUT.select(["a"]), target="reference", reference="prey")
    s = np.zeros(12)
    assert attractor_feature(s, p, {"prey": np.array([3.0, 4.0])}) == pytest.approx(25.0)


@settings(max_examples=60, deadline=None)
@given(arrays(float, 12, elements=coords), st.floats(0.01, 5))
def test_feature_ranges(s, beta):
    att = Preference(ATTRACTOR, LAYOUT.select(["a", "c"]), point=np.array([1.0, -1.0]))
    rep = Preference(REPELLER, LAYOUT.select(["a", "b", "c"]), target="pairwise", beta=beta)
    assert attractor_feature(s, att) >= 0
    f = repeller_feature(s, rep)
    assert 0 < f <= 1 / beta + 1e-12


@settings(max_examples=60, deadline=None)
@given(arrays(float, (5, 12), elements=coords))
def test_batch_matches_single(S):
    prefs = [Preference(ATTRACTOR, LAYOUT.select(["b"], "velocity")),
             Preference(REPELLER, LAYOUT.select(["a", "b"]), target="pairwise", variant="per_agent")]
    F = feature_matrix(S, prefs)
    for k in range(5):
        np.testing.assert_allclose(F[k], [attractor_feature(S[k], prefs[0]), repeller_feature(S[k], prefs[1])])


@settings(max_examples=40, deadline=None)
@given(arrays(float, 12, elements=coords), st.floats(-3, 3), st.floats(-3, 3))
def test_value_is_linear_in_weights(s, w1, w2):
    prefs = [Preference(ATTRACTOR, LAYOUT.select(["a"])), Preference(REPELLER, LAYOUT.select(["b"]))]
    v = value(s, [w1, w2], prefs)
    assert v == pytest.approx(w1 * value(s, [1, 0], prefs) + w2 * value(s, [0, 1], prefs), abs=1e-9)


def test_malformed_preferences_rejected():
    with pytest.raises(ValueError, match="at least one agent"):
        LAYOUT.select([])
    with pytest.raises(ValueError):
        Preference("sideways", LAYOUT.select(["a"]))
    with pytest.raises(ValueError):
        Preference(ATTRACTOR, LAYOUT.select(["a"]), point=np.zeros(3))
    with pytest.raises(ValueError):
        Preference(ATTRACTOR, LAYOUT.select(["a"]), target="reference")
    with pytest.raises(ValueError):
        attractor_feature(np.zeros(3), Preference(ATTRACTOR, LAYOUT.select(["c"])))


def test_goal_state_zeroes_attractors():
    prefs = [Preference(ATTRACTOR, LAYOUT.select(["a"]), point=np.array([1.0, 2.0])),
             Preference(ATTRACTOR, LAYOUT.select(["b"]), target="relation", other=LAYOUT.select(["a"]),
                        offset=[0.5, 0.0])]
    g, resid = goal_state(prefs, 12)
    assert resid < 1e-12
    np.testing.assert_allclose(feature_matrix(g, prefs), 0, atol=1e-20)


def test_well_formedness_detects_conflicts_and_occlusion():
    a1 = Preference(ATTRACTOR, LAYOUT.select(["a"]), point=np.array([1.0, 0.0]))
    a2 = Preference(ATTRACTOR, LAYOUT.select(["a"]), point=np.array([-1.0, 0.0]))
    with pytest.raises(ValueError, match="intersect"):
        check_well_formed([a1, a2], 12)
    rep = Preference(REPELLER, LAYOUT.select(["a"]), point=np.array([1.0, 0.0]))
    with pytest.raises(ValueError, match="occluded"):
        check_well_formed([a1, Preference(ATTRACTOR, LAYOUT.select(["a", "b", "c"], "velocity")),
                           Preference(ATTRACTOR, LAYOUT.select(["b", "c"])), rep], 12)
    g = check_well_formed([Preference(ATTRACTOR, LAYOUT.select(["b"])), rep], 12)
    assert np.sum((g[:2] - [1.0, 0.0]) ** 2) > 1e-9
