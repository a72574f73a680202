import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ifpopt import graph as gr
from ifpopt.exceptions import DomainError, GainConditionError
from ifpopt.trigger import (CommState, TriggerMonitor, TriggerPolicy, commit_many,
                            commit_trigger, evaluate_triggers, neighbor_gaps,
                            on_link_appearance, should_trigger, trigger_threshold)


def reference_threshold(nu, beta, c, d, gap):
    return c / d * (0.5 - nu * beta * d) ** 2 * gap


def test_threshold_values():
    assert trigger_threshold(1.0, 0.2, 0.99, 1, 1.0) == pytest.approx(0.0891)
    assert trigger_threshold(1.0, 0.2, 0.99, 1, 0.0) == 0.0
    t = trigger_threshold(1.392, 0.1, 0.99, 1, 1.0)
    assert t == pytest.approx(0.1288, abs=1e-4)
    assert t == pytest.approx(reference_threshold(1.392, 0.1, 0.99, 1, 1.0))
    assert trigger_threshold(1.0, 0.2, 0.99, 0, 1.0) is None


def test_practical_variant_keeps_degree_out_of_margin():
    t = trigger_threshold(1.0, 0.1, 0.9, 2, 1.0, variant="practical")
    assert t == pytest.approx(0.9 / 2 * 0.4**2)
    with pytest.raises(GainConditionError):
        trigger_threshold(1.0, 0.3, 0.9, 2, 1.0)


def test_threshold_refuses_failed_gain():
    with pytest.raises(GainConditionError):
        trigger_threshold(1.0, 0.5, 0.99, 1, 1.0)


def test_should_trigger_boundaries():
    exact = TriggerPolicy()
    assert should_trigger(0.0891, 0.0891, exact)
    assert not should_trigger(0.0, 0.1, exact)
    assert should_trigger(0.0, 0.0, exact)
    assert not should_trigger(1.0, None, exact)
    floor = TriggerPolicy(zeta=1e-4, mode="practical")
    assert not should_trigger(1e-6, 1e-9, floor)
    assert should_trigger(2e-4, 1e-9, floor)
    assert should_trigger(0.0, 1.0, TriggerPolicy(mode="always"))


def test_policy_validation():
    with pytest.raises(DomainError):
        TriggerPolicy(c=1.0)
    with pytest.raises(DomainError):
        TriggerPolicy(mode="practical")
    with pytest.raises(DomainError):
        TriggerPolicy(mode="sometimes")
    assert TriggerPolicy(c=[0.5, 0.9]).c_for(2).tolist() == [0.5, 0.9]


def test_commit_trigger():
    s = CommState.initial(np.zeros((3, 1)))
    x = np.array([[1.0], [2.0], [3.0]])
    commit_trigger(s, 1, x[1])
    assert s.xhat[1, 0] == 2.0 and s.xhat[0, 0] == 0.0 and s.xhat[2, 0] == 0.0
    assert s.trigger_counts.tolist() == [0, 1, 0]
    commit_many(s, np.array([True, False, True]), x)
    assert np.array_equal(s.xhat, x)
    assert s.trigger_counts.tolist() == [1, 1, 1]


def test_link_appearance_is_not_an_event():
    x0 = np.arange(5.0)[:, None]
    s = CommState.initial(x0)
    before = (s.trigger_counts.copy(), s.xhat.copy(), s.version)
    on_link_appearance(s, 3)
    assert np.array_equal(s.trigger_counts, before[0])
    assert np.array_equal(s.xhat, before[1]) and s.version == before[2]
    # a receiver that just gained agent 3 reads the initial broadcast state
    assert s.xhat[3, 0] == 3.0
    with pytest.raises(DomainError):
        on_link_appearance(s, 7)


@settings(max_examples=200, deadline=None)
@given(arrays(float, (5, 2), elements=st.floats(-10, 10)))
def test_neighbor_gaps_match_direct_sum(xhat):
    A = gr.cycle([0, 2, 4, 1, 3]).adjacency + 0.5 * gr.cycle([0, 1, 2, 3, 4]).adjacency
    direct = [sum(A[i, j] * np.sum((xhat[j] - xhat[i]) ** 2) for j in range(5)) for i in range(5)]
    assert np.allclose(neighbor_gaps(xhat, A), direct, atol=1e-9 * (1 + np.max(direct)))


@settings(max_examples=200, deadline=None)
@given(arrays(float, (5, 1), elements=st.floats(-3, 3)),
       arrays(float, (5, 1), elements=st.floats(-3, 3)),
       st.floats(0.0, 0.45))
def test_vectorized_rule_matches_scalar(x, xhat, beta):
    g = gr.cycle([0, 1, 2, 3, 4])
    s = CommState(xhat.copy())
    nu = np.ones(5)
    policy = TriggerPolicy()
    fire, thr = evaluate_triggers(x, s, g, nu, beta, policy)
    gaps = neighbor_gaps(xhat, g.adjacency)
    for i in range(5):
        t = trigger_threshold(1.0, beta, 0.99, 1, gaps[i])
        assert thr[i] == pytest.approx(t, abs=1e-12)
        assert fire[i] == should_trigger(float(np.sum((x[i] - xhat[i]) ** 2)), t, policy)
    mon = TriggerMonitor(nu, beta, policy)
    assert np.array_equal(mon.check(x, s, g), fire)


def test_agent_without_in_neighbors_never_fires():
    A = np.zeros((3, 3))
    A[1, 0] = A[0, 1] = 1.0
    g = gr.WeightedDigraph(A)
    s = CommState.initial(np.zeros((3, 1)))
    x = np.ones((3, 1)) * 5
    fire, thr = evaluate_triggers(x, s, g, np.ones(3), 0.2, TriggerPolicy())
    assert not fire[2] and np.isnan(thr[2])
    assert not TriggerMonitor(np.ones(3), 0.2, TriggerPolicy()).check(x, s, g)[2]


def test_monitor_refreshes_on_commit():
    g = gr.cycle([0, 1])
    s = CommState.initial(np.array([[0.0], [1.0]]))
    mon = TriggerMonitor(np.ones(2), 0.2, TriggerPolicy())
    t0 = mon.thresholds(s, g).copy()
    commit_trigger(s, 1, np.array([0.0]))
    assert not np.array_equal(mon.thresholds(s, g), t0)
    assert np.all(mon.thresholds(s, g) == 0)
