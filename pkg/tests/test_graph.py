from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from ifpopt import graph as gr
from ifpopt.exceptions import AssumptionViolation, DomainError


def reachable(A, s):
    """Plain BFS over ``j -> i`` edges (``A[i, j] > 0``)."""
    seen = {s}
    q = deque([s])
    while q:
        j = q.popleft()
        for i in np.flatnonzero(A[:, j] > 0):
            if i not in seen:
                seen.add(int(i))
                q.append(int(i))
    return seen


def bfs_strong(A):
    n = A.shape[0]
    return all(len(reachable(A, s)) == n for s in range(n))


def digraphs(max_n=7):
    return st.integers(1, max_n).flatmap(
        lambda n: arrays(float, (n, n), elements=st.sampled_from([0.0, 0.0, 1.0, 0.5, 2.0])))


def _clean(A):
    A = A.copy()
    np.fill_diagonal(A, 0.0)
    return gr.WeightedDigraph(A)


def test_cycle_degrees():
    g = gr.cycle([0, 1, 2, 3, 4])
    d_in, d_out = gr.degrees(g)
    assert np.all(d_in == 1) and np.all(d_out == 1)
    assert gr.is_weight_balanced(g)
    assert gr.is_strongly_connected(g)


def test_empty_and_star():
    d_in, d_out = gr.degrees(gr.WeightedDigraph(np.zeros((4, 4))))
    assert not d_in.any() and not d_out.any()
    A = np.zeros((3, 3))
    A[1, 0] = A[2, 0] = 1.0  # 0 sends to 1 and 2
    d_in, d_out = gr.degrees(gr.WeightedDigraph(A))
    assert d_out[0] == 2 and d_in[1] == 1 and d_in[2] == 1


def test_balance_examples():
    A = np.zeros((2, 2))
    A[1, 0] = 1
    assert not gr.is_weight_balanced(gr.WeightedDigraph(A))
    S = np.array([[0, 2, 1], [2, 0, 0], [1, 0, 0]], float)
    assert gr.is_weight_balanced(gr.WeightedDigraph(S))


def test_two_cycle_laplacian():
    L = gr.laplacian(gr.cycle([0, 1]))
    assert np.array_equal(L, [[1, -1], [-1, 1]])


def test_paper_modes_balanced(schedule):
    for m in schedule.modes:
        L = gr.laplacian(m)
        assert np.all(L.sum(axis=0) == 0)
        assert gr.is_weight_balanced(m)


def test_disconnected_pair():
    assert not gr.is_strongly_connected(gr.WeightedDigraph(np.zeros((2, 2))))


def test_union_of_modes(schedule):
    u = gr.union(schedule.modes)
    assert gr.is_strongly_connected(u) and bfs_strong(u.adjacency)


@settings(max_examples=300, deadline=None)
@given(digraphs())
def test_laplacian_rows_and_balance(A):
    g = _clean(A)
    L = gr.laplacian(g)
    assert np.all(L @ np.ones(g.n) == 0)
    assert gr.is_weight_balanced(g) == (np.linalg.norm(np.ones(g.n) @ L) <= 1e-12)


@settings(max_examples=300, deadline=None)
@given(digraphs())
def test_strong_connectivity_matches_bfs(A):
    g = _clean(A)
    assert gr.is_strongly_connected(g) == bfs_strong(g.adjacency)


def test_ujsc_windows(schedule):
    assert gr.check_ujsc(gr.GraphSchedule([gr.cycle(range(5))], 1.0)) == 1
    assert gr.check_ujsc(schedule) == 1


def test_ujsc_needs_both_halves():
    # 0 <-> 1 in one mode, 1 <-> 2 in the other: only the union is connected
    a = np.zeros((3, 3))
    a[0, 1] = a[1, 0] = 1
    b = np.zeros((3, 3))
    b[1, 2] = b[2, 1] = 1
    assert gr.check_ujsc(gr.GraphSchedule([a, b], 1.0)) == 2


def test_ujsc_fails_when_agent_isolated():
    A = gr.cycle([0, 1, 2, 3]).adjacency
    full = np.zeros((5, 5))
    full[:4, :4] = A
    s = gr.GraphSchedule([full, np.zeros((5, 5))], 1.0)
    assert gr.check_ujsc(s) is None


def test_ujsc_rejects_unbalanced():
    a = np.zeros((2, 2))
    a[1, 0] = 1
    b = np.zeros((2, 2))
    b[0, 1] = 1
    with pytest.raises(AssumptionViolation):
        gr.check_ujsc(gr.GraphSchedule([a, b], 1.0))


def test_switching_convention(schedule):
    A, B = schedule.modes
    assert gr.graph_at(schedule, 1.0) is A
    assert gr.graph_at(schedule, 2.0) is B
    assert gr.graph_at(schedule, 3.999) is B
    assert gr.graph_at(schedule, 4.0) is A
    # accumulated float steps land on the right side of a switch
    assert gr.graph_at(schedule, 2000 * 1e-3) is B


def test_dt_switching(dt_schedule):
    A, B = dt_schedule.modes
    assert [gr.graph_at(dt_schedule, k) is A for k in (0, 19, 20, 39, 40)] == \
        [True, True, False, False, True]


def test_bad_inputs():
    with pytest.raises(DomainError):
        gr.WeightedDigraph(np.ones((2, 3)))
    with pytest.raises(DomainError):
        gr.WeightedDigraph(np.eye(2))
    with pytest.raises(DomainError):
        gr.WeightedDigraph([[0, -1], [1, 0]])
    with pytest.raises(DomainError):
        gr.GraphSchedule([gr.cycle([0, 1])], 0.0)
    with pytest.raises(DomainError):
        gr.graph_at(gr.paper_schedule(), -1.0)


def test_adjacency_read_only():
    g = gr.cycle([0, 1, 2])
    with pytest.raises(ValueError):
        g.adjacency[0, 1] = 5.0
