"""Weighted digraphs and piecewise-constant switching schedules.

Adjacency convention: ``A[i, j] > 0`` means agent ``j`` sends to agent ``i``,
so row sums are in-degrees and column sums are out-degrees.
"""

from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components

from .exceptions import AssumptionViolation, DomainError

__all__ = [
    "WeightedDigraph",
    "GraphSchedule",
    "cycle",
    "degrees",
    "is_weight_balanced",
    "laplacian",
    "is_strongly_connected",
    "union",
    "check_ujsc",
    "graph_at",
    "max_in_degrees",
    "paper_schedule",
]

BALANCE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightedDigraph:
    adjacency: np.ndarray

    def __post_init__(self):
        A = np.array(self.adjacency, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DomainError(f"adjacency must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)) or np.any(A < 0):
            raise DomainError("adjacency weights must be finite and nonnegative")
        if np.any(np.diag(A) != 0):
            raise DomainError("adjacency diagonal must be zero")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)
        d_in = A.sum(axis=1)
        d_in.setflags(write=False)
        object.__setattr__(self, "in_degree", d_in)

    @property
    def n(self):
        return self.adjacency.shape[0]

    def in_neighbors(self, i):
        return np.flatnonzero(self.adjacency[i])

    def edges(self):
        """Set of ``(sender, receiver)`` pairs."""
        recv, send = np.nonzero(self.adjacency)
        return set(zip(send.tolist(), recv.tolist()))


@dataclass(frozen=True, eq=False)
class GraphSchedule:
    """Periodic sequence of modes, each held for ``dwell`` time units.

    ``dwell`` is seconds for continuous-time runs and steps for discrete-time
    runs. A scalar applies to every mode.
    """

    modes: tuple
    dwell: tuple

    def __init__(self, modes, dwell):
        modes = tuple(m if isinstance(m, WeightedDigraph) else WeightedDigraph(m) for m in modes)
        if not modes:
            raise DomainError("schedule needs at least one mode")
        if len({m.n for m in modes}) != 1:
            raise DomainError("all modes must have the same number of agents")
        dwell = np.broadcast_to(np.asarray(dwell, dtype=float), (len(modes),))
        if np.any(~np.isfinite(dwell)) or np.any(dwell <= 0):
            raise DomainError("dwell durations must be positive")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "dwell", tuple(float(d) for d in dwell))

    @property
    def n(self):
        return self.modes[0].n

    @property
    def period(self):
        return float(sum(self.dwell))


def cycle(order, n=None, weight=1.0):
    """Directed cycle visiting ``order`` (0-based) and returning to its start."""
    order = list(order)
    n = len(order) if n is None else n
    A = np.zeros((n, n))
    for src, dst in zip(order, order[1:] + order[:1]):
        A[dst, src] = weight
    return WeightedDigraph(A)


def degrees(g):
    """Return ``(in_degrees, out_degrees)``."""
    A = g.adjacency
    return A.sum(axis=1), A.sum(axis=0)


def is_weight_balanced(g, tol=BALANCE_TOL):
    d_in, d_out = degrees(g)
    return bool(np.all(np.abs(d_in - d_out) <= tol))


def laplacian(g):
    A = g.adjacency
    return np.diag(A.sum(axis=1)) - A


def is_strongly_connected(g):
    if g.n <= 1:
        return True
    n_comp, _ = connected_components(g.adjacency != 0, directed=True, connection="strong")
    return n_comp == 1


def union(graphs):
    graphs = list(graphs)
    return WeightedDigraph(sum(g.adjacency for g in graphs))


def check_ujsc(s):
    """Smallest number of consecutive modes whose union is always strongly connected.

    Every phase offset of the periodic schedule is scanned. Returns ``None``
    when even the union over a whole period is not strongly connected.

    Raises
    ------
    AssumptionViolation
        If some mode is not weight-balanced.
    """
    for k, mode in enumerate(s.modes):
        if not is_weight_balanced(mode):
            raise AssumptionViolation(f"mode {k} is not weight-balanced")
    p = len(s.modes)
    for window in range(1, p + 1):
        if all(
            is_strongly_connected(union(s.modes[(start + j) % p] for j in range(window)))
            for start in range(p)
        ):
            return window
    return None


def mode_index(s, t):
    """Index of the mode active at ``t``; switches are right-continuous."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    period = s.period
    # snap to the nearest boundary so that t = k*h hits switches exactly
    phase = t % period
    eps = 1e-9 * max(1.0, period)
    if period - phase <= eps:
        phase = 0.0
    acc = 0.0
    for k, d in enumerate(s.dwell):
        acc += d
        if phase < acc - eps:
            return k
    return len(s.dwell) - 1


def graph_at(s, t):
    return s.modes[mode_index(s, t)]


def max_in_degrees(s):
    """Per-agent supremum of the in-degree over all modes."""
    return np.max([degrees(m)[0] for m in s.modes], axis=0)


def paper_schedule(dwell=2.0):
    """Default five-agent, two-mode schedule.

    Mode A is the cycle 1->2->3->4->5->1 and mode B is 1->3->5->2->4->1,
    both with unit weights. Every agent has in-degree 1 in both modes.
    """
    return GraphSchedule([cycle([0, 1, 2, 3, 4]), cycle([0, 2, 4, 1, 3])], dwell)
