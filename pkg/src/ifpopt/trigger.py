"""Event-triggered broadcast rule and broadcast-state bookkeeping.

An agent ``i`` keeps broadcasting its last sampled state ``xhat_i``. It
samples again once its error ``e_i = x_i - xhat_i`` satisfies

    |e_i|^2 >= (c_i / d_i) * (1/2 - |nu_i| * beta * d_i)^2 * sum_j a_ij |xhat_j - xhat_i|^2

where ``d_i`` is its current in-degree. Agents with no in-neighbors never
sample. The ``practical`` mode uses ``(1/2 - beta*|nu_i|)^2`` instead (no
in-degree inside the square) together with a floor ``zeta`` on the error.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, GainConditionError

__all__ = [
    "TriggerPolicy",
    "CommState",
    "trigger_threshold",
    "should_trigger",
    "commit_trigger",
    "commit_many",
    "TriggerMonitor",
    "on_link_appearance",
    "neighbor_gaps",
    "evaluate_triggers",
]

MODES = ("exact", "practical", "always")


@dataclass(frozen=True)
class TriggerPolicy:
    """Trigger constants.

    ``mode="always"`` broadcasts at every check (the diffusive baseline).
    """

    c: object = 0.99
    zeta: float = 0.0
    mode: str = "exact"

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        c = np.asarray(self.c, dtype=float)
        if np.any(~(c > 0)) or np.any(~(c < 1)):
            raise DomainError("trigger constants c must lie in (0, 1)")
        if not self.zeta >= 0:
            raise DomainError("zeta must be nonnegative")
        if self.mode == "practical" and self.zeta <= 0:
            raise DomainError("practical mode needs zeta > 0")

    def c_for(self, n):
        return np.broadcast_to(np.asarray(self.c, dtype=float), (n,)).copy()


@dataclass
class CommState:
    """Last broadcast states and per-agent event tallies.

    ``eligible_counts`` counts the checks at which an agent had in-neighbors.
    """

    xhat: np.ndarray
    trigger_counts: np.ndarray = None
    eligible_counts: np.ndarray = None
    version: int = 0

    def __post_init__(self):
        self.xhat = np.array(self.xhat, dtype=float, ndmin=2)
        n = self.xhat.shape[0]
        if self.trigger_counts is None:
            self.trigger_counts = np.zeros(n, dtype=np.int64)
        if self.eligible_counts is None:
            self.eligible_counts = np.zeros(n, dtype=np.int64)

    @classmethod
    def initial(cls, x0):
        return cls(np.array(x0, dtype=float, copy=True))


def trigger_threshold(nu_mag, beta, c, d_in, neighbor_gap, variant="exact"):
    """Right-hand side of the trigger inequality for one agent.

    Returns ``None`` when ``d_in == 0``: such an agent never triggers.

    Raises
    ------
    GainConditionError
        If the factor ``1/2 - nu_mag*beta*d_in`` (or ``1/2 - beta*nu_mag``
        for the practical variant) is not positive.
    """
    if d_in <= 0:
        return None
    if variant == "practical":
        margin = 0.5 - beta * nu_mag
    else:
        margin = 0.5 - nu_mag * beta * d_in
    if margin <= 0:
        raise GainConditionError(
            f"gain condition fails: |nu|*beta*d_in = {nu_mag * beta * d_in:.4g} >= 1/2")
    return float(c / d_in * margin**2 * neighbor_gap)


def should_trigger(e_norm_sq, threshold, policy):
    if threshold is None:
        return False
    if policy.mode == "always":
        return True
    if policy.mode == "practical":
        return bool(e_norm_sq >= max(threshold, policy.zeta))
    return bool(e_norm_sq >= threshold)


def commit_trigger(state, agent, x):
    """Broadcast ``x`` for ``agent``: ``xhat`` is overwritten and the tally bumped."""
    state.xhat[agent] = np.asarray(x, dtype=float)
    state.trigger_counts[agent] += 1
    state.version += 1
    return state


def commit_many(state, fire, x):
    """Simultaneous commit for every agent flagged in ``fire``."""
    if fire.any():
        state.xhat[fire] = x[fire]
        state.trigger_counts += fire
        state.version += 1
    return state


def on_link_appearance(state, sender):
    """A new edge out of ``sender`` appeared.

    The receiver is handed the sender's last broadcast state. That hand-off
    is not an event, so neither ``xhat`` nor the tallies change; with a
    single global ``xhat`` table the receiver reads it directly.
    """
    if not 0 <= sender < state.xhat.shape[0]:
        raise DomainError(f"no agent {sender}")
    return state


def neighbor_gaps(xhat, adjacency):
    """``sum_j a_ij |xhat_j - xhat_i|^2`` for every agent ``i``."""
    sq = np.sum(xhat * xhat, axis=1)
    d_in = adjacency.sum(axis=1)
    cross = np.sum(xhat * (adjacency @ xhat), axis=1)
    return np.maximum(adjacency @ sq - 2.0 * cross + d_in * sq, 0.0)


def evaluate_triggers(x, state, graph, nu_mags, beta, policy, strict=True):
    """Decide which agents fire at this check, without committing.

    Vectorized form of :func:`trigger_threshold` and :func:`should_trigger`.
    With ``strict=False`` a violated gain condition is tolerated and the
    squared margin is used as is (demonstration runs only).

    Returns ``(fire, thresholds)``; ``thresholds[i]`` is ``nan`` for agents
    with no in-neighbors, which never fire.
    """
    A = graph.adjacency
    d_in = graph.in_degree
    eligible = d_in > 0
    if policy.mode == "practical":
        margin = 0.5 - beta * nu_mags
    else:
        margin = 0.5 - nu_mags * beta * d_in
    if strict and np.any(eligible & (margin <= 0)):
        raise GainConditionError("gain condition fails for an agent with in-neighbors")
    gaps = neighbor_gaps(state.xhat, A)
    safe_d = np.where(eligible, d_in, 1.0)
    thresholds = np.where(eligible, np.asarray(policy.c) / safe_d * margin**2 * gaps, np.nan)
    if policy.mode == "always":
        return eligible.copy(), thresholds
    e = x - state.xhat
    e2 = np.sum(e * e, axis=1)
    bound = thresholds
    if policy.mode == "practical":
        bound = np.maximum(thresholds, policy.zeta)
    fire = eligible & (e2 >= np.where(eligible, bound, np.inf))
    return fire, thresholds


class TriggerMonitor:
    """Trigger checks for one run, with per-mode constants cached.

    The threshold only depends on the graph and on ``xhat``, so it is
    recomputed when either changes (tracked via ``CommState.version``).
    """

    def __init__(self, nu_mags, beta, policy, strict=True):
        self.nu_mags = np.asarray(nu_mags, dtype=float)
        self.beta = beta
        self.policy = policy
        self.strict = strict
        self._coef = {}
        self._key = None
        self._thr = None

    def coefficients(self, graph):
        """``c_i / d_i * margin_i**2`` per agent, ``nan`` where ``d_i = 0``."""
        key = id(graph)
        if key not in self._coef:
            d_in = graph.in_degree
            eligible = d_in > 0
            if self.policy.mode == "practical":
                margin = 0.5 - self.beta * self.nu_mags
            else:
                margin = 0.5 - self.nu_mags * self.beta * d_in
            if self.strict and np.any(eligible & (margin <= 0)):
                raise GainConditionError("gain condition fails for an agent with in-neighbors")
            c = self.policy.c_for(len(d_in))
            safe_d = np.where(eligible, d_in, 1.0)
            coef = np.where(eligible, c / safe_d * margin**2, np.nan)
            self._coef[key] = (graph, coef)
        return self._coef[key][1]

    def thresholds(self, state, graph):
        key = (id(graph), state.version)
        if key != self._key:
            # an infinite index (forced runs past the stepsize bound) gives inf * 0
            with np.errstate(invalid="ignore"):
                thr = self.coefficients(graph) * neighbor_gaps(state.xhat, graph.adjacency)
            if self.policy.mode == "practical":
                thr = np.where(np.isnan(thr), np.nan, np.maximum(thr, self.policy.zeta))
            self._key, self._thr = key, thr
        return self._thr

    def check(self, x, state, graph):
        """Boolean mask of agents that fire; agents without in-neighbors never do."""
        if self.policy.mode == "always":
            return graph.in_degree > 0
        thr = self.thresholds(state, graph)
        e = x - state.xhat
        # comparisons against nan are False, which covers d_in = 0
        return (e * e).sum(axis=1) >= thr
