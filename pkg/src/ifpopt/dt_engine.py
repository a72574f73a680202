"""Forward-Euler discrete-time algorithm with event-triggered coupling.

    x_i(k+1)      = x_i(k) - delta * (alpha * grad f_i(x_i(k)) + lambda_i(k))
    lambda_i(k+1) = lambda_i(k) - delta * u_i(k)

Within step ``k`` the trigger rule is evaluated for every agent first, all
firing agents commit together, and only then is ``u(k)`` formed from the
updated broadcast states.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from . import graph as gr
from .ct_engine import (StorageEvaluator, _as_states, _gradients, _validate_run,
                        couplings)
from .exceptions import DivergenceError, DomainError, GainConditionError, StepsizeTooLarge
from .objective import solve_centralized_optimum
from .passivity import gain_condition, ifp_index_dt, ifp_index_dt_robust, max_stepsize
from .trace import SimulationTrace
from .trigger import CommState, TriggerMonitor, TriggerPolicy, commit_many

__all__ = ["DtConfig", "DtStep", "dt_indices", "dt_step", "dt_storage_value",
           "run_dt", "one_step_dissipation"]

INDEX_RULES = ("paper", "robust")


@dataclass
class DtConfig:
    """Discrete-time run parameters.

    ``index_rule`` picks the IFP index used in the trigger threshold and in
    the gain check: ``"paper"`` is the closed-form worst-case index,
    ``"robust"`` the curvature-sweep index of
    :func:`~ifpopt.passivity.ifp_index_dt_robust`.
    """

    alpha: float
    beta: float
    delta: float
    x0: np.ndarray
    k_final: int = 2000
    lambda0: Optional[np.ndarray] = None
    force: bool = False
    index_rule: str = "paper"

    def __post_init__(self):
        self.x0 = _as_states(self.x0)
        self.lambda0 = np.zeros_like(self.x0) if self.lambda0 is None else _as_states(self.lambda0)
        if self.lambda0.shape != self.x0.shape:
            raise DomainError("lambda0 and x0 shapes differ")
        if np.linalg.norm(self.lambda0.sum(axis=0)) > 1e-12:
            raise DomainError("initial multipliers must sum to zero")
        if not (self.alpha > 0 and self.delta > 0):
            raise DomainError("alpha and delta must be positive")
        if not self.beta >= 0:
            raise DomainError("beta must be nonnegative")
        if int(self.k_final) < 0:
            raise DomainError("k_final must be nonnegative")
        if self.index_rule not in INDEX_RULES:
            raise DomainError(f"index_rule must be one of {INDEX_RULES}")


class DtStep(NamedTuple):
    x: np.ndarray
    lam: np.ndarray
    fired: np.ndarray
    z: np.ndarray
    u: np.ndarray
    grad: np.ndarray


def dt_indices(specs, alpha, delta, rule="paper", force=False):
    """Per-agent ``|nu~_i|``; checks the stepsize bound unless ``force``.

    When forced past the bound, agents whose index is undefined get ``inf``.
    """
    bound = min(max_stepsize(alpha, s.mu, s.lip) for s in specs)
    if delta >= bound and not force:
        raise StepsizeTooLarge(f"delta={delta:g} must be below {bound:.4g}")
    fn = ifp_index_dt if rule == "paper" else ifp_index_dt_robust
    out = []
    for s in specs:
        try:
            out.append(abs(fn(alpha, delta, s.mu, s.lip)))
        except StepsizeTooLarge:
            out.append(np.inf)
    return np.array(out)


def dt_step(x, lam, comm, graph, specs, config, policy, monitor):
    """Advance every agent by one step, mutating ``comm``.

    Returns a :class:`DtStep` with the new ``x`` and ``lambda``, the agents
    that broadcast at this step, the ``z = alpha*grad f(x) + lambda`` and
    ``u`` used for the update, and the gradients at the old ``x``.
    """
    if policy.mode == "always":
        fired = graph.in_degree > 0
        comm.xhat[:] = x
        comm.trigger_counts += fired
        comm.version += 1
    else:
        fired = monitor.check(x, comm, graph)
        commit_many(comm, fired, x)
    u = couplings(comm.xhat, graph.adjacency, config.beta)
    grad = _gradients(specs, x)
    z = config.alpha * grad + lam
    x_new = x - config.delta * z
    lam_new = lam - config.delta * u
    return DtStep(x_new, lam_new, fired, z, u, grad)


def dt_storage_value(state, spec, alpha, delta, opt):
    """Continuous-time storage scaled by ``1/delta`` (``z`` plays the role of the velocity)."""
    from .ct_engine import storage_value
    if not delta > 0:
        raise DomainError("delta must be positive")
    return storage_value(state, spec, alpha, opt) / delta


def one_step_dissipation(spec, alpha, delta, opt, x, lam, u):
    """Storage increase over one step and the IFP supply terms.

    Returns ``(dV, dx_dot_u, u_sq)`` so that the inequality reads
    ``dV <= dx_dot_u + |nu| * u_sq``. Vectorized over leading axes of
    ``x``, ``lam`` and ``u`` (scalar decision variable).
    """
    x = np.asarray(x, dtype=float)
    lam = np.asarray(lam, dtype=float)
    u = np.asarray(u, dtype=float)
    xs = opt.x_star[0]
    g_star = float(spec.gradient(np.array([xs]))[0])
    f_star = spec.value(np.array([xs]))
    lam_star = -alpha * g_star
    grad = np.vectorize(lambda v: float(spec.gradient(np.array([v]))[0]))
    val = np.vectorize(lambda v: spec.value(np.array([v])))

    def V(xx, ll):
        z = alpha * grad(xx) + ll
        dx = xx - xs
        return (z * z / (alpha * spec.mu) - dx * (ll - lam_star) + alpha * g_star * dx
                + alpha * (f_star - val(xx))) / delta

    z = alpha * grad(x) + lam
    x1 = x - delta * z
    l1 = lam - delta * u
    return V(x1, l1) - V(x, lam), (x - xs) * u, u * u


def run_dt(config, specs, schedule, policy=None, opt=None):
    """Iterate :func:`dt_step` for ``config.k_final`` steps.

    Every step is recorded. The returned trace's ``storage`` holds the
    ``1/delta``-scaled storage, ``z`` the gradient-plus-multiplier signal.

    Raises
    ------
    StepsizeTooLarge, GainConditionError
        When the configuration is not certified and ``force`` is off.
    DivergenceError
        On the first non-finite state.
    """
    policy = policy or TriggerPolicy()
    specs = _validate_run(specs, schedule, config.x0)
    n = len(specs)
    if opt is None:
        opt = solve_centralized_optimum(specs, config.alpha, tol=1e-10)
    alpha, beta, delta = config.alpha, config.beta, config.delta
    nu_mags = dt_indices(specs, alpha, delta, config.index_rule, config.force)
    d_max = gr.max_in_degrees(schedule)
    if not config.force and not gain_condition(nu_mags, beta, d_max):
        raise GainConditionError(
            f"beta={beta:g} violates |nu~_i|*beta*d_i < 1/2 (sup {0.5 / np.max(nu_mags * d_max):.4g})")

    monitor = TriggerMonitor(nu_mags, beta, policy, strict=not config.force)
    storage = StorageEvaluator(specs, alpha, opt)
    x = config.x0.copy()
    lam = config.lambda0.copy()
    comm = CommState.initial(x)
    K = int(config.k_final)
    m = x.shape[1]
    X = np.empty((K + 1, n, m))
    L = np.empty_like(X)
    XH = np.empty_like(X)
    Z = np.empty_like(X)
    U = np.empty_like(X)
    TRIG = np.zeros((K + 1, n), dtype=bool)
    G = np.empty_like(X)

    for k in range(K + 1):
        g = schedule.modes[gr.mode_index(schedule, float(k))]
        X[k], L[k] = x, lam
        if k == K:
            # final sample: no check, report the input the next step would use
            XH[k] = comm.xhat
            U[k] = couplings(comm.xhat, g.adjacency, beta)
            G[k] = _gradients(specs, x)
            Z[k] = alpha * G[k] + lam
            break
        comm.eligible_counts += g.in_degree > 0
        step = dt_step(x, lam, comm, g, specs, config, policy, monitor)
        XH[k], Z[k], U[k], TRIG[k] = comm.xhat, step.z, step.u, step.fired
        G[k] = step.grad
        x, lam = step.x, step.lam
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            raise DivergenceError(f"non-finite state at step {k + 1}", k + 1)

    return SimulationTrace(
        kind="dt",
        time=np.arange(K + 1, dtype=float),
        x=X, lam=L, xhat=XH, u=U, triggered=TRIG, storage=storage.batch(X, L, G) / delta,
        trigger_counts=comm.trigger_counts.copy(),
        eligible_counts=comm.eligible_counts.copy(),
        x_star=opt.x_star.copy(),
        step=delta,
        nu_mags=nu_mags,
        z=Z,
    )
