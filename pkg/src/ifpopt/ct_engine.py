"""Continuous-time algorithm with event-triggered coupling.

Each agent runs

    dx_i/dt      = -alpha * grad f_i(x_i) - lambda_i
    dlambda_i/dt = -u_i,    u_i = beta * sum_j a_ij(t) (xhat_j - xhat_i)

integrated with fixed-step classical RK4. Broadcast states are held over a
step and the trigger rule is checked after every step.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import expit

from . import graph as gr
from .exceptions import AssumptionViolation, DivergenceError, DomainError, GainConditionError
from .objective import eval_gradient, eval_value, solve_centralized_optimum
from .passivity import gain_condition, ifp_index_ct
from .trace import SimulationTrace
from .trigger import CommState, TriggerMonitor, TriggerPolicy, commit_many

__all__ = [
    "CtConfig",
    "AgentState",
    "coupling_input",
    "couplings",
    "vector_field",
    "storage_value",
    "storage_values",
    "StorageEvaluator",
    "run_ct",
    "dissipation_defect",
    "storage_rate",
]

LAMBDA_SUM_TOL = 1e-12


@dataclass
class AgentState:
    x: np.ndarray
    lam: np.ndarray


@dataclass
class CtConfig:
    """Continuous-time run parameters.

    ``x0`` has shape ``(N, m)`` (a length-``N`` vector is read as ``m = 1``).
    ``lambda0`` defaults to zeros and must sum to zero. ``force`` skips the
    gain-condition check for demonstration runs.
    """

    alpha: float
    beta: float
    x0: np.ndarray
    h: float = 1e-3
    t_final: float = 60.0
    lambda0: Optional[np.ndarray] = None
    record_every: int = 1
    stop_tol: float = 0.0
    force: bool = False

    def __post_init__(self):
        self.x0 = _as_states(self.x0)
        if self.lambda0 is None:
            self.lambda0 = np.zeros_like(self.x0)
        else:
            self.lambda0 = _as_states(self.lambda0)
        if self.lambda0.shape != self.x0.shape:
            raise DomainError("lambda0 and x0 shapes differ")
        if np.linalg.norm(self.lambda0.sum(axis=0)) > LAMBDA_SUM_TOL:
            raise DomainError("initial multipliers must sum to zero")
        if not self.alpha > 0:
            raise DomainError("alpha must be positive")
        if not self.beta >= 0:
            raise DomainError("beta must be nonnegative")
        if not (self.h > 0 and self.t_final >= 0):
            raise DomainError("need h > 0 and t_final >= 0")
        if int(self.record_every) < 1:
            raise DomainError("record_every must be >= 1")


def _as_states(a):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DomainError(f"expected an (N, m) array, got shape {a.shape}")
    return a.copy()


def couplings(xhat, adjacency, beta):
    """Inputs for all agents: ``beta * (A @ xhat - d_in * xhat)``."""
    d_in = adjacency.sum(axis=1)
    return beta * (adjacency @ xhat - d_in[:, None] * xhat)


def coupling_input(xhat, g, beta, agent):
    """Input of one agent, ``beta * sum_j a_ij (xhat_j - xhat_i)``."""
    xhat = _as_states(xhat)
    a = g.adjacency[agent]
    return beta * (a @ (xhat - xhat[agent]))


def _gradients(specs, x):
    # hot path: skip per-call validation, the caller checks finiteness
    return np.array([s.gradient(xi) for s, xi in zip(specs, x)], dtype=float).reshape(x.shape)


def gradient_fn(specs):
    """Return ``x -> stacked gradients`` for a fixed list of objectives.

    When every objective declares ``grad_terms`` the result is a single
    vectorized expression over agents; otherwise it loops over agents.
    """
    specs = list(specs)
    if not all(s.grad_terms is not None for s in specs):
        return lambda x: _gradients(specs, x)
    p, q, r, s_, t = (np.array(c)[:, None] for c in zip(*(s.grad_terms for s in specs)))
    use_cos = bool(np.any(r))
    use_sig = bool(np.any(s_))

    def grad(x):
        g = p * x + q
        if use_cos:
            g = g + r * np.cos(x)
        if use_sig:
            g = g + s_ * expit(t * x)
        return g

    return grad


def vector_field(x, lam, u, specs, alpha):
    """Time derivatives ``(dx, dlambda)``.

    Raises DivergenceError (step -1) if a gradient comes back non-finite.
    """
    g = _gradients(specs, x)
    if not np.all(np.isfinite(g)):
        raise DivergenceError("non-finite gradient in vector field", -1)
    return -alpha * g - lam, -np.asarray(u, dtype=float)


def storage_value(state, spec, alpha, opt):
    """Storage of one agent relative to the optimum ``opt``.

    ``|a*grad f(x) + lam|^2/(a*mu) - dx.dlam + a*grad f(x*).dx + a*(f(x*) - f(x))``
    """
    x = np.atleast_1d(np.asarray(state.x, dtype=float))
    lam = np.atleast_1d(np.asarray(state.lam, dtype=float))
    xs = opt.x_star
    g_star = eval_gradient(spec, xs)
    lam_star = -alpha * g_star
    z = alpha * eval_gradient(spec, x) + lam
    dx = x - xs
    return float(
        z @ z / (alpha * spec.mu)
        - dx @ (lam - lam_star)
        + alpha * g_star @ dx
        + alpha * (eval_value(spec, xs) - eval_value(spec, x))
    )


class StorageEvaluator:
    """Per-agent storage values for many states against one optimum.

    Equivalent to :func:`storage_value` agent by agent, with the optimum
    terms computed once.
    """

    def __init__(self, specs, alpha, opt):
        self.specs = list(specs)
        self.alpha = alpha
        xs = opt.x_star
        self.x_star = xs
        self.mu = np.array([s.mu for s in self.specs])
        self.g_star = np.array([eval_gradient(s, xs) for s in self.specs])
        self.f_star = np.array([eval_value(s, xs) for s in self.specs])
        self.lam_star = -alpha * self.g_star

    def __call__(self, x, lam, grad=None):
        a = self.alpha
        g = _gradients(self.specs, x) if grad is None else grad
        f = np.array([s.value(xi) for s, xi in zip(self.specs, x)], dtype=float)
        z = a * g + lam
        dx = x - self.x_star[None, :]
        return (((z * z) / (a * self.mu[:, None])
                 - dx * (lam - self.lam_star)
                 + a * self.g_star * dx).sum(axis=1)
                + a * (self.f_star - f))

    def batch(self, X, L, G):
        """Storage for a stack of samples, arrays shaped ``(S, N, m)``.

        ``G`` holds the matching gradients. Objectives with ``batch_value``
        are evaluated in one call per agent.
        """
        a = self.alpha
        F = np.empty(X.shape[:2])
        for i, s in enumerate(self.specs):
            if s.batch_value is not None:
                F[:, i] = s.batch_value(X[:, i])
            else:
                F[:, i] = [s.value(xi) for xi in X[:, i]]
        Z = a * G + L
        dX = X - self.x_star
        return (((Z * Z) / (a * self.mu[:, None])
                 - dX * (L - self.lam_star)
                 + a * self.g_star * dX).sum(axis=2)
                + a * (self.f_star - F))


def storage_values(specs, x, lam, alpha, opt):
    return StorageEvaluator(specs, alpha, opt)(np.asarray(x, float), np.asarray(lam, float))


def _check_schedule(specs, schedule):
    if schedule.n != len(specs):
        raise DomainError(f"schedule has {schedule.n} agents, objectives {len(specs)}")
    for k, mode in enumerate(schedule.modes):
        if not gr.is_weight_balanced(mode):
            raise AssumptionViolation(f"mode {k} is not weight-balanced")


def _rk4(x, lam, u, grad_all, alpha, h, g1=None):
    """One classical RK4 step with ``u`` held constant.

    ``lambda`` is affine in time over the step, so its stage values are
    written in closed form.
    """
    if g1 is None:
        g1 = grad_all(x)
    k1 = -alpha * g1 - lam
    lam_half = lam - 0.5 * h * u
    k2 = -alpha * grad_all(x + 0.5 * h * k1) - lam_half
    k3 = -alpha * grad_all(x + 0.5 * h * k2) - lam_half
    lam_new = lam - h * u
    k4 = -alpha * grad_all(x + h * k3) - lam_new
    return x + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4), lam_new


def _validate_run(specs, schedule, x0):
    specs = list(specs)
    _check_schedule(specs, schedule)
    if x0.shape[0] != len(specs):
        raise DomainError(f"x0 has {x0.shape[0]} rows for {len(specs)} agents")
    dims = {s.dim for s in specs}
    if dims != {x0.shape[1]}:
        raise DomainError(f"x0 has dimension {x0.shape[1]}, objectives {sorted(dims)}")
    return specs


def run_ct(config, specs, schedule, policy=None, opt=None):
    """Simulate the continuous-time algorithm.

    Parameters
    ----------
    config : CtConfig
    specs : list of ObjectiveSpec
    schedule : GraphSchedule
        Dwell times in seconds.
    policy : TriggerPolicy, optional
        Defaults to the exact rule with ``c = 0.99``.
    opt : OptimumSolution, optional
        Computed with tolerance 1e-10 when omitted.

    Returns
    -------
    SimulationTrace

    Raises
    ------
    GainConditionError
        If ``|nu_i| beta d_i < 1/2`` fails and ``config.force`` is off.
    DivergenceError
        On the first non-finite state.
    """
    policy = policy or TriggerPolicy()
    specs = _validate_run(specs, schedule, config.x0)
    n = len(specs)
    if opt is None:
        opt = solve_centralized_optimum(specs, config.alpha, tol=1e-10)
    alpha, beta, h = config.alpha, config.beta, config.h
    nu_mags = np.array([abs(ifp_index_ct(alpha, s.mu)) for s in specs])
    d_max = gr.max_in_degrees(schedule)
    if not config.force and not gain_condition(nu_mags, beta, d_max):
        raise GainConditionError(
            f"beta={beta:g} violates |nu_i|*beta*d_i < 1/2 (sup {0.5 / np.max(nu_mags * d_max):.4g})")

    n_steps = int(round(config.t_final / h))
    every = int(config.record_every)
    x = config.x0.copy()
    lam = config.lambda0.copy()
    comm = CommState.initial(x)
    monitor = TriggerMonitor(nu_mags, beta, policy, strict=not config.force)
    storage = StorageEvaluator(specs, alpha, opt)

    grad_all = gradient_fn(specs)

    rec = {k: [] for k in ("t", "x", "lam", "xhat", "u", "trig", "g")}
    pending = np.zeros(n, dtype=bool)
    u_key, u = None, None
    step = 0
    while True:
        t = step * h
        g = schedule.modes[gr.mode_index(schedule, t)]
        if (id(g), comm.version) != u_key:
            u = couplings(comm.xhat, g.adjacency, beta)
            u_key = (id(g), comm.version)
        gx = grad_all(x)
        done = step == n_steps or (
            config.stop_tol > 0
            and np.max(np.linalg.norm(x - opt.x_star, axis=1)) < config.stop_tol)
        if step % every == 0 or done:
            rec["t"].append(t)
            rec["x"].append(x)
            rec["lam"].append(lam)
            rec["xhat"].append(comm.xhat.copy())
            rec["u"].append(u)
            rec["trig"].append(pending.copy())
            rec["g"].append(gx)
            pending[:] = False
        if done:
            break
        x, lam = _rk4(x, lam, u, grad_all, alpha, h, gx)
        step += 1
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            raise DivergenceError(f"non-finite state at step {step} (t={step * h:g})", step)
        g = schedule.modes[gr.mode_index(schedule, step * h)]
        comm.eligible_counts += g.in_degree > 0
        if policy.mode == "always":
            comm.xhat[:] = x
            comm.trigger_counts += g.in_degree > 0
            comm.version += 1
            pending |= g.in_degree > 0
            continue
        fire = monitor.check(x, comm, g)
        if fire.any():
            commit_many(comm, fire, x)
            pending |= fire

    X, L = np.array(rec["x"]), np.array(rec["lam"])
    return SimulationTrace(
        kind="ct",
        time=np.array(rec["t"]),
        x=X,
        lam=L,
        xhat=np.array(rec["xhat"]),
        u=np.array(rec["u"]),
        triggered=np.array(rec["trig"]),
        storage=storage.batch(X, L, np.array(rec["g"])),
        trigger_counts=comm.trigger_counts.copy(),
        eligible_counts=comm.eligible_counts.copy(),
        x_star=opt.x_star.copy(),
        step=h,
        nu_mags=nu_mags,
    )


def storage_rate(specs, x, lam, u, alpha, opt):
    """Exact time derivative of each agent's storage along the vector field.

    ``dV_i/dt = -(2/mu) z'Hz + |z|^2 - (2/(alpha*mu)) u'z + u'dx`` with
    ``z = alpha*grad f(x) + lambda`` and ``H`` the Hessian at ``x``.
    """
    from .objective import eval_hessian
    out = np.empty(len(specs))
    for i, s in enumerate(specs):
        xi, li, ui = x[i], lam[i], u[i]
        z = alpha * eval_gradient(s, xi) + li
        H = eval_hessian(s, xi)
        dx = xi - opt.x_star
        out[i] = (-(2.0 / s.mu) * z @ H @ z + z @ z
                  - 2.0 / (alpha * s.mu) * u[i] @ z + ui @ dx)
    return out


def dissipation_defect(trace, specs=None, alpha=None, opt=None):
    """Compare finite-difference storage rates with the IFP supply.

    For each agent and recorded step the rate is
    ``(V_i[s+1] - V_i[s]) / dt`` and the supply is
    ``dx_i . u_i + |nu_i| |u_i|^2``, both taken at the start of the step.
    Needs ``record_every = 1``.

    Returns the largest ``rate - supply`` over all agents and steps
    (negative if the supply dominates everywhere). If ``specs``, ``alpha``
    and ``opt`` are given, returns ``(excess, fd_error)`` where
    ``fd_error`` is the largest gap between the finite-difference rate and
    the exact rate from :func:`storage_rate`; it is O(dt) and bounds any
    positive excess.
    """
    dt = np.diff(trace.time)[:, None]
    rate = np.diff(trace.storage, axis=0) / dt
    dx = trace.x[:-1] - trace.x_star[None, None, :]
    u = trace.u[:-1]
    supply = np.einsum("sik,sik->si", dx, u) + trace.nu_mags[None, :] * np.einsum("sik,sik->si", u, u)
    excess = float(np.max(rate - supply))
    if specs is None:
        return excess
    exact = np.array([storage_rate(specs, trace.x[s], trace.lam[s], trace.u[s], alpha, opt)
                      for s in range(len(trace.time) - 1)])
    return excess, float(np.max(np.abs(rate - exact)))
