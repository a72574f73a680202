"""IFP indices, stepsize and coupling-gain bounds, DT passivity certificate.

Conventions: IFP indices are nonpositive numbers ``nu``; the gain conditions
take their magnitudes ``|nu|``. All bounds on ``beta`` and ``delta`` are
open-interval suprema, i.e. the bound itself is not admissible.
"""

from dataclasses import dataclass, asdict
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import DomainError, StepsizeTooLarge

__all__ = [
    "PassivityCertificate",
    "MatrixCheck",
    "ifp_index_ct",
    "max_stepsize",
    "ifp_index_dt",
    "ifp_index_dt_robust",
    "gain_condition",
    "beta_supremum",
    "min_alpha_ct",
    "is_nsd_2x2",
    "dt_passivity_certificate",
    "dissipation_matrix",
    "certify",
]

NSD_TOL = 1e-12


def _positive(**kw):
    for k, v in kw.items():
        if not (np.isfinite(v) and v > 0):
            raise DomainError(f"{k} must be positive and finite, got {v}")


def ifp_index_ct(alpha, mu):
    """IFP index of the continuous-time agent: ``-1 / (alpha*mu)**2``."""
    _positive(alpha=alpha, mu=mu)
    return -1.0 / (alpha * mu) ** 2


def max_stepsize(alpha, mu, lip):
    """Supremum of admissible forward-Euler stepsizes for one agent.

    ``(1/alpha) * (4*lip - 2*mu) / (2*lip**2 - mu**2)``. The network-wide
    bound is the minimum over agents.
    """
    _positive(alpha=alpha, mu=mu, lip=lip)
    if lip < mu:
        raise DomainError(f"lip={lip} < mu={mu}")
    return (4.0 * lip - 2.0 * mu) / (alpha * (2.0 * lip**2 - mu**2))


def _dt_parts(alpha, delta, mu, lip):
    num = (1.0 / (alpha * mu) + delta * (0.5 + lip / mu)) ** 2
    den = alpha * delta * (mu / 2.0 - lip**2 / mu) + 2.0 * lip / mu - 1.0
    return num, den


def ifp_index_dt(alpha, delta, mu, lip):
    """IFP index of the forward-Euler agent with stepsize ``delta``.

    Raises
    ------
    StepsizeTooLarge
        If ``delta`` is at or above :func:`max_stepsize`, where the
        denominator stops being positive.
    """
    _positive(alpha=alpha, mu=mu, lip=lip)
    if not (np.isfinite(delta) and delta >= 0):
        raise DomainError(f"delta must be nonnegative, got {delta}")
    if lip < mu:
        raise DomainError(f"lip={lip} < mu={mu}")
    num, den = _dt_parts(alpha, delta, mu, lip)
    if den <= 0:
        raise StepsizeTooLarge(
            f"delta={delta:g} >= stepsize bound {max_stepsize(alpha, mu, lip):.6g}")
    return -num / den


class MatrixCheck(NamedTuple):
    matrix: np.ndarray
    trace: float
    det: float
    nsd: bool


def is_nsd_2x2(M, tol=NSD_TOL):
    """Negative semidefiniteness of a symmetric 2x2 matrix via trace and determinant.

    ``tol`` is relative to the largest entry (squared for the determinant)
    so that rounding in large matrices does not flip the verdict.
    """
    M = np.asarray(M, dtype=float)
    scale = max(1.0, float(np.abs(M).max()))
    tr = M[0, 0] + M[1, 1]
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    return bool(tr <= tol * scale and det >= -tol * scale**2)


def dt_passivity_certificate(alpha, delta, mu, lip, nu_candidate, tol=NSD_TOL):
    """Worst-case 2x2 dissipation matrix for a candidate DT index.

    Entries are ``[[a*d*l^2/mu - 2l/mu + 1 - a*d*mu/2, 1/(a*mu) + d/2 + d*l/mu],
    [., nu_candidate]]``; the candidate certifies the agent when this matrix
    is negative semidefinite. With ``delta = 0`` it reduces to the
    continuous-time matrix ``[[1 - 2l/mu, 1/(a*mu)], [., nu]]``.
    """
    _positive(alpha=alpha, mu=mu, lip=lip)
    m11 = alpha * delta * lip**2 / mu - 2.0 * lip / mu + 1.0 - alpha * delta * mu / 2.0
    m12 = 1.0 / (alpha * mu) + delta / 2.0 + delta * lip / mu
    M = np.array([[m11, m12], [m12, float(nu_candidate)]])
    tr = m11 + nu_candidate
    det = m11 * nu_candidate - m12**2
    return MatrixCheck(M, float(tr), float(det), is_nsd_2x2(M, tol))


def dissipation_matrix(alpha, delta, mu, curvature, nu):
    """Exact one-step dissipation matrix for a scalar averaged curvature.

    For a single forward-Euler step with averaged Hessian ``curvature``
    (a scalar in ``[mu, lip]``), the storage increase minus the supply
    ``dx*u - nu*u**2`` is bounded by ``[z, u] @ M @ [z, u]`` where ``z`` is
    the gradient-plus-multiplier signal. Unlike the worst-case matrix of
    :func:`dt_passivity_certificate`, this keeps the ``delta/(alpha*mu)``
    input term and the signed cross term.
    """
    B = curvature
    m11 = alpha * delta * B**2 / mu - 2.0 * B / mu + 1.0 - alpha * delta * mu / 2.0
    m12 = -(1.0 / (alpha * mu) + delta / 2.0) + delta * B / mu
    m22 = nu + delta / (alpha * mu)
    return np.array([[m11, m12], [m12, m22]])


def ifp_index_dt_robust(alpha, delta, mu, lip):
    """Largest DT index certified for every curvature in ``[mu, lip]``.

    Minimizes ``m12(B)**2 / m11(B) - delta/(alpha*mu)`` over ``B`` using the
    exact matrix of :func:`dissipation_matrix`. This is a valid index for
    the scalar one-step inequality even where :func:`ifp_index_dt` is not
    (agents with ``lip > mu``).
    """
    _positive(alpha=alpha, mu=mu, lip=lip)
    if not delta >= 0:
        raise DomainError("delta must be nonnegative")

    def ratio(B):
        M = dissipation_matrix(alpha, delta, mu, B, 0.0)
        return M[0, 1] ** 2 / M[0, 0]

    # m11 is convex in B, so checking both ends covers the interval
    for B in (mu, lip):
        if dissipation_matrix(alpha, delta, mu, B, 0.0)[0, 0] >= 0:
            raise StepsizeTooLarge(f"delta={delta:g} leaves a nonnegative curvature term")
    if lip == mu:
        best = ratio(mu)
    else:
        grid = np.linspace(mu, lip, 2001)
        vals = np.array([ratio(b) for b in grid])
        k = int(np.argmin(vals))
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        res = minimize_scalar(ratio, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = min(vals[k], res.fun)
    return float(best - delta / (alpha * mu))


def gain_condition(indices, beta, max_in_degree):
    """True iff ``|nu_i| * beta * d_i < 1/2`` for every agent."""
    mags = np.abs(np.asarray(indices, dtype=float))
    d = np.broadcast_to(np.asarray(max_in_degree, dtype=float), mags.shape)
    return bool(np.all(mags * beta * d < 0.5))


def beta_supremum(indices, max_in_degree):
    """Open upper bound on ``beta`` from the in-degree condition (``inf`` if unconstrained)."""
    mags = np.abs(np.asarray(indices, dtype=float))
    d = np.broadcast_to(np.asarray(max_in_degree, dtype=float), mags.shape)
    w = mags * d
    if not np.any(w > 0):
        return np.inf
    return float(0.5 / w.max())


def min_alpha_ct(beta, mu, max_in_degree):
    """Open lower bound on ``alpha`` for a fixed ``beta`` (continuous time).

    From ``beta * d / (alpha*mu)**2 < 1/2`` per agent.
    """
    mu = np.asarray(mu, dtype=float)
    d = np.broadcast_to(np.asarray(max_in_degree, dtype=float), mu.shape)
    return float(np.max(np.sqrt(2.0 * beta * d) / mu))


@dataclass
class PassivityCertificate:
    agent: int
    mu: float
    lip: float
    alpha: float
    nu_ct: float
    delta_max: float
    beta_max_ct: float
    delta: Optional[float] = None
    nu_dt: Optional[float] = None
    beta_max_dt: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def certify(specs, alpha, max_in_degree, delta=None):
    """Per-agent certificates for a set of objectives.

    ``beta_max_*`` fields are per-agent suprema ``1/(2|nu_i| d_i)``; the
    network bound is their minimum. ``nu_dt`` is ``None`` when ``delta``
    is not given or is too large for that agent.
    """
    d = np.broadcast_to(np.asarray(max_in_degree, dtype=float), (len(specs),))
    out = []
    for i, s in enumerate(specs):
        nu = ifp_index_ct(alpha, s.mu)
        cert = PassivityCertificate(
            agent=i, mu=s.mu, lip=s.lip, alpha=alpha, nu_ct=nu,
            delta_max=max_stepsize(alpha, s.mu, s.lip),
            beta_max_ct=beta_supremum([nu], d[i]),
        )
        if delta is not None:
            cert.delta = delta
            if delta < cert.delta_max:
                cert.nu_dt = ifp_index_dt(alpha, delta, s.mu, s.lip)
                cert.beta_max_dt = beta_supremum([cert.nu_dt], d[i])
        out.append(cert)
    return out
