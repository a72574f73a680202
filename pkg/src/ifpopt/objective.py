"""Local objective functions, averaged Hessians and the centralized optimum.

Every objective acts on a decision vector of dimension ``dim``. The built-in
catalog entries are scalar functions applied component-wise and summed, so
their strong-convexity modulus and gradient Lipschitz constant do not depend
on ``dim``.
"""

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .exceptions import AccuracyError, AssumptionViolation, ConvergenceError, DomainError

__all__ = [
    "ObjectiveSpec",
    "OptimumSolution",
    "quadratic",
    "sinquad",
    "logexp1",
    "logexp2",
    "from_name",
    "paper_objectives",
    "eval_gradient",
    "eval_value",
    "eval_hessian",
    "averaged_hessian",
    "verify_constants",
    "aggregate_gradient",
    "solve_centralized_optimum",
]

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)
# map [-1, 1] -> [0, 1]
_TAU = 0.5 * (_GL_NODES + 1.0)
_W = 0.5 * _GL_WEIGHTS


@dataclass(frozen=True)
class ObjectiveSpec:
    """A local objective f_i with certified curvature bounds.

    Parameters
    ----------
    value, gradient : callable
        ``value(x) -> float`` and ``gradient(x) -> ndarray`` for ``x`` of
        shape ``(dim,)``.
    mu : float
        Strong-convexity modulus, ``mu > 0``.
    lip : float
        Lipschitz constant of the gradient, ``lip >= mu``.
    hessian : callable, optional
        ``hessian(x) -> ndarray (dim, dim)``. When omitted a central finite
        difference of ``gradient`` is used.
    kind : str
        Catalog name, or ``"custom"``.
    batch_value : callable, optional
        ``batch_value(X) -> ndarray (S,)`` for ``X`` of shape ``(S, dim)``;
        lets engines evaluate storage for a whole trace at once.
    grad_terms : tuple, optional
        ``(p, q, r, s, t)`` when the gradient is, componentwise,
        ``p*x + q + r*cos(x) + s*expit(t*x)``. Engines use it to evaluate
        all agents in one vectorized call.
    """

    value: Callable[[np.ndarray], float]
    gradient: Callable[[np.ndarray], np.ndarray]
    mu: float
    lip: float
    hessian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kind: str = "custom"
    dim: int = 1
    id: int = 0
    coeffs: tuple = field(default=())
    batch_value: Optional[Callable[[np.ndarray], np.ndarray]] = None
    grad_terms: Optional[tuple] = None

    def __post_init__(self):
        if not (np.isfinite(self.mu) and np.isfinite(self.lip)):
            raise DomainError("mu and lip must be finite")
        if not self.mu > 0:
            raise DomainError(f"mu must be positive, got {self.mu}")
        if self.lip < self.mu:
            raise DomainError(f"lip={self.lip} is smaller than mu={self.mu}")
        if self.dim < 1:
            raise DomainError("dim must be >= 1")

    def with_id(self, i):
        return replace(self, id=i)


@dataclass(frozen=True)
class OptimumSolution:
    """Minimizer of the aggregate objective and the matching auxiliary states.

    ``lambda_star[i] = -alpha * grad f_i(x_star)``; these sum to (almost) zero.
    """

    x_star: np.ndarray
    lambda_star: np.ndarray
    residual: float
    alpha: float


def _separable(name, f, df, d2f, mu, lip, dim, coeffs=(), terms=None):
    def value(x):
        return float(f(np.asarray(x, dtype=float)).sum())

    def gradient(x):
        return df(np.asarray(x, dtype=float))

    def hessian(x):
        return np.diag(d2f(np.asarray(x, dtype=float)))

    def batch_value(X):
        return f(np.asarray(X, dtype=float)).sum(axis=-1)

    return ObjectiveSpec(value, gradient, mu, lip, hessian, name, dim, 0, coeffs, batch_value,
                         terms)


def quadratic(a, b=0.0, c=0.0, dim=1):
    """``0.5*a*x**2 + b*x + c`` per component; ``mu = lip = a``."""
    if not a > 0:
        raise DomainError("quadratic needs a > 0 to be strongly convex")
    return _separable(
        f"quad({a:g},{b:g},{c:g})",
        lambda x: 0.5 * a * x**2 + b * x + c / dim,
        lambda x: a * x + b,
        lambda x: np.full_like(x, a),
        a, a, dim, (a, b, c), (a, b, 0.0, 0.0, 0.0),
    )


def sinquad(dim=1):
    """``x**2 + sin(x)``; the second derivative ``2 - sin x`` lies in [1, 3]."""
    return _separable(
        "sinquad",
        lambda x: x**2 + np.sin(x),
        lambda x: 2.0 * x + np.cos(x),
        lambda x: 2.0 - np.sin(x),
        1.0, 3.0, dim, terms=(2.0, 0.0, 1.0, 0.0, 0.0),
    )


def logexp1(dim=1):
    """``log(exp(2x) + 1) + 0.5*x**2``; curvature in [1, 2]."""
    def d2f(x):
        s = expit(2.0 * x)
        return 4.0 * s * (1.0 - s) + 1.0

    return _separable(
        "logexp1",
        lambda x: np.logaddexp(2.0 * x, 0.0) + 0.5 * x**2,
        lambda x: 2.0 * expit(2.0 * x) + x,
        d2f,
        1.0, 2.0, dim, terms=(1.0, 0.0, 0.0, 2.0, 2.0),
    )


def logexp2(dim=1):
    """``log(exp(2x) + exp(-0.2x)) + 0.6*x**2``; curvature in [1.2, 2.41]."""
    def d2f(x):
        s = expit(2.2 * x)
        return 4.84 * s * (1.0 - s) + 1.2

    return _separable(
        "logexp2",
        lambda x: np.logaddexp(2.0 * x, -0.2 * x) + 0.6 * x**2,
        lambda x: 2.2 * expit(2.2 * x) - 0.2 + 1.2 * x,
        d2f,
        1.2, 2.41, dim, terms=(1.2, -0.2, 0.0, 2.2, 2.2),
    )


_QUAD_RE = re.compile(r"^quad\(\s*([^,()]+)\s*,\s*([^,()]+)\s*,\s*([^,()]+)\s*\)$")


def from_name(name, dim=1):
    """Build a catalog objective from its config name.

    Accepted names are ``quad(a,b,c)``, ``sinquad``, ``logexp1`` and
    ``logexp2``.
    """
    name = name.strip()
    m = _QUAD_RE.match(name)
    if m:
        try:
            a, b, c = (float(g) for g in m.groups())
        except ValueError:
            raise DomainError(f"bad quad coefficients in {name!r}") from None
        return quadratic(a, b, c, dim=dim)
    builders = {"sinquad": sinquad, "logexp1": logexp1, "logexp2": logexp2}
    if name not in builders:
        raise DomainError(f"unknown objective {name!r}")
    return builders[name](dim=dim)


def paper_objectives(dim=1):
    """The five-agent benchmark: two quadratics, sinquad, logexp1, logexp2."""
    specs = [quadratic(1.0, 3.0, 1.0, dim), quadratic(1.0, -1.0, 0.0, dim),
             sinquad(dim), logexp1(dim), logexp2(dim)]
    return [s.with_id(i) for i, s in enumerate(specs)]


def _as_point(spec, x):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (spec.dim,):
        raise DomainError(f"expected shape ({spec.dim},), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DomainError("non-finite decision vector")
    return x


def eval_value(spec, x):
    return float(spec.value(_as_point(spec, x)))


def eval_gradient(spec, x):
    """Gradient of ``spec`` at ``x``; raises DomainError on non-finite input."""
    x = _as_point(spec, x)
    return np.atleast_1d(np.asarray(spec.gradient(x), dtype=float))


def eval_hessian(spec, x, h=1e-5):
    x = _as_point(spec, x)
    if spec.hessian is not None:
        return np.atleast_2d(np.asarray(spec.hessian(x), dtype=float))
    H = np.empty((spec.dim, spec.dim))
    for k in range(spec.dim):
        e = np.zeros(spec.dim)
        e[k] = h
        H[:, k] = (spec.gradient(x + e) - spec.gradient(x - e)) / (2 * h)
    return 0.5 * (H + H.T)


def averaged_hessian(spec, x, x_ref, tol=1e-8):
    """Average of the Hessian along the segment from ``x_ref`` to ``x``.

    Uses 64-point Gauss-Legendre quadrature, so that
    ``grad f(x) - grad f(x_ref) = B @ (x - x_ref)`` up to quadrature error.

    Raises
    ------
    AccuracyError
        If that identity is off by more than ``tol * max(1, |x - x_ref|)``.
    """
    x = _as_point(spec, x)
    x_ref = _as_point(spec, x_ref)
    dx = x - x_ref
    B = np.zeros((spec.dim, spec.dim))
    for tau, w in zip(_TAU, _W):
        B += w * eval_hessian(spec, x_ref + tau * dx)
    resid = np.linalg.norm(eval_gradient(spec, x) - eval_gradient(spec, x_ref) - B @ dx)
    if resid > tol * max(1.0, float(np.linalg.norm(dx))):
        raise AccuracyError(f"averaged Hessian residual {resid:.3e} exceeds {tol:.1e}")
    return B


def verify_constants(spec, n_pairs=10_000, low=-5.0, high=5.0, tol=1e-9, seed=0):
    """Check the declared ``mu`` and ``lip`` on random pairs from a box.

    The tolerance is scaled by ``|x - y|**2`` (monotonicity) and
    ``|x - y|`` (Lipschitz). Raises AssumptionViolation on the first failure.
    Returns the worst observed ratios ``(min monotone/|dx|^2, max |dg|/|dx|)``.
    """
    rng = np.random.default_rng(seed)
    lo_ratio, hi_ratio = np.inf, 0.0
    for _ in range(n_pairs):
        x = rng.uniform(low, high, spec.dim)
        y = rng.uniform(low, high, spec.dim)
        dx = x - y
        n2 = float(dx @ dx)
        if n2 == 0.0:
            continue
        dg = eval_gradient(spec, x) - eval_gradient(spec, y)
        mono = float(dg @ dx)
        if mono < spec.mu * n2 - tol * n2:
            raise AssumptionViolation(
                f"{spec.kind}: strong convexity fails at x={x}, y={y}")
        lipr = float(np.linalg.norm(dg))
        if lipr > spec.lip * np.sqrt(n2) + tol * np.sqrt(n2):
            raise AssumptionViolation(
                f"{spec.kind}: Lipschitz bound fails at x={x}, y={y}")
        lo_ratio = min(lo_ratio, mono / n2)
        hi_ratio = max(hi_ratio, lipr / np.sqrt(n2))
    return lo_ratio, hi_ratio


def aggregate_gradient(specs, x):
    return sum(eval_gradient(s, x) for s in specs)


def _solve_scalar(specs, x0, tol, max_iter):
    def g(t):
        return float(aggregate_gradient(specs, [t])[0])

    def dg(t):
        return float(sum(eval_hessian(s, [t])[0, 0] for s in specs))

    lo, hi = x0 - 1.0, x0 + 1.0
    width = 1.0
    for _ in range(max_iter):
        if g(lo) < 0.0:
            break
        width *= 2.0
        lo = x0 - width
    else:
        raise ConvergenceError("could not bracket the root from below")
    width = 1.0
    for _ in range(max_iter):
        if g(hi) > 0.0:
            break
        width *= 2.0
        hi = x0 + width
    else:
        raise ConvergenceError("could not bracket the root from above")

    t = 0.5 * (lo + hi)
    for _ in range(max_iter):
        gt = g(t)
        if abs(gt) <= tol:
            return t
        if gt > 0.0:
            hi = t
        else:
            lo = t
        # Newton polish, falling back to bisection outside the bracket
        step = t - gt / dg(t)
        t = step if lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= np.finfo(float).eps * max(1.0, abs(t)):
            if abs(g(t)) <= tol:
                return t
            break
    raise ConvergenceError(f"root solve did not reach |g| <= {tol:g}")


def _solve_newton(specs, x0, tol, max_iter):
    x = np.array(x0, dtype=float)

    def F(v):
        return sum(eval_value(s, v) for s in specs)

    for _ in range(max_iter):
        g = aggregate_gradient(specs, x)
        if np.linalg.norm(g) <= tol:
            return x
        H = sum(eval_hessian(s, x) for s in specs)
        d = -np.linalg.solve(H, g)
        t, f0, slope = 1.0, F(x), float(g @ d)
        while F(x + t * d) > f0 + 1e-4 * t * slope and t > 1e-12:
            t *= 0.5
        x = x + t * d
    raise ConvergenceError(f"Newton solve did not reach |g| <= {tol:g}")


def solve_centralized_optimum(specs, alpha=1.0, tol=1e-10, x0=None, max_iter=500):
    """Minimize ``sum_i f_i`` centrally; used as the reference optimum.

    Scalar problems are bracketed and then solved by safeguarded Newton
    steps on the aggregate gradient. Vector problems use damped Newton.

    Parameters
    ----------
    specs : sequence of ObjectiveSpec
    alpha : float
        Gradient gain, used only to form ``lambda_star``.
    tol : float
        Target for ``|sum_i grad f_i(x_star)|``.
    x0 : array_like, optional
        Starting point (default zero).

    Returns
    -------
    OptimumSolution
    """
    specs = list(specs)
    if not specs:
        raise DomainError("need at least one objective")
    if not alpha > 0:
        raise DomainError("alpha must be positive")
    dim = specs[0].dim
    if any(s.dim != dim for s in specs):
        raise DomainError("objectives disagree on the decision dimension")
    start = np.zeros(dim) if x0 is None else np.atleast_1d(np.asarray(x0, dtype=float))
    if dim == 1:
        x_star = np.array([_solve_scalar(specs, float(start[0]), tol, max_iter)])
    else:
        x_star = _solve_newton(specs, start, tol, max_iter)
    grads = np.array([eval_gradient(s, x_star) for s in specs])
    return OptimumSolution(
        x_star=x_star,
        lambda_star=-alpha * grads,
        residual=float(np.linalg.norm(grads.sum(axis=0))),
        alpha=float(alpha),
    )
