"""Scenario documents: parsing, validation and the five-agent benchmark.

A scenario is a YAML mapping::

    schema: ifpopt/1
    agents:
      - objective: quad(1,3,1)
      - objective: sinquad
        mu: 1.0          # optional, verified by sampling when given
        lip: 3.0
    schedule:
      dwell: 2.0         # seconds, continuous time
      dwell_steps: 20    # steps, discrete time
      modes:
        - [[0, 0, 0, 0, 1], [1, 0, 0, 0, 0], ...]   # row-major adjacency
    alpha: 1.0
    beta: 0.2
    delta: 0.1
    c: 0.99
    trigger: exact       # exact | practical | always
    zeta: 0.0
    h: 0.001
    t_final: 60.0
    k_final: 2000
    seed: 0
    record_every: 1
    x0: null             # explicit initial states, else uniform [0, 1] from seed

Unknown keys are rejected so that typos surface as errors.
"""

import copy
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import yaml

from . import graph as gr
from .exceptions import AssumptionViolation, ConfigError, DomainError
from .objective import from_name, verify_constants

__all__ = ["SCHEMA", "Scenario", "parse_scenario", "load_scenario", "paper_scenario",
           "PAPER_SCENARIO"]

SCHEMA = "ifpopt/1"

_MODE_A = gr.cycle([0, 1, 2, 3, 4]).adjacency.astype(int).tolist()
_MODE_B = gr.cycle([0, 2, 4, 1, 3]).adjacency.astype(int).tolist()

PAPER_SCENARIO = {
    "schema": SCHEMA,
    "agents": [
        {"objective": "quad(1,3,1)"},
        {"objective": "quad(1,-1,0)"},
        {"objective": "sinquad"},
        {"objective": "logexp1"},
        {"objective": "logexp2"},
    ],
    "schedule": {"dwell": 2.0, "dwell_steps": 20, "modes": [_MODE_A, _MODE_B]},
    "alpha": 1.0,
    "beta": 0.2,
    "delta": 0.1,
    "c": 0.99,
    "trigger": "exact",
    "zeta": 0.0,
    "h": 1e-3,
    "t_final": 60.0,
    "k_final": 2000,
    "seed": 0,
    "record_every": 1,
    "x0": None,
    "dim": 1,
}

_TOP_KEYS = set(PAPER_SCENARIO)


@dataclass
class Scenario:
    specs: list
    modes: list
    dwell: float
    dwell_steps: float
    alpha: float
    beta: float
    delta: Optional[float]
    c: float
    trigger: str
    zeta: float
    h: float
    t_final: float
    k_final: int
    seed: int
    record_every: int
    x0: Optional[np.ndarray]
    dim: int = 1
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def n(self):
        return len(self.specs)

    def ct_schedule(self):
        return gr.GraphSchedule(self.modes, self.dwell)

    def dt_schedule(self):
        return gr.GraphSchedule(self.modes, self.dwell_steps)

    def initial_states(self):
        """``x0`` if given, else uniform draws on [0, 1] from ``seed``."""
        if self.x0 is not None:
            return np.array(self.x0, dtype=float).reshape(self.n, self.dim)
        rng = np.random.default_rng(self.seed)
        return rng.uniform(0.0, 1.0, size=(self.n, self.dim))

    def with_overrides(self, **kw):
        """Copy with selected fields replaced; ``None`` values are ignored."""
        kw = {k: v for k, v in kw.items() if v is not None}
        raw = copy.deepcopy(self.raw)
        raw.update(kw)
        return parse_scenario(raw)


def _num(doc, key, path, positive=False, nonneg=False, integer=False, optional=False):
    v = doc.get(key)
    p = f"{path}{key}"
    if v is None:
        if optional:
            return None
        raise ConfigError(p, "missing")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(p, f"expected a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(p, "expected an integer")
    if not np.isfinite(v):
        raise ConfigError(p, "must be finite")
    if positive and not v > 0:
        raise ConfigError(p, "must be positive")
    if nonneg and v < 0:
        raise ConfigError(p, "must be nonnegative")
    return int(v) if integer else float(v)


def _parse_agent(doc, i, dim):
    path = f"agents[{i}]"
    if not isinstance(doc, dict):
        raise ConfigError(path, "expected a mapping")
    extra = set(doc) - {"objective", "mu", "lip"}
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
    name = doc.get("objective")
    if not isinstance(name, str):
        raise ConfigError(f"{path}.objective", "expected a catalog name")
    try:
        spec = from_name(name, dim=dim)
    except DomainError as exc:
        raise ConfigError(f"{path}.objective", str(exc)) from None
    mu = _num(doc, "mu", path + ".", positive=True, optional=True)
    lip = _num(doc, "lip", path + ".", positive=True, optional=True)
    if mu is not None or lip is not None:
        mu = spec.mu if mu is None else mu
        lip = spec.lip if lip is None else lip
        if lip < mu:
            raise ConfigError(f"{path}.lip", "must be >= mu")
        spec = replace(spec, mu=mu, lip=lip)
        try:
            verify_constants(spec, n_pairs=2000, seed=i)
        except AssumptionViolation as exc:
            raise ConfigError(path, f"declared constants fail sampling: {exc}") from None
    return spec.with_id(i)


def parse_scenario(doc):
    """Validate a scenario mapping and build a :class:`Scenario`.

    Raises
    ------
    ConfigError
        With the dotted path of the first offending field.
    """
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a mapping")
    if doc.get("schema") != SCHEMA:
        raise ConfigError("schema", f"expected {SCHEMA!r}, got {doc.get('schema')!r}")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown key")
    full = copy.deepcopy(PAPER_SCENARIO)
    full.update(copy.deepcopy(doc))
    doc = full

    dim = _num(doc, "dim", "", positive=True, integer=True)
    agents = doc.get("agents")
    if not isinstance(agents, list) or not agents:
        raise ConfigError("agents", "expected a non-empty list")
    specs = [_parse_agent(a, i, dim) for i, a in enumerate(agents)]
    n = len(specs)

    sched = doc.get("schedule")
    if not isinstance(sched, dict):
        raise ConfigError("schedule", "expected a mapping")
    extra = set(sched) - {"dwell", "dwell_steps", "modes"}
    if extra:
        raise ConfigError(f"schedule.{sorted(extra)[0]}", "unknown key")
    modes_doc = sched.get("modes")
    if not isinstance(modes_doc, list) or not modes_doc:
        raise ConfigError("schedule.modes", "expected a non-empty list of matrices")
    modes = []
    for k, M in enumerate(modes_doc):
        p = f"schedule.modes[{k}]"
        try:
            A = np.array(M, dtype=float)
        except (TypeError, ValueError):
            raise ConfigError(p, "not a numeric matrix") from None
        if A.shape != (n, n):
            raise ConfigError(p, f"expected shape ({n}, {n}) for {n} agents, got {A.shape}")
        try:
            g = gr.WeightedDigraph(A)
        except DomainError as exc:
            raise ConfigError(p, str(exc)) from None
        modes.append(g)
    dwell = _num(sched, "dwell", "schedule.", positive=True, optional=True) or 2.0
    dwell_steps = _num(sched, "dwell_steps", "schedule.", positive=True, integer=True,
                       optional=True) or 20

    trigger = doc.get("trigger")
    if trigger not in ("exact", "practical", "always"):
        raise ConfigError("trigger", "expected exact, practical or always")
    c = _num(doc, "c", "", positive=True)
    if not c < 1:
        raise ConfigError("c", "must lie in (0, 1)")
    zeta = _num(doc, "zeta", "", nonneg=True)
    if trigger == "practical" and zeta <= 0:
        raise ConfigError("zeta", "practical trigger needs zeta > 0")

    x0 = doc.get("x0")
    if x0 is not None:
        try:
            x0 = np.array(x0, dtype=float).reshape(n, dim)
        except (TypeError, ValueError):
            raise ConfigError("x0", f"expected {n} x {dim} numbers") from None
        if not np.all(np.isfinite(x0)):
            raise ConfigError("x0", "must be finite")

    return Scenario(
        specs=specs,
        modes=modes,
        dwell=dwell,
        dwell_steps=dwell_steps,
        alpha=_num(doc, "alpha", "", positive=True),
        beta=_num(doc, "beta", "", nonneg=True),
        delta=_num(doc, "delta", "", positive=True, optional=True),
        c=c,
        trigger=trigger,
        zeta=zeta,
        h=_num(doc, "h", "", positive=True),
        t_final=_num(doc, "t_final", "", nonneg=True),
        k_final=_num(doc, "k_final", "", nonneg=True, integer=True),
        seed=_num(doc, "seed", "", nonneg=True, integer=True),
        record_every=_num(doc, "record_every", "", positive=True, integer=True),
        x0=x0,
        dim=dim,
        raw=doc,
    )


def load_scenario(path):
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError("<file>", f"not valid YAML: {exc}") from None
    return parse_scenario(doc)


def paper_scenario(**overrides):
    """The five-agent benchmark, optionally with top-level fields replaced."""
    doc = copy.deepcopy(PAPER_SCENARIO)
    doc.update({k: v for k, v in overrides.items() if v is not None})
    return parse_scenario(doc)
