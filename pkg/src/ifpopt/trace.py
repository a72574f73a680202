"""Simulation traces, run metrics and their on-disk formats."""

import csv
import json
from dataclasses import dataclass, asdict, field
from typing import Optional

import numpy as np

__all__ = ["SimulationTrace", "RunMetrics", "compute_metrics", "write_trace_csv",
           "write_metrics_json", "METRICS_KEYS"]

LYAPUNOV_TOL = 1e-8


@dataclass
class SimulationTrace:
    """Sampled run history.

    Arrays are indexed ``[sample, agent, component]``. ``u`` holds the input
    applied over the step that starts at each sample. ``triggered[s, i]`` is
    true if agent ``i`` broadcast at any check since the previous sample.
    ``storage`` holds per-agent storage values; ``V_total`` sums them.
    """

    kind: str
    time: np.ndarray
    x: np.ndarray
    lam: np.ndarray
    xhat: np.ndarray
    u: np.ndarray
    triggered: np.ndarray
    storage: np.ndarray
    trigger_counts: np.ndarray
    eligible_counts: np.ndarray
    x_star: np.ndarray
    step: float
    nu_mags: np.ndarray
    z: Optional[np.ndarray] = None

    @property
    def V_total(self):
        return self.storage.sum(axis=1)

    @property
    def n_agents(self):
        return self.x.shape[1]

    @property
    def dim(self):
        return self.x.shape[2]


@dataclass
class RunMetrics:
    final_error: float
    consensus_gap: float
    trigger_counts: list
    eligible_counts: list
    agent_comm_ratio: list
    comm_ratio: float
    lyapunov_violations: int
    max_lyapunov_increase: float
    lambda_sum_drift: float
    x_star: list
    samples: int
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


METRICS_KEYS = tuple(RunMetrics.__dataclass_fields__)


def compute_metrics(trace, lyap_tol=LYAPUNOV_TOL):
    xf = trace.x[-1]
    final_error = float(np.max(np.linalg.norm(xf - trace.x_star[None, :], axis=1)))
    diffs = xf[:, None, :] - xf[None, :, :]
    consensus_gap = float(np.max(np.linalg.norm(diffs, axis=2)))
    counts = np.asarray(trace.trigger_counts)
    elig = np.asarray(trace.eligible_counts)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_agent = np.where(elig > 0, counts / np.maximum(elig, 1), 0.0)
    total_elig = int(elig.sum())
    comm_ratio = float(counts.sum() / total_elig) if total_elig else 0.0
    V = trace.V_total
    dV = np.diff(V)
    lam_sum = trace.lam.sum(axis=1)
    drift = float(np.max(np.abs(lam_sum - lam_sum[0]))) if len(lam_sum) else 0.0
    return RunMetrics(
        final_error=final_error,
        consensus_gap=consensus_gap,
        trigger_counts=counts.tolist(),
        eligible_counts=elig.tolist(),
        agent_comm_ratio=per_agent.tolist(),
        comm_ratio=comm_ratio,
        lyapunov_violations=int(np.sum(dV > lyap_tol)),
        max_lyapunov_increase=float(dV.max()) if dV.size else 0.0,
        lambda_sum_drift=drift,
        x_star=trace.x_star.tolist(),
        samples=int(len(trace.time)),
    )


def _cols(name, m):
    return [name] if m == 1 else [f"{name}_{k}" for k in range(m)]


def write_trace_csv(trace, path):
    """Long-format CSV, one row per (sample, agent).

    Columns: ``t`` (or ``k``), ``agent``, ``x``, ``lambda``, ``xhat``,
    ``z`` (discrete time only), ``triggered``, ``V_total``. Vector
    components get ``_0``, ``_1``... suffixes when the dimension exceeds 1.
    Floats are written with ``repr`` so files are byte-reproducible.
    """
    m = trace.dim
    time_col = "t" if trace.kind == "ct" else "k"
    header = [time_col, "agent"] + _cols("x", m) + _cols("lambda", m) + _cols("xhat", m)
    if trace.z is not None:
        header += _cols("z", m)
    header += ["triggered", "V_total"]
    V = trace.V_total
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for s, t in enumerate(trace.time):
            ts = repr(float(t)) if trace.kind == "ct" else str(int(t))
            vs = repr(float(V[s]))
            for i in range(trace.n_agents):
                row = [ts, str(i)]
                row += [repr(float(v)) for v in trace.x[s, i]]
                row += [repr(float(v)) for v in trace.lam[s, i]]
                row += [repr(float(v)) for v in trace.xhat[s, i]]
                if trace.z is not None:
                    row += [repr(float(v)) for v in trace.z[s, i]]
                row += [str(int(trace.triggered[s, i])), vs]
                w.writerow(row)


def write_metrics_json(metrics, path):
    with open(path, "w") as fh:
        json.dump(metrics.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
