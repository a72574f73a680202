"""Acceptance gate: one PASS/FAIL line per criterion.

Run ``pytest tests/test_acceptance.py -s`` to see the lines, or execute the
file directly for a summary without pytest.
"""

import time
from functools import lru_cache

import numpy as np
import pytest

from ifpopt import graph as gr
from ifpopt.ct_engine import CtConfig, dissipation_defect, run_ct
from ifpopt.dt_engine import DtConfig, one_step_dissipation, run_dt
from ifpopt.objective import paper_objectives, solve_centralized_optimum
from ifpopt.passivity import (beta_supremum, dt_passivity_certificate, ifp_index_ct,
                              ifp_index_dt, ifp_index_dt_robust, max_stepsize)
from ifpopt.trace import compute_metrics

SPECS = paper_objectives()
PUBLISHED_NU_DT = [-1.39, -1.39, -0.44, -0.59, -0.45]


def _x0():
    return np.random.default_rng(0).uniform(0.0, 1.0, size=(5, 1))


@lru_cache(maxsize=None)
def _opt():
    return solve_centralized_optimum(SPECS, 1.0, tol=1e-10)


@lru_cache(maxsize=None)
def _ct_run():
    t0 = time.perf_counter()
    tr = run_ct(CtConfig(1.0, 0.2, _x0(), h=1e-3, t_final=60.0, record_every=1),
                SPECS, gr.paper_schedule(2.0), opt=_opt())
    return tr, time.perf_counter() - t0


@lru_cache(maxsize=None)
def _dt_runs():
    t0 = time.perf_counter()
    runs = {b: run_dt(DtConfig(1.0, b, 0.1, _x0(), k_final=2000), SPECS,
                      gr.paper_schedule(20), opt=_opt())
            for b in (0.1, 0.3)}
    return runs, time.perf_counter() - t0


def c1_index_reproduction():
    got = [ifp_index_dt(1.0, 0.1, s.mu, s.lip) for s in SPECS]
    err = max(abs(g - p) for g, p in zip(got, PUBLISHED_NU_DT))
    return err <= 0.005, f"nu_dt={np.round(got, 4).tolist()} max|err|={err:.4f} (tol 0.005)"


def c2_bounds():
    dmin = min(max_stepsize(1.0, s.mu, s.lip) for s in SPECS)
    ct = beta_supremum([ifp_index_ct(1.0, s.mu) for s in SPECS], 1.0)
    dt = beta_supremum([ifp_index_dt(1.0, 0.1, s.mu, s.lip) for s in SPECS], 1.0)
    ok = abs(dmin - 0.5882) <= 1e-3 and ct == 0.5 and abs(dt - 0.3592) <= 1e-3
    return ok, f"delta_max={dmin:.4f} beta_ct={ct!r} beta_dt={dt:.4f}"


def c3_certificate_tightness():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst_det, bad = 0.0, 0
    for _ in range(1000):
        alpha = rng.uniform(0.5, 2.0)
        mu = rng.uniform(0.5, 3.0)
        lip = mu * rng.uniform(1.0, 4.0)
        delta = max_stepsize(alpha, mu, lip) * rng.uniform(0.01, 0.95)
        nu = ifp_index_dt(alpha, delta, mu, lip)
        c = dt_passivity_certificate(alpha, delta, mu, lip, nu)
        worst_det = max(worst_det, abs(c.det))
        bad += (not c.nsd) or dt_passivity_certificate(alpha, delta, mu, lip, nu + 1e-3).nsd
    dt = time.perf_counter() - t0
    ok = worst_det <= 1e-9 and bad == 0 and dt < 1.0
    return ok, f"max|det|={worst_det:.2e} (tol 1e-9) failures={bad} runtime={dt:.2f}s"


def c4_dt_dissipation():
    rng = np.random.default_rng(0)
    t0 = time.perf_counter()
    worst, robust = [], []
    for s in SPECS:
        x = rng.uniform(-5, 5, 1000)
        lam = rng.uniform(-5, 5, 1000)
        u = rng.uniform(-1, 1, 1000)
        nu = abs(ifp_index_dt(1.0, 0.1, s.mu, s.lip))
        dV, supply, u2 = one_step_dissipation(s, 1.0, 0.1, _opt(), x, lam, u)
        worst.append(float(np.max(dV - supply - nu * u2)))
        nu_r = abs(ifp_index_dt_robust(1.0, 0.1, s.mu, s.lip))
        robust.append(float(np.max(dV - supply - nu_r * u2)))
    dt = time.perf_counter() - t0
    ok = max(worst) <= 1e-8 and dt < 1.0
    # informational only: the curvature-sweep index on the same samples
    return ok, (f"max slack per agent={[f'{w:.2e}' for w in worst]} (tol 1e-8) "
                f"runtime={dt:.2f}s [robust index: {[f'{w:.1e}' for w in robust]}]")


def c5_ct_dissipation():
    # 2.5 s covers the first mode switch at t = 2 s
    t0 = time.perf_counter()
    res = {}
    for h in (1e-3, 1e-4):
        tr = run_ct(CtConfig(1.0, 0.2, _x0(), h=h, t_final=2.5), SPECS,
                    gr.paper_schedule(2.0), opt=_opt())
        res[h] = dissipation_defect(tr, SPECS, 1.0, _opt())
    dt = time.perf_counter() - t0
    (e3, f3), (e4, f4) = res[1e-3], res[1e-4]
    ok = (max(e3, 0.0) <= f3 and max(e4, 0.0) <= f4 and f3 >= 5 * f4 and dt < 30.0)
    return ok, (f"excess h=1e-3: {e3:.2e}, h=1e-4: {e4:.2e}; O(h) slack "
                f"{f3:.2e} -> {f4:.2e} (ratio {f3 / f4:.1f}, need >= 5) runtime={dt:.1f}s")


def c6_ct_convergence():
    tr, dt = _ct_run()
    m = compute_metrics(tr, lyap_tol=1e-8)
    ok = (m.final_error <= 1e-3 and m.lyapunov_violations == 0
          and m.lambda_sum_drift <= 1e-9 and dt < 10.0)
    return ok, (f"final_error={m.final_error:.2e} lyapunov_violations={m.lyapunov_violations} "
                f"lambda_drift={m.lambda_sum_drift:.1e} runtime={dt:.1f}s")


def c7_dt_convergence():
    runs, dt = _dt_runs()
    m = {b: compute_metrics(tr) for b, tr in runs.items()}
    counts = {b: sum(mm.trigger_counts) for b, mm in m.items()}
    ok = (all(mm.final_error <= 1e-3 and mm.comm_ratio < 1 for mm in m.values())
          and counts[0.3] > counts[0.1] and dt < 5.0)
    return ok, (f"final_error={[f'{m[b].final_error:.1e}' for b in (0.1, 0.3)]} "
                f"comm_ratio={[round(m[b].comm_ratio, 4) for b in (0.1, 0.3)]} "
                f"triggers={counts[0.1]} < {counts[0.3]} runtime={dt:.2f}s")


def c8_conservation_and_graphs():
    ct, _ = _ct_run()
    runs, _ = _dt_runs()
    ct_drift = float(np.abs(ct.lam.sum(axis=(1, 2))).max())
    # "exact" read as machine precision: a few ulps per step of float round-off
    dt_drift = max(float(np.abs(tr.lam.sum(axis=(1, 2))).max()) for tr in runs.values())
    s = gr.paper_schedule(2.0)
    balanced = all(gr.is_weight_balanced(mm) for mm in s.modes)
    window = gr.check_ujsc(s)
    ok = ct_drift <= 1e-9 and dt_drift <= 1e-12 and balanced and window == 1
    return ok, (f"|sum lambda| ct={ct_drift:.1e} dt={dt_drift:.1e} balanced={balanced} "
                f"ujsc_window={window}")


def c9_limit_consistency():
    rel, robust = [], []
    for s in SPECS:
        ct = ifp_index_ct(1.0, s.mu)
        rel.append(abs(ifp_index_dt(1.0, 1e-8, s.mu, s.lip) - ct) / abs(ct))
        robust.append(abs(ifp_index_dt_robust(1.0, 1e-8, s.mu, s.lip) - ct) / abs(ct))
    return max(rel) <= 1e-4, (f"relative gap per agent={[f'{r:.1e}' for r in rel]} (tol 1e-4) "
                              f"[robust index: {[f'{r:.1e}' for r in robust]}]")


CRITERIA = [
    ("1 index reproduction", c1_index_reproduction),
    ("2 bound reproduction", c2_bounds),
    ("3 certificate tightness", c3_certificate_tightness),
    ("4 DT dissipation", c4_dt_dissipation),
    ("5 CT dissipation", c5_ct_dissipation),
    ("6 CT convergence", c6_ct_convergence),
    ("7 DT convergence", c7_dt_convergence),
    ("8 conservation and graphs", c8_conservation_and_graphs),
    ("9 limit consistency", c9_limit_consistency),
]


@pytest.mark.parametrize("name,fn", CRITERIA, ids=[n.split()[0] for n, _ in CRITERIA])
def test_criterion(name, fn):
    ok, detail = fn()
    print(f"\n{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    for name, fn in CRITERIA:
        ok, detail = fn()
        print(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")
