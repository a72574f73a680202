"""Command-line entry point.

Exit codes: 0 success, 1 bad configuration, 2 certification failure,
3 divergence, 4 a reproduction check did not hold.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import graph as gr
from .ct_engine import CtConfig, run_ct
from .dt_engine import DtConfig, run_dt
from .exceptions import (AssumptionViolation, ConfigError, DivergenceError,
                         GainConditionError, StepsizeTooLarge)
from .objective import solve_centralized_optimum
from .passivity import beta_supremum, certify, ifp_index_dt_robust
from .scenario import PAPER_SCENARIO, load_scenario, parse_scenario
from .trace import compute_metrics, write_metrics_json, write_trace_csv
from .trigger import TriggerPolicy

EXIT_OK, EXIT_CONFIG, EXIT_CERT, EXIT_DIVERGED, EXIT_REPRO = 0, 1, 2, 3, 4

SWEEP_COLUMNS = ("index", "beta", "delta", "status", "final_error", "consensus_gap",
                 "comm_ratio", "total_triggers", "lyapunov_violations")


@dataclass
class Verdict:
    name: str
    ok: bool
    detail: str


# --- certification -----------------------------------------------------------

def certify_scenario(sc, mode="both", index_rule="paper"):
    """Certificates and pass/fail verdicts for a scenario.

    ``mode`` selects which conditions are checked: ``"ct"``, ``"dt"`` or
    ``"both"``. DT checks are skipped when the scenario has no ``delta``.
    """
    verdicts = []
    ct_sched = sc.ct_schedule()
    try:
        window = gr.check_ujsc(ct_sched)
        verdicts.append(Verdict("graph", window is not None,
                                f"every mode weight-balanced; jointly strongly connected over "
                                f"{window} consecutive mode(s)" if window else
                                "union over a full period is not strongly connected"))
    except AssumptionViolation as exc:
        verdicts.append(Verdict("graph", False, str(exc)))

    d = gr.max_in_degrees(ct_sched)
    delta = sc.delta if mode in ("dt", "both") else None
    certs = certify(sc.specs, sc.alpha, d, delta=delta)
    if index_rule == "robust" and delta is not None:
        for c in certs:
            if c.nu_dt is not None:
                c.nu_dt = ifp_index_dt_robust(sc.alpha, delta, c.mu, c.lip)
                c.beta_max_dt = beta_supremum([c.nu_dt], d[c.agent])

    if mode in ("ct", "both"):
        sup = min(c.beta_max_ct for c in certs)
        verdicts.append(Verdict("ct-gain", sc.beta < sup,
                                f"beta={sc.beta:g} must be below {sup:.4g}"))
    if delta is not None:
        bounds = [c.delta_max for c in certs]
        k = int(np.argmin(bounds))
        ok = delta < bounds[k]
        verdicts.append(Verdict("dt-stepsize", ok,
                                f"delta={delta:g} must be below {bounds[k]:.4f} (agent {k})"))
        if ok:
            sup = min(c.beta_max_dt for c in certs)
            verdicts.append(Verdict("dt-gain", sc.beta < sup,
                                    f"beta={sc.beta:g} must be below {sup:.4g}"))
    return certs, verdicts


def _fmt(v, width=11):
    if v is None:
        return "-".rjust(width)
    if np.isinf(v):
        return "inf".rjust(width)
    return f"{v:.4f}".rjust(width)


def certificate_text(certs, verdicts):
    head = ["agent", "mu", "l", "nu", "nu_dt", "delta_max", "beta_ct", "beta_dt"]
    lines = ["".join(h.rjust(11) for h in head)]
    for c in certs:
        lines.append(str(c.agent).rjust(11) + "".join(
            _fmt(v) for v in (c.mu, c.lip, c.nu_ct, c.nu_dt, c.delta_max,
                              c.beta_max_ct, c.beta_max_dt)))
    lines.append("")
    for v in verdicts:
        lines.append(f"{'PASS' if v.ok else 'FAIL'}  {v.name:<12} {v.detail}")
    return "\n".join(lines) + "\n"


def certificate_json(certs, verdicts):
    return {
        "agents": [c.to_dict() for c in certs],
        "verdicts": [{"name": v.name, "ok": v.ok, "detail": v.detail} for v in verdicts],
        "ok": all(v.ok for v in verdicts),
    }


# --- scenario assembly -------------------------------------------------------

def _scenario(args):
    doc = dict(PAPER_SCENARIO)
    if args.config:
        sc = load_scenario(args.config)
        doc = sc.raw
    over = {"seed": args.seed, "beta": args.beta, "delta": args.delta}
    if args.zeta is not None:
        over["zeta"] = args.zeta
        over["trigger"] = "practical" if args.zeta > 0 else "exact"
    if args.no_trigger:
        over["trigger"] = "always"
    doc = dict(doc)
    doc.update({k: v for k, v in over.items() if v is not None})
    return parse_scenario(doc)


def _policy(sc):
    return TriggerPolicy(c=sc.c, zeta=sc.zeta, mode=sc.trigger)


def _simulate(sc, mode, force=False, index_rule="paper"):
    x0 = sc.initial_states()
    opt = solve_centralized_optimum(sc.specs, sc.alpha, tol=1e-10)
    if mode == "ct":
        cfg = CtConfig(alpha=sc.alpha, beta=sc.beta, x0=x0, h=sc.h, t_final=sc.t_final,
                       record_every=sc.record_every, force=force)
        return run_ct(cfg, sc.specs, sc.ct_schedule(), _policy(sc), opt)
    cfg = DtConfig(alpha=sc.alpha, beta=sc.beta, delta=sc.delta, x0=x0, k_final=sc.k_final,
                   force=force, index_rule=index_rule)
    return run_dt(cfg, sc.specs, sc.dt_schedule(), _policy(sc), opt)


def _run_into(sc, mode, out, force, index_rule, quiet=False):
    """Certify, simulate and write outputs. Returns ``(exit_code, metrics)``."""
    certs, verdicts = certify_scenario(sc, mode, index_rule)
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "certificate.txt"), "w") as fh:
        fh.write(certificate_text(certs, verdicts))
    failed = [v for v in verdicts if not v.ok]
    if failed and not force:
        for v in failed:
            print(f"certification failed: {v.name}: {v.detail}", file=sys.stderr)
        return EXIT_CERT, None
    try:
        trace = _simulate(sc, mode, force, index_rule)
    except DivergenceError as exc:
        print(f"diverged: {exc}; last good step {exc.step - 1}", file=sys.stderr)
        return EXIT_DIVERGED, None
    m = compute_metrics(trace)
    m.extra = {"mode": mode, "alpha": sc.alpha, "beta": sc.beta, "seed": sc.seed,
               "delta": sc.delta if mode == "dt" else None, "trigger": sc.trigger}
    write_trace_csv(trace, os.path.join(out, "trace.csv"))
    write_metrics_json(m, os.path.join(out, "metrics.json"))
    if not quiet:
        print(f"{mode}: final_error={m.final_error:.3e} comm_ratio={m.comm_ratio:.4f} "
              f"triggers={m.trigger_counts} lyapunov_violations={m.lyapunov_violations} "
              f"-> {out}")
    return EXIT_OK, m


# --- subcommands -------------------------------------------------------------

def cmd_check(args):
    sc = _scenario(args)
    certs, verdicts = certify_scenario(sc, "both", args.index_rule)
    if args.json:
        print(json.dumps(certificate_json(certs, verdicts), indent=2, sort_keys=True))
    else:
        sys.stdout.write(certificate_text(certs, verdicts))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "certificate.txt"), "w") as fh:
            fh.write(certificate_text(certs, verdicts))
    return EXIT_OK if all(v.ok for v in verdicts) else EXIT_CERT


def cmd_run(args, mode):
    sc = _scenario(args)
    out = args.out or os.path.join("runs", mode)
    code, _ = _run_into(sc, mode, out, args.force, args.index_rule)
    return code


def _parse_grid(text):
    if text is None:
        return None
    return [float(t) for t in text.split(",") if t.strip()]


def _sweep_point(job):
    index, raw, beta, delta, mode, force, index_rule = job
    doc = dict(raw)
    doc["beta"] = beta
    if delta is not None:
        doc["delta"] = delta
    row = dict.fromkeys(SWEEP_COLUMNS, "")
    row.update(index=index, beta=beta, delta="" if delta is None else delta)
    sc = parse_scenario(doc)
    _, verdicts = certify_scenario(sc, mode, index_rule)
    failed = [v for v in verdicts if not v.ok]
    if failed and not force:
        row["status"] = "skipped: " + "; ".join(f"{v.name}: {v.detail}" for v in failed)
        return row
    try:
        trace = _simulate(sc, mode, force, index_rule)
    except (DivergenceError, StepsizeTooLarge, GainConditionError) as exc:
        row["status"] = f"failed: {exc}"
        return row
    m = compute_metrics(trace)
    row.update(status="ok", final_error=m.final_error, consensus_gap=m.consensus_gap,
               comm_ratio=m.comm_ratio, total_triggers=int(sum(m.trigger_counts)),
               lyapunov_violations=m.lyapunov_violations)
    return row


def sweep(raw, betas, deltas, mode="dt", force=False, index_rule="paper", jobs=1):
    """Run every grid point and return rows ordered by grid index."""
    if mode == "ct":
        deltas = [None]
    grid = list(product(betas, deltas))
    jobs_in = [(i, raw, b, d, mode, force, index_rule) for i, (b, d) in enumerate(grid)]
    if jobs > 1 and len(jobs_in) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_point, jobs_in))
    else:
        rows = [_sweep_point(j) for j in jobs_in]
    return rows


def _cell(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def cmd_sweep(args):
    sc = _scenario(args)
    betas = _parse_grid(args.betas)
    deltas = _parse_grid(args.deltas)
    if betas is None:
        betas = [sc.beta]
    if deltas is None:
        deltas = [sc.delta]
    rows = sweep(sc.raw, betas, deltas, args.mode, args.force, args.index_rule, args.jobs)
    out = args.out or os.path.join("runs", "sweep")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "sweep.csv"), "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([_cell(r[c]) for c in SWEEP_COLUMNS])
    print("  ".join(SWEEP_COLUMNS))
    for r in rows:
        if r["status"] != "ok":
            print(f"warning: point {r['index']} (beta={r['beta']}, delta={r['delta']}) "
                  f"{r['status']}", file=sys.stderr)
        print("  ".join(_cell(r[c]) for c in SWEEP_COLUMNS))
    return EXIT_OK


def cmd_reproduce(args):
    """Default scenario end to end: CT at the scenario gain, DT at two gains."""
    base = args.out or os.path.join("runs", "reproduce")
    checks = []
    code = EXIT_OK
    if args.which in ("ct", "all"):
        sc = _scenario(args)
        c, m = _run_into(sc, "ct", os.path.join(base, "ct"), args.force, args.index_rule)
        if c:
            return c
        checks.append(("ct final_error <= 1e-3", m.final_error <= 1e-3))
        checks.append(("ct lyapunov_violations == 0", m.lyapunov_violations == 0))
    if args.which in ("dt", "all"):
        betas = [args.beta] if args.beta is not None else [0.1, 0.3]
        counts = []
        for b in betas:
            args_b = argparse.Namespace(**{**vars(args), "beta": b})
            sc = _scenario(args_b)
            c, m = _run_into(sc, "dt", os.path.join(base, f"dt_beta{b:g}"), args.force,
                             args.index_rule)
            if c:
                return c
            counts.append(sum(m.trigger_counts))
            checks.append((f"dt beta={b:g} final_error <= 1e-3", m.final_error <= 1e-3))
            checks.append((f"dt beta={b:g} comm_ratio < 1", m.comm_ratio < 1))
        if len(betas) > 1:
            order = np.argsort(betas)
            ok = all(counts[order[i]] < counts[order[i + 1]] for i in range(len(order) - 1))
            checks.append(("dt trigger count grows with beta", ok))
    for name, ok in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    if not all(ok for _, ok in checks):
        code = EXIT_REPRO
    return code


# --- argument parsing --------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="ifpopt", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="scenario YAML (default: built-in)")
    common.add_argument("--seed", type=int)
    common.add_argument("--force", action="store_true", help="run even if certification fails")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--beta", type=float)
    common.add_argument("--delta", type=float)
    common.add_argument("--zeta", type=float, help="positive value selects the floored trigger")
    common.add_argument("--no-trigger", action="store_true", help="broadcast at every check")
    common.add_argument("--index-rule", choices=("paper", "robust"), default="paper",
                        help="DT passivity index used for certification and triggering")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("check", parents=[common], help="print the passivity certificate")
    s.add_argument("--json", action="store_true")
    s.set_defaults(func=cmd_check)
    s = sub.add_parser("run-ct", parents=[common], help="continuous-time simulation")
    s.set_defaults(func=lambda a: cmd_run(a, "ct"))
    s = sub.add_parser("run-dt", parents=[common], help="discrete-time simulation")
    s.set_defaults(func=lambda a: cmd_run(a, "dt"))
    s = sub.add_parser("sweep", parents=[common], help="grid over beta and delta")
    s.add_argument("--betas", help="comma-separated; empty string gives an empty grid")
    s.add_argument("--deltas", help="comma-separated (DT only)")
    s.add_argument("--mode", choices=("ct", "dt"), default="dt")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)
    s = sub.add_parser("reproduce-paper", parents=[common],
                       help="run the five-agent benchmark and check its properties")
    s.add_argument("which", nargs="?", choices=("ct", "dt", "all"), default="all")
    s.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
