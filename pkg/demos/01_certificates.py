"""Passivity indices, stepsize bounds and gain limits for the five-agent benchmark."""

# %%
import numpy as np

from ifpopt import graph as gr
from ifpopt.objective import paper_objectives
from ifpopt.passivity import (beta_supremum, certify, dt_passivity_certificate,
                              ifp_index_dt, max_stepsize)

specs = paper_objectives()
for s in specs:
    print(f"{s.kind:>14}  mu={s.mu:<4}  lip={s.lip}")

# %% [markdown]
# Each agent gets a continuous-time index ``-1/(alpha*mu)**2`` and, for a
# forward-Euler step ``delta``, a discrete-time index. The stepsize must stay
# below a per-agent bound for the latter to exist.

# %%
d_in = gr.max_in_degrees(gr.paper_schedule())
certs = certify(specs, alpha=1.0, max_in_degree=d_in, delta=0.1)
print(" agent     nu   nu_dt  delta_max")
for c in certs:
    print(f"{c.agent:>6} {c.nu_ct:6.3f} {c.nu_dt:7.3f} {c.delta_max:10.4f}")

print("network stepsize bound:", min(c.delta_max for c in certs))
print("beta must stay below", min(c.beta_max_ct for c in certs), "(continuous time)")
print("beta must stay below", round(min(c.beta_max_dt for c in certs), 4), "(delta = 0.1)")

# %% [markdown]
# The index is the tight value for a 2x2 matrix inequality: at that index the
# determinant vanishes, and nudging it up by 0.01 breaks semidefiniteness.

# %%
nu = ifp_index_dt(1.0, 0.1, 1.0, 1.0)
ok = dt_passivity_certificate(1.0, 0.1, 1.0, 1.0, nu)
print(np.round(ok.matrix, 4), "det", f"{ok.det:.1e}", "nsd", ok.nsd)
print("nu + 0.01 nsd:", dt_passivity_certificate(1.0, 0.1, 1.0, 1.0, nu + 0.01).nsd)

# %%
# doubling alpha halves every stepsize bound
print([round(max_stepsize(2.0, s.mu, s.lip), 4) for s in specs])
print("beta sup at alpha=2:", beta_supremum([-1 / (2 * s.mu) ** 2 for s in specs], 1.0))
