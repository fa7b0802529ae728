"""Watching StrictBalance freeze nodes phase by phase.

Nodes live on weight levels 1, 1e-3, 1e-6, ...  Heavy nodes get balanced
and frozen first, then the threshold drops by at least 4n^2 and the lighter
ones are handled.  The auditor checks the invariants on every step.
"""

# %%
import numpy as np

from osborne import SparseNonnegMatrix, StrictBalance, TraceAuditor, scc_decompose


def multilevel(n, rng, scale=1e-3, levels=4, density=0.6):
    while True:
        lev = rng.integers(0, levels, n)
        mask = rng.random((n, n)) < density
        np.fill_diagonal(mask, False)
        a = mask * scale ** (lev[:, None] + lev[None, :]) * np.exp(rng.uniform(-1, 1, (n, n)))
        A = SparseNonnegMatrix.from_dense(a)
        if A.nnz and scc_decompose(A).strongly_connected:
            return A


for seed in range(50):
    A = multilevel(6, np.random.default_rng(seed))
    run = StrictBalance(A, 0.1)
    aud = TraceAuditor(run)
    run.sink, run.event_sink = aud.on_step, aud.on_event
    rep = run.run()
    if rep.phases >= 2:
        break

# %%
print(f"seed {seed}: n={A.n}, phases={rep.phases}, steps={rep.steps}, exit={rep.exit}")
for ev in run.events:
    print(f"  t={ev.t:4d} s={ev.s} {ev.kind:10s} nodes={ev.indices} tau={ev.tau:.3e}")
print("thresholds:", ["%.3e" % t for t in rep.taus[1:]])

# %%
print("auditor:", aud.summary())
