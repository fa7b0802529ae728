"""Step counts of the four index-selection rules on one random matrix."""

# %%
import numpy as np

from osborne import SparseNonnegMatrix, VariantPolicy, run_classic, run_strict

rng = np.random.default_rng(1)
a = np.exp(rng.uniform(0, np.log(1e3), (16, 16))) * (rng.random((16, 16)) < 0.4)
np.fill_diagonal(a, 0)
a[np.arange(16), (np.arange(16) + 1) % 16] += 1.0  # a Hamiltonian cycle keeps it irreducible
A = SparseNonnegMatrix.from_dense(a)

# %%
for eps in (0.1, 0.01):
    print(f"eps = {eps}")
    for kind in ("round_robin", "greedy", "uniform_random"):
        rep = run_classic(A, VariantPolicy(kind, seed=7), eps, 10**6, keep_trace=False)
        print(f"  {kind:15s} steps={rep.steps:6d} max_imbalance={rep.max_imbalance:.2e}")
    rep = run_strict(A, eps, keep_trace=False)
    print(f"  {'strict':15s} steps={rep.steps:6d} max_imbalance={rep.max_imbalance:.2e}")
