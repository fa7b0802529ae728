"""Balancing in the L_2 norm through the |a|^p reduction.

Signs do not matter.  The entries are raised to the p-th power, balanced in
L_1 with a tightened tolerance, and the scaling is divided by p.
"""

# %%
import numpy as np

from osborne import canonical_epsilon, canonicalize, lp_imbalance, run_strict, uncanonicalize_scaling

rng = np.random.default_rng(5)
raw = rng.normal(size=(6, 6)) * np.exp(rng.uniform(-3, 3, (6, 6)))
np.fill_diagonal(raw, 0)

p, eps = 2, 0.05
inst = canonicalize(raw, p)
eps1 = canonical_epsilon(eps, p)
print(f"L_{p} tolerance {eps} -> L_1 tolerance {eps1:.6f}")

# %%
rep = run_strict(inst.matrix, eps1)
x = uncanonicalize_scaling(rep.x, p)
print("L_2 imbalance before:", lp_imbalance(raw, np.zeros(6), p).max())
print("L_2 imbalance after: ", lp_imbalance(raw, x, p).max())
