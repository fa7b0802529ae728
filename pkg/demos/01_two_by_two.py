"""A first balancing run on the smallest interesting matrix.

A = [[0, 4], [1, 0]] has row sums (4, 1) and column sums (1, 4).  After the
diagonal similarity D A D^-1 with D = diag(e^x) both arcs carry weight 2.
"""

# %%
import numpy as np

from osborne import SparseNonnegMatrix, f_value, gradient, run_strict, strict_imbalance

A = SparseNonnegMatrix.from_dense([[0.0, 4.0], [1.0, 0.0]])
print("f(0) =", f_value(A, np.zeros(2)), " gradient =", gradient(A, np.zeros(2)))

# %%
# One step on either index balances the pair exactly.
rep = run_strict(A, 0.01)
print("steps:", rep.steps, " exit:", rep.exit, " x:", rep.x)
print("scaled matrix:\n", np.diag(np.exp(rep.x)) @ A.to_dense() @ np.diag(np.exp(-rep.x)))
print("max imbalance:", strict_imbalance(A, rep.x).max_ratio)
