"""Brute-force minimizer of ``f`` for small matrices.

Test support, not a production balancer.  It shares no code with the rest
of the package: the matrix is dense and every row and column sum is
recomputed from scratch before each coordinate update.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["OracleSolution", "OracleFailure", "brute_minimize"]

MAX_N = 16


class OracleFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class OracleSolution:
    x: np.ndarray
    f: float
    grad_norm: float
    iterations: int


def _dense(A):
    if hasattr(A, "to_dense"):
        return A.to_dense()
    a = np.array(A, dtype=float)
    np.fill_diagonal(a, 0.0)
    return a


def brute_minimize(A, tolerance=1e-12, x0=None, max_steps=10**9):
    """Cyclic exact coordinate minimization of ``f`` until
    ``||grad f||_1 <= tolerance * f``.

    The returned ``x`` is shifted so that ``x[0] == 0``.
    """
    a = _dense(A)
    n = a.shape[0]
    if n > MAX_N:
        raise ValueError(f"oracle is limited to n <= {MAX_N}")
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    steps = 0
    while True:
        e = np.exp(x)
        b = e[:, None] * a / e[None, :]
        r, c = b.sum(axis=1), b.sum(axis=0)
        f = b.sum()
        g = np.abs(r - c).sum()
        if not np.isfinite(g / f):
            raise OracleFailure("iterate left the representable range")
        if g <= tolerance * f:
            break
        if steps >= max_steps:
            raise OracleFailure(f"no convergence after {steps} steps (grad/f = {g / f:.3e})")
        for i in range(n):
            e = np.exp(x)
            out = e[i] * np.dot(a[i], 1.0 / e)
            inc = np.dot(a[:, i], e) / e[i]
            if out <= 0 or inc <= 0:
                raise OracleFailure(f"index {i} has an empty row or column")
            x[i] += 0.5 * (np.log(inc) - np.log(out))
        steps += n
    x = x - x[0]
    e = np.exp(x)
    b = e[:, None] * a / e[None, :]
    f = float(b.sum())
    return OracleSolution(
        x=x, f=f, grad_norm=float(np.abs(b.sum(axis=1) - b.sum(axis=0)).sum()), iterations=steps
    )
