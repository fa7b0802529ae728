"""Reduction of raw matrices to nonnegative zero-diagonal L1 instances and
strongly connected component analysis."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import SparseNonnegMatrix

__all__ = [
    "CanonicalInstance",
    "SccDecomposition",
    "canonicalize",
    "canonical_epsilon",
    "scc_decompose",
    "uncanonicalize_scaling",
]


@dataclass(frozen=True)
class CanonicalInstance:
    """An L1 balancing problem equivalent to balancing ``raw`` in the L_p norm."""

    matrix: SparseNonnegMatrix
    p: float = 1.0
    negative_entries: int = 0
    diagonal_dropped: int = 0

    @property
    def n(self):
        return self.matrix.n

    @property
    def trivial(self):
        """True when there is nothing to balance (no off-diagonal entries)."""
        return self.matrix.nnz == 0

    @property
    def a_min(self):
        return self.matrix.a_min if not self.trivial else None

    @property
    def total(self):
        return self.matrix.total

    @property
    def w(self):
        return self.matrix.w if not self.trivial else None


def canonicalize(raw, p=1.0):
    """Strip signs and the diagonal and raise entries to the power ``p``.

    ``raw`` may be a dense array-like or a scipy sparse matrix.
    """
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    if sp.issparse(raw):
        coo = sp.coo_matrix(raw)
        coo.sum_duplicates()
        n, m = coo.shape
        i, j, v = coo.row, coo.col, coo.data
    else:
        a = np.asarray(raw, dtype=float)
        if a.ndim != 2:
            raise ValueError("matrix must be two-dimensional")
        n, m = a.shape
        i, j = np.nonzero(a)
        v = a[i, j]
    if n != m:
        raise ValueError(f"matrix must be square, got {n}x{m}")
    if n < 1:
        raise ValueError("matrix is empty")
    if not np.all(np.isfinite(v)):
        raise ValueError("matrix has non-finite entries")
    diag = i == j
    off = ~diag & (v != 0)
    vals = np.abs(v[off]) ** p
    mat = SparseNonnegMatrix(n, i[off], j[off], vals)
    return CanonicalInstance(
        matrix=mat,
        p=p,
        negative_entries=int(np.count_nonzero(v[off] < 0)),
        diagonal_dropped=int(np.count_nonzero(diag & (v != 0))),
    )


def canonical_epsilon(eps, p):
    """Tolerance for the L1 run that gives ``eps`` in the L_p norms."""
    if p == 1:
        return float(eps)
    return (1.0 + eps) ** p - 1.0


def uncanonicalize_scaling(x, p):
    """Map an L1 scaling of the ``p``-th power matrix back to the raw matrix."""
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return np.asarray(x, dtype=float) / p


@dataclass
class SccDecomposition:
    """Strongly connected components numbered in topological order: every
    cross arc runs from a lower to a higher component id."""

    labels: np.ndarray
    components: list
    submatrices: list
    cross_arcs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))

    @property
    def count(self):
        return len(self.components)

    @property
    def strongly_connected(self):
        return len(self.components) == 1


def _tarjan(n, succ):
    """Iterative Tarjan; yields components in reverse topological order."""
    index = np.full(n, -1, dtype=np.intp)
    low = np.zeros(n, dtype=np.intp)
    on_stack = np.zeros(n, dtype=bool)
    stack = []
    counter = 0
    for root in range(n):
        if index[root] >= 0:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, k = work[-1]
            nbrs = succ[v]
            if k < len(nbrs):
                work[-1] = (v, k + 1)
                u = nbrs[k]
                if index[u] < 0:
                    index[u] = low[u] = counter
                    counter += 1
                    stack.append(u)
                    on_stack[u] = True
                    work.append((u, 0))
                elif on_stack[u]:
                    low[v] = min(low[v], index[u])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    u = stack.pop()
                    on_stack[u] = False
                    comp.append(u)
                    if u == v:
                        break
                yield sorted(comp)


def scc_decompose(A):
    succ = [A.dst[arcs].tolist() for arcs in A.out_arcs]
    comps = list(_tarjan(A.n, succ))[::-1]
    labels = np.empty(A.n, dtype=np.intp)
    for k, comp in enumerate(comps):
        labels[comp] = k
    components = [np.asarray(c, dtype=np.intp) for c in comps]
    cross = np.flatnonzero(labels[A.src] != labels[A.dst])
    return SccDecomposition(
        labels=labels,
        components=components,
        submatrices=[A.submatrix(c) for c in components],
        cross_arcs=cross,
    )
