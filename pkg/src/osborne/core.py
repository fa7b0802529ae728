"""Matrix, scaling vector and the objective ``f(x) = sum_ij a_ij exp(x_i - x_j)``.

A matrix is stored as a weighted directed graph: one arc per positive
off-diagonal entry.  Scalings live in the log domain, so the scaled matrix
``D A D^-1`` with ``D = diag(exp(x))`` has arc weights
``b_ij = a_ij * exp(x_i - x_j)``.
"""

import numpy as np

__all__ = [
    "StructuralError",
    "ScalingRangeError",
    "SparseNonnegMatrix",
    "ScaledWeights",
    "scaled_arc_weights",
    "row_col_norms",
    "f_value",
    "gradient",
    "contracted_f",
    "contracted_gradient_norm",
]

_EPS = np.finfo(float).eps


class StructuralError(ValueError):
    """The graph of the matrix cannot support the requested operation
    (typically an index with an empty row or column)."""


class ScalingRangeError(OverflowError):
    """Scaled weights left the binary64 range."""


class SparseNonnegMatrix:
    """Nonnegative matrix with zero diagonal, kept as arc arrays.

    Parameters
    ----------
    n : int
        Dimension.
    src, dst : array_like of int
        Arc endpoints, 0-based. ``src[k] -> dst[k]`` carries ``vals[k]``.
    vals : array_like of float
        Strictly positive weights.
    """

    def __init__(self, n, src, dst, vals):
        n = int(n)
        if n < 1:
            raise ValueError("dimension must be positive")
        src = np.asarray(src, dtype=np.intp).ravel()
        dst = np.asarray(dst, dtype=np.intp).ravel()
        vals = np.asarray(vals, dtype=float).ravel()
        if not (src.shape == dst.shape == vals.shape):
            raise ValueError("src, dst and vals must have equal length")
        if src.size:
            if src.min() < 0 or dst.min() < 0 or src.max() >= n or dst.max() >= n:
                raise ValueError("arc index out of range")
            if np.any(src == dst):
                raise ValueError("diagonal entries are not allowed")
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                raise ValueError("arc weights must be finite and positive")
            keys = src * n + dst
            if np.unique(keys).size != keys.size:
                raise ValueError("duplicate arcs")
        order = np.lexsort((dst, src))
        self.n = n
        self.src = src[order]
        self.dst = dst[order]
        self.vals = vals[order]
        self.log_vals = np.log(self.vals)
        for arr in (self.src, self.dst, self.vals, self.log_vals):
            arr.flags.writeable = False
        # adjacency: arc ids leaving / entering each node
        self.out_arcs = [np.flatnonzero(self.src == i) for i in range(n)]
        self.in_arcs = [np.flatnonzero(self.dst == i) for i in range(n)]

    @classmethod
    def from_dense(cls, a):
        a = np.asarray(a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("matrix must be square")
        off = ~np.eye(a.shape[0], dtype=bool)
        src, dst = np.nonzero((a > 0) & off)
        return cls(a.shape[0], src, dst, a[src, dst])

    @classmethod
    def from_entries(cls, n, entries):
        """Build from ``(i, j, a_ij)`` triples (0-based)."""
        entries = list(entries)
        if not entries:
            return cls(n, [], [], [])
        i, j, v = zip(*entries)
        return cls(n, i, j, v)

    @property
    def nnz(self):
        return self.vals.size

    @property
    def a_min(self):
        return float(self.vals.min()) if self.nnz else 0.0

    @property
    def total(self):
        """``S``, the sum of all entries."""
        return float(self.vals.sum())

    @property
    def w(self):
        """Dynamic range ``S / a_min``."""
        return self.total / self.a_min

    def to_dense(self):
        a = np.zeros((self.n, self.n))
        a[self.src, self.dst] = self.vals
        return a

    def submatrix(self, nodes):
        """Induced submatrix on ``nodes`` (renumbered in the given order)."""
        nodes = np.asarray(nodes, dtype=np.intp)
        pos = np.full(self.n, -1, dtype=np.intp)
        pos[nodes] = np.arange(nodes.size)
        keep = (pos[self.src] >= 0) & (pos[self.dst] >= 0)
        return SparseNonnegMatrix(
            nodes.size, pos[self.src[keep]], pos[self.dst[keep]], self.vals[keep]
        )

    def __repr__(self):
        return f"SparseNonnegMatrix(n={self.n}, nnz={self.nnz})"


def _check_x(A, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (A.n,):
        raise ValueError(f"scaling vector has shape {x.shape}, expected ({A.n},)")
    return x


def scaled_arc_weights(A, x):
    """Per-arc ``b_ij = a_ij exp(x_i - x_j)``, freshly computed."""
    x = _check_x(A, x)
    with np.errstate(over="ignore"):
        b = A.vals * np.exp(x[A.src] - x[A.dst])
    if not np.all(np.isfinite(b)):
        raise ScalingRangeError("scaled weights overflow; x is out of range")
    return b


def row_col_norms(A, x):
    """Row sums ``r`` and column sums ``c`` of the scaled matrix."""
    b = scaled_arc_weights(A, x)
    r = np.bincount(A.src, weights=b, minlength=A.n)
    c = np.bincount(A.dst, weights=b, minlength=A.n)
    return r, c


def f_value(A, x):
    """Sum of entries of ``D A D^-1``."""
    f = float(scaled_arc_weights(A, x).sum())
    if not np.isfinite(f):
        raise ScalingRangeError("f overflows; x is out of range")
    return f


def gradient(A, x):
    """Out-weight minus in-weight at every node of the scaled graph."""
    r, c = row_col_norms(A, x)
    return r - c


def _as_mask(n, B):
    if isinstance(B, np.ndarray) and B.dtype == bool:
        if B.shape != (n,):
            raise ValueError("mask has the wrong shape")
        return B
    mask = np.zeros(n, dtype=bool)
    idx = np.fromiter(B, dtype=np.intp)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("contracted set index out of range")
    mask[idx] = True
    return mask


def contracted_f(A, x, B=()):
    """``f`` restricted to arcs with at least one endpoint outside ``B``.

    ``B`` may be an iterable of indices or a boolean mask.
    """
    inB = _as_mask(A.n, B)
    b = scaled_arc_weights(A, x)
    keep = ~(inB[A.src] & inB[A.dst])
    return float(b[keep].sum())


def contracted_gradient_norm(A, x, B=()):
    """L1 norm of the gradient of the contracted objective.

    The contracted graph has one node per index outside ``B`` plus a single
    super-node standing for ``B``.  Every arc of an active node survives the
    contraction, so its component is the ordinary ``r_i - c_i``; the
    super-node's component is minus their sum.  With ``B`` empty there is no
    super-node.
    """
    inB = _as_mask(A.n, B)
    if inB.all():
        raise StructuralError("contracting every index leaves no graph")
    g = gradient(A, x)[~inB]
    norm = float(np.abs(g).sum())
    if inB.any():
        norm += abs(float(g.sum()))
    return norm


class ScaledWeights:
    """Incrementally maintained scaled arc weights, row/column sums and ``f``.

    Owns the scaling vector ``x``.  A balancing step touches only the arcs
    of one node; everything is rebuilt from scratch every ``n**2`` steps or
    once the rounding budget reaches ``1e-10 * f``.
    """

    drift_tol = 1e-10

    def __init__(self, A, x=None):
        self.A = A
        self.x = np.zeros(A.n) if x is None else _check_x(A, x).copy()
        self.refresh_every = max(A.n * A.n, 1)
        self.refreshes = 0
        self.refresh()

    def refresh(self):
        A = self.A
        self.b = scaled_arc_weights(A, self.x)
        self.r = np.bincount(A.src, weights=self.b, minlength=A.n)
        self.c = np.bincount(A.dst, weights=self.b, minlength=A.n)
        self.f = float(self.b.sum())
        self._since_refresh = 0
        self._drift = 0.0
        self.refreshes += 1

    @property
    def weight(self):
        """Node weights ``r_i + c_i``."""
        return self.r + self.c

    def drops(self):
        """Per-index decrease of ``f`` a balancing step would achieve."""
        return (np.sqrt(self.c) - np.sqrt(self.r)) ** 2

    def balance(self, i):
        """Balance index ``i`` in place.

        Returns ``(alpha, drop, r_old, c_old)`` where ``alpha`` is the change
        of ``x_i`` and ``drop = (sqrt(c_i) - sqrt(r_i))**2`` is the exact
        decrease of ``f``.
        """
        A = self.A
        r_old = float(self.r[i])
        c_old = float(self.c[i])
        if not (r_old > 0.0 and c_old > 0.0):
            raise StructuralError(
                f"index {i} has row norm {r_old} and column norm {c_old}; "
                "it cannot be balanced"
            )
        alpha = 0.5 * (np.log(c_old) - np.log(r_old))
        drop = (np.sqrt(c_old) - np.sqrt(r_old)) ** 2
        self.x[i] += alpha
        x = self.x
        out, inc = A.out_arcs[i], A.in_arcs[i]
        with np.errstate(over="ignore"):
            nb_out = A.vals[out] * np.exp(x[i] - x[A.dst[out]])
            nb_in = A.vals[inc] * np.exp(x[A.src[inc]] - x[i])
        if not (np.all(np.isfinite(nb_out)) and np.all(np.isfinite(nb_in))):
            raise ScalingRangeError("scaled weights overflow; x is out of range")
        # arcs are unique, so neighbour indices within each group are distinct
        self.c[A.dst[out]] += nb_out - self.b[out]
        self.r[A.src[inc]] += nb_in - self.b[inc]
        self.b[out] = nb_out
        self.b[inc] = nb_in
        r_new = float(nb_out.sum())
        c_new = float(nb_in.sum())
        self.r[i] = r_new
        self.c[i] = c_new
        self.f += (r_new + c_new) - (r_old + c_old)
        self._since_refresh += 1
        self._drift += _EPS * (r_old + c_old + r_new + c_new) * (1 + out.size + inc.size)
        if self._since_refresh >= self.refresh_every or self._drift > self.drift_tol * self.f:
            self.refresh()
        return alpha, drop, r_old, c_old

    def max_drift(self):
        """Largest relative deviation of the cached state from a fresh rebuild."""
        r, c = row_col_norms(self.A, self.x)
        f = float(r.sum())
        scale = np.maximum(r + c, np.finfo(float).tiny)
        return max(
            float(np.max(np.abs(self.r - r) / scale)) if self.A.n else 0.0,
            float(np.max(np.abs(self.c - c) / scale)) if self.A.n else 0.0,
            abs(self.f - f) / f if f else 0.0,
        )
