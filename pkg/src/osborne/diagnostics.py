"""Imbalance metrics and checkers for the identities a balancing run obeys."""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import StructuralError, f_value, row_col_norms, scaled_arc_weights

__all__ = [
    "ImbalanceReport",
    "strict_imbalance",
    "lp_imbalance",
    "similarity_invariants",
    "cycle_product_check",
    "weight_envelope",
    "optimality_gap_bound",
    "TraceAuditor",
]


@dataclass(frozen=True)
class ImbalanceReport:
    """``ratios[i] = max(r_i, c_i) / min(r_i, c_i) - 1``; ``weak`` is
    ``||c - r||_2 / S`` and ``grad_rel`` is ``||grad f||_1 / f``."""

    ratios: np.ndarray
    max_ratio: float
    weak: float
    grad_rel: float

    def balanced(self, eps):
        return self.max_ratio <= eps


def strict_imbalance(A, x):
    r, c = row_col_norms(A, x)
    bad = np.flatnonzero((r <= 0) | (c <= 0))
    if bad.size:
        raise StructuralError(f"index {int(bad[0])} has an empty row or column")
    ratios = np.maximum(r, c) / np.minimum(r, c) - 1.0
    f = float(r.sum())
    d = c - r
    return ImbalanceReport(
        ratios=ratios,
        max_ratio=float(ratios.max()),
        weak=float(np.sqrt(d @ d)) / A.total,
        grad_rel=float(np.abs(d).sum()) / f,
    )


def lp_imbalance(raw, x, p):
    """Per-index ``max/min - 1`` of the L_p row and column norms of
    ``D raw D^-1`` (diagonal ignored), with ``D = diag(exp(x))``."""
    a = np.abs(np.asarray(raw, dtype=float))
    a = a * (1.0 - np.eye(a.shape[0]))
    x = np.asarray(x, dtype=float)
    b = a * np.exp(x[:, None] - x[None, :])
    r = (b**p).sum(axis=1) ** (1.0 / p)
    c = (b**p).sum(axis=0) ** (1.0 / p)
    return np.maximum(r, c) / np.minimum(r, c) - 1.0


def similarity_invariants(A_raw, x, k_max):
    """``tr(B^k) - tr(A^k)`` for ``k = 1..k_max`` with ``B = D A D^-1``.

    Dense powers; ``A_raw`` is a dense array or :class:`SparseNonnegMatrix`.
    """
    a = A_raw.to_dense() if hasattr(A_raw, "to_dense") else np.asarray(A_raw, dtype=float)
    n = a.shape[0]
    if n > 64:
        raise NotImplementedError("dense similarity check supports n <= 64")
    if not 1 <= k_max <= n:
        raise ValueError("k_max must lie in 1..n")
    x = np.asarray(x, dtype=float)
    d = np.exp(x)
    b = d[:, None] * a / d[None, :]
    out = np.empty(k_max)
    pa, pb = np.eye(n), np.eye(n)
    for k in range(k_max):
        pa = pa @ a
        pb = pb @ b
        out[k] = np.trace(pb) - np.trace(pa)
    return out


def cycle_product_check(A, x, cycle):
    """Product of scaled weights along ``cycle`` divided by the product of
    the original weights; exactly 1 for any scaling."""
    cycle = [int(i) for i in cycle]
    if len(cycle) < 2:
        raise ValueError("a cycle needs at least two nodes")
    keys = A.src * A.n + A.dst
    order = np.argsort(keys)
    arcs = []
    for u, v in zip(cycle, cycle[1:] + cycle[:1]):
        k = np.searchsorted(keys[order], u * A.n + v)
        if k >= keys.size or keys[order][k] != u * A.n + v:
            raise ValueError(f"({u}, {v}) is not an arc")
        arcs.append(order[k])
    arcs = np.asarray(arcs)
    b = scaled_arc_weights(A, x)
    return float(np.exp(np.log(b[arcs]).sum() - A.log_vals[arcs].sum()))


def weight_envelope(A):
    """``(lo, hi)`` bounds every scaled arc weight obeys after any sequence
    of balancing steps started from the identity scaling."""
    S = A.total
    lo = math.exp(A.n * (math.log(A.a_min) - math.log(S)) + math.log(S))
    return lo, S


def optimality_gap_bound(A, x):
    """``(n / 2) * ||grad f(x)||_1``, an upper bound on ``f(x) - min f``."""
    r, c = row_col_norms(A, x)
    return 0.5 * A.n * float(np.abs(r - c).sum())


@dataclass
class TraceAuditor:
    """Checks a StrictBalance run step by step against fresh recomputation.

    Attach with ``run.sink = auditor.on_step`` and
    ``run.event_sink = auditor.on_event``.  Each check counts how many
    samples it saw and keeps the first few failures.
    """

    run: object
    rtol: float = 1e-9
    checked: dict = field(default_factory=dict)
    failures: dict = field(default_factory=dict)
    every: int = 1

    def __post_init__(self):
        A = self.run.A
        self.lo, self.hi = weight_envelope(A)
        self._f_prev = f_value(A, self.run.x)
        self.worst_drop_err = 0.0
        self._fp_seen = None

    def _check(self, name, ok, detail=""):
        self.checked[name] = self.checked.get(name, 0) + 1
        if not ok:
            self.failures.setdefault(name, [])
            if len(self.failures[name]) < 5:
                self.failures[name].append(detail)

    @property
    def ok(self):
        return not self.failures

    def on_step(self, rec):
        run = self.run
        A, x, n = run.A, run.x, run.n
        st = run.state
        tol = self.rtol
        b = scaled_arc_weights(A, x)
        f_now = float(b.sum())
        err = abs((self._f_prev - f_now) - rec.drop)
        self.worst_drop_err = max(self.worst_drop_err, err / self._f_prev)
        self._check("drop_identity", err <= tol * self._f_prev, (rec.t, err / self._f_prev))
        self._f_prev = f_now
        if rec.t % self.every:
            return
        self._check(
            "weight_envelope",
            b.min() >= self.lo * (1 - tol) and b.max() <= self.hi * (1 + tol),
            (rec.t, b.min(), b.max()),
        )
        bound = rec.grad_before**2 / (16 * n * rec.f_before) - tol * rec.f_before
        self._check("step_progress", rec.drop >= bound, (rec.t, rec.drop, bound))
        # records are emitted before any reactivation, so the current mask
        # is the one the step ran under
        fr = st.frozen
        fB = float(b[~(fr[A.src] & fr[A.dst])].sum())
        self._check("trace_f", abs(fB - rec.f) <= tol * fB, (rec.t, fB, rec.f))
        if rec.s > 1:
            cap = rec.active_count * st.tau[rec.s - 1] * (1 + tol)
            self._check(
                "regime_bound",
                rec.f_before <= cap and rec.f <= cap,
                (rec.t, rec.f_before, cap),
            )
        self._frozen_checks(b, rec.t)

    def _frozen_checks(self, b, t):
        run = self.run
        A, st, tol = run.A, run.state, self.rtol
        fp = st.frozen_phase
        idx = np.flatnonzero(fp > 0)
        if not idx.size:
            return
        r = np.bincount(A.src, weights=b, minlength=A.n)[idx]
        c = np.bincount(A.dst, weights=b, minlength=A.n)[idx]
        taus = np.asarray(st.tau)[fp[idx] - 1]
        self._check(
            "frozen_weight_floor",
            bool(np.all(r + c >= 0.5 * taus * (1 - tol))),
            (t, float(np.min((r + c) / taus))),
        )
        ratio = np.maximum(r, c) / np.minimum(r, c) - 1.0
        self._check(
            "frozen_balanced",
            bool(np.all(ratio <= run.eps)),
            (t, float(ratio.max())),
        )
        # members of earlier frozen sets never leave
        if self._fp_seen is not None:
            seen, s_seen = self._fp_seen
            old = (seen > 0) & (seen < s_seen)
            self._check("monotone_stack", bool(np.all(fp[old] == seen[old])), t)
        self._fp_seen = (fp.copy(), st.s)

    def on_event(self, ev):
        if ev.kind == "freeze":
            b = scaled_arc_weights(self.run.A, self.run.x)
            self._frozen_checks(b, ev.t)

    def summary(self):
        return {k: (v, len(self.failures.get(k, ()))) for k, v in self.checked.items()}
