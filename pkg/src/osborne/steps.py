"""The balancing step and the classic Osborne index-selection policies."""

from dataclasses import dataclass

import numpy as np

from .core import ScaledWeights, StructuralError
from .report import RunReport, StepRecord

__all__ = [
    "VARIANTS",
    "VariantPolicy",
    "BalanceRun",
    "select_index",
    "run_classic",
    "require_strongly_connected",
]

VARIANTS = ("round_robin", "greedy", "uniform_random", "strict")

# steps whose drop is below this fraction of f are reported as no-ops
NOOP_RTOL = 1e-15
# full per-step traces up to this dimension, every n-th step beyond
FULL_TRACE_MAX_N = 64


@dataclass(frozen=True)
class VariantPolicy:
    kind: str = "greedy"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in VARIANTS:
            raise ValueError(f"unknown variant {self.kind!r}; choose from {VARIANTS}")


def require_strongly_connected(A):
    from .preprocessing import scc_decompose

    if A.n < 2 or not scc_decompose(A).strongly_connected:
        raise StructuralError(
            "matrix is not strongly connected; decompose it into components first"
        )


def strictly_balanced(r, c, eps):
    """Definition of strict balance evaluated on given row/column sums."""
    if np.any(r <= 0) or np.any(c <= 0):
        return False
    ratio = np.maximum(r, c) / np.minimum(r, c)
    return bool(np.all(ratio <= 1.0 + eps))


class BalanceRun:
    """Mutable state of one balancing execution.

    Holds the incrementally maintained weights, the step counter and,
    for the classic policies, the round-robin cursor and the generator.
    ``sink`` (optional) is called with every sampled :class:`StepRecord`.
    """

    variant = "classic"

    def __init__(self, A, eps, policy=None, sink=None, keep_trace=True):
        self.A = A
        self.n = A.n
        self.eps = float(eps)
        self.policy = policy or VariantPolicy("greedy")
        self.weights = ScaledWeights(A)
        self.sink = sink
        self.keep_trace = keep_trace
        self.t = 0
        self.productive = 0
        self.last_index = -1
        self.rng = np.random.Generator(np.random.PCG64(self.policy.seed))
        self.f_initial = self.weights.f
        self.f_trace = []
        self.records = []

    @property
    def x(self):
        return self.weights.x

    def sampled(self, t):
        return self.n <= FULL_TRACE_MAX_N or t % self.n == 0

    def emit(self, rec):
        if not self.sampled(rec.t):
            return
        if self.keep_trace:
            self.records.append(rec)
            self.f_trace.append(rec.f)
        if self.sink is not None:
            self.sink(rec)

    def balance_index(self, i):
        """One balancing step at ``i`` on the full objective."""
        W = self.weights
        f_before = W.f
        g_before = float(np.abs(W.r - W.c).sum())
        _, drop, _, _ = W.balance(i)
        self.t += 1
        productive = drop > NOOP_RTOL * f_before
        self.productive += productive
        self.last_index = i
        rec = StepRecord(
            t=self.t,
            s=0,
            index=int(i),
            drop=float(drop),
            f=W.f,
            grad_norm=float(np.abs(W.r - W.c).sum()),
            active_count=self.n,
            f_before=f_before,
            grad_before=g_before,
            productive=bool(productive),
        )
        self.emit(rec)
        return rec

    def is_balanced(self, fresh=True):
        W = self.weights
        if fresh:
            W.refresh()
        return strictly_balanced(W.r, W.c, self.eps)

    def max_imbalance(self):
        from .diagnostics import strict_imbalance

        return strict_imbalance(self.A, self.x).max_ratio


def select_index(policy, run, active):
    """Next index to balance among the ``active`` mask."""
    idx = np.flatnonzero(active)
    if idx.size == 0:
        raise ValueError("no active index to select")
    if policy.kind in ("greedy", "strict"):
        d = run.weights.drops()
        return int(idx[np.argmax(d[idx])])
    if policy.kind == "round_robin":
        after = idx[idx > run.last_index]
        return int(after[0] if after.size else idx[0])
    return int(idx[run.rng.integers(idx.size)])


def run_classic(A, policy, eps, max_iters, sink=None, keep_trace=True):
    """Plain Osborne iteration until strict ``eps``-balance or ``max_iters`` steps.

    Balance is tested once per sweep of ``n`` steps.
    """
    if max_iters <= 0:
        raise ValueError("max_iters must be positive")
    if policy.kind == "strict":
        raise ValueError("use run_strict for the strict variant")
    require_strongly_connected(A)
    run = BalanceRun(A, eps, policy, sink=sink, keep_trace=keep_trace)
    active = np.ones(A.n, dtype=bool)
    termination = "balanced"
    if not run.is_balanced():
        termination = "iteration_cap"
        while run.t < max_iters:
            run.balance_index(select_index(policy, run, active))
            if run.t % A.n == 0 and strictly_balanced(run.weights.r, run.weights.c, eps):
                if run.is_balanced():
                    termination = "balanced"
                    break
        else:
            if run.is_balanced():
                termination = "balanced"
    return RunReport(
        variant=policy.kind,
        termination=termination,
        x=run.x.copy(),
        epsilon=float(eps),
        steps=run.t,
        productive_steps=run.productive,
        max_imbalance=run.max_imbalance(),
        f_initial=run.f_initial,
        f_final=run.weights.f,
        f_trace=run.f_trace,
        exit=termination,
    )
