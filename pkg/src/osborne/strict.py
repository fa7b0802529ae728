"""StrictBalance: greedy Osborne iteration with frozen heavy nodes.

Each phase runs greedy balancing on the objective contracted over the
frozen set ``B_s`` until its relative gradient norm drops below
``eps**2 / (64 n**4)``.  The phase then sets the threshold
``tau_{s+1} = f_B / (4 n**3)`` and freezes every node whose weight
``r_i + c_i`` reaches it.  Nodes frozen in the current phase that later
fall below the threshold are released again.  The run stops when every
node is frozen or the matrix is already strictly ``eps``-balanced.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .core import StructuralError
from .report import PhaseEvent, RunReport, StepRecord
from .steps import NOOP_RTOL, BalanceRun, VariantPolicy, require_strongly_connected

__all__ = [
    "FrozenSetState",
    "StrictBalance",
    "StepCapExceeded",
    "InvariantViolation",
    "run_strict",
    "step_bound",
    "phase_bound",
]

log = logging.getLogger(__name__)

# slack on the proven inequalities checked during a run
RTOL = 1e-9


class StepCapExceeded(RuntimeError):
    """The safety cap on balancing steps was hit; ``report`` holds the state."""

    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class InvariantViolation(AssertionError):
    pass


def step_bound(n, w, eps):
    """Worst-case number of balancing steps with every constant set to 1."""
    return eps**-2 * n**9 * math.log(w * n / eps) * math.log(w) / math.log(n)


def phase_bound(n, w):
    """Upper bound on the number of phases: ``log(n w^n)/log(4n^2) + 2``."""
    return (math.log(n) + n * math.log(w)) / math.log(4 * n * n) + 2


@dataclass
class FrozenSetState:
    """Phase machinery.

    ``frozen_phase[i] = k > 0`` means node ``i`` joined the frozen sets at
    phase ``k`` and belongs to every ``B_j`` with ``j >= k``; 0 means active.
    ``tau[k - 1]`` is ``tau_k`` (``tau_1 = 0``).
    """

    n: int
    eps: float
    s: int = 1
    t: int = 1
    frozen_phase: np.ndarray = None
    tau: list = field(default_factory=lambda: [0.0])

    def __post_init__(self):
        if self.frozen_phase is None:
            self.frozen_phase = np.zeros(self.n, dtype=np.intp)

    @property
    def eps_prime(self):
        return self.eps**2 / (64.0 * self.n**4)

    @property
    def frozen(self):
        """Mask of the current ``B_s``."""
        return self.frozen_phase > 0

    @property
    def active(self):
        return self.frozen_phase == 0

    def members(self, k):
        """``B_k`` as a sorted tuple (``B_1`` is always empty)."""
        fp = self.frozen_phase
        return tuple(np.flatnonzero((fp > 0) & (fp <= k)).tolist())

    @property
    def frozen_stack(self):
        return [frozenset(self.members(k)) for k in range(1, self.s + 1)]

    @property
    def tau_s(self):
        return self.tau[self.s - 1]


class StrictBalance(BalanceRun):
    """One StrictBalance execution.

    Parameters
    ----------
    A : SparseNonnegMatrix
        Strongly connected, ``n >= 2``.
    eps : float
        Target in ``(0, 1/2]``.
    sink : callable, optional
        Receives every sampled :class:`StepRecord`.
    event_sink : callable, optional
        Receives every :class:`PhaseEvent`.
    max_steps : int, optional
        Stop with ``termination="iteration_cap"`` after this many steps.
    """

    variant = "strict"

    def __init__(self, A, eps, sink=None, event_sink=None, max_steps=None, keep_trace=True):
        if not (0.0 < eps <= 0.5):
            raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
        require_strongly_connected(A)
        super().__init__(A, eps, VariantPolicy("strict"), sink=sink, keep_trace=keep_trace)
        self.state = FrozenSetState(A.n, float(eps))
        self.event_sink = event_sink
        self.events = []
        self.max_steps = max_steps
        self.safety_cap = 10 * step_bound(A.n, A.w, eps)
        self.reactivations = 0
        self.phase_f = []
        self.exit = ""
        self._arc_mask()

    # contracted objective ------------------------------------------------

    def _arc_mask(self):
        fr = self.state.frozen
        self._keep = ~(fr[self.A.src] & fr[self.A.dst])
        self._has_super = bool(fr.any())

    def contracted(self):
        """``(f_B, ||grad f_B||_1)`` from the cached weights."""
        W = self.weights
        fB = float(W.b[self._keep].sum())
        g = (W.r - W.c)[self.state.active]
        norm = float(np.abs(g).sum())
        if self._has_super:
            norm += abs(float(g.sum()))
        return fB, norm

    def _stop(self, fB, gnorm):
        return gnorm <= self.state.eps_prime * fB

    def _event(self, kind, indices=(), tau=math.nan, f=math.nan):
        W = self.weights
        ev = PhaseEvent(
            kind=kind,
            t=self.state.t,
            s=self.state.s,
            indices=tuple(int(i) for i in indices),
            weights=tuple(float(W.r[i] + W.c[i]) for i in indices),
            tau=float(tau),
            f=float(f),
        )
        self.events.append(ev)
        if self.event_sink is not None:
            self.event_sink(ev)

    # algorithm steps ------------------------------------------------------

    def phase_loop(self):
        """Inner loop of phase ``s``; returns the number of steps taken."""
        st = self.state
        if st.frozen.all():
            raise StructuralError("phase loop needs at least one active index")
        taken = 0
        fB, gnorm = self.contracted()
        while True:
            if self._stop(fB, gnorm):
                # confirm the stopping test on freshly summed weights
                self.weights.refresh()
                fB, gnorm = self.contracted()
                if self._stop(fB, gnorm):
                    break
            if self.max_steps is not None and self.t >= self.max_steps:
                self.exit = "iteration_cap"
                break
            if self.t >= self.safety_cap:
                raise StepCapExceeded(
                    f"StrictBalance exceeded {self.safety_cap:.3g} steps at phase {st.s}; "
                    f"f_B={fB!r}, grad={gnorm!r}, frozen={st.members(st.s)}",
                    self.report(),
                )
            active = st.active
            d = self.weights.drops()
            d[~active] = -1.0
            i = int(np.argmax(d))
            W = self.weights
            _, drop, _, _ = W.balance(i)
            self.t += 1
            st.t += 1
            taken += 1
            productive = drop > NOOP_RTOL * fB
            self.productive += productive
            f_after, g_after = self.contracted()
            self.emit(
                StepRecord(
                    t=self.t,
                    s=st.s,
                    index=i,
                    drop=float(drop),
                    f=f_after,
                    grad_norm=g_after,
                    active_count=int(active.sum()),
                    f_before=fB,
                    grad_before=gnorm,
                    productive=bool(productive),
                )
            )
            if self.reactivation_check():
                f_after, g_after = self.contracted()
            fB, gnorm = f_after, g_after
        return taken

    def reactivation_check(self):
        """Release nodes frozen in this phase whose weight fell below ``tau_s``."""
        st = self.state
        if st.s <= 1:
            return ()
        W = self.weights
        low = (st.frozen_phase == st.s) & (W.r + W.c < st.tau_s)
        if not low.any():
            return ()
        idx = np.flatnonzero(low)
        self._event("reactivate", idx, tau=st.tau_s)
        st.frozen_phase[idx] = 0
        self.reactivations += idx.size
        self._arc_mask()
        return tuple(idx.tolist())

    def freeze_step(self):
        """Set ``tau_{s+1}`` and ``B_{s+1}``, then advance ``s``."""
        st = self.state
        n = self.n
        self.weights.refresh()
        fB, _ = self.contracted()
        self.phase_f.append(fB)
        tau_next = fB / (4.0 * n**3)
        if st.s + 1 > 2 and tau_next > st.tau_s / (4.0 * n * n) * (1 + RTOL):
            raise InvariantViolation(
                f"threshold {tau_next!r} exceeds tau_{st.s}/(4n^2) = {st.tau_s / (4.0 * n * n)!r}"
            )
        W = self.weights
        new = st.active & (W.r + W.c >= tau_next)
        st.tau.append(tau_next)
        st.s += 1
        st.frozen_phase[new] = st.s
        self._arc_mask()
        self._event("freeze", np.flatnonzero(new), tau=tau_next, f=fB)
        return tau_next, frozenset(st.members(st.s))

    def run(self):
        st = self.state
        while not st.frozen.all() and not self.is_balanced():
            self.phase_loop()
            if self.exit == "iteration_cap":
                break
            self.freeze_step()
        if not self.exit:
            self.exit = "all_frozen" if st.frozen.all() else "balanced"
        return self.report()

    def report(self):
        mi = self.max_imbalance()
        if self.exit == "iteration_cap" and mi <= self.eps:
            termination = "balanced"
        elif self.exit in ("balanced", "all_frozen"):
            termination = "balanced"
        else:
            termination = self.exit or "running"
        return RunReport(
            variant="strict",
            termination=termination,
            x=self.x.copy(),
            epsilon=self.eps,
            steps=self.t,
            productive_steps=self.productive,
            phases=self.state.s - 1,
            reactivations=self.reactivations,
            max_imbalance=mi,
            f_initial=self.f_initial,
            f_final=self.weights.f,
            f_trace=self.f_trace,
            exit=self.exit,
            taus=list(self.state.tau),
            phase_f=list(self.phase_f),
        )


def run_strict(A, eps, sink=None, event_sink=None, max_steps=None, keep_trace=True):
    """Run StrictBalance on a strongly connected matrix and return its report."""
    return StrictBalance(
        A, eps, sink=sink, event_sink=event_sink, max_steps=max_steps, keep_trace=keep_trace
    ).run()
