import numpy as np
import pytest

from osborne import (
    SparseNonnegMatrix,
    StrictBalance,
    StructuralError,
    TraceAuditor,
    VariantPolicy,
    run_classic,
    run_strict,
    strict_imbalance,
)
from osborne.strict import FrozenSetState, phase_bound

from conftest import multilevel, random_strongly_connected, reactivation_fixture


def audited(A, eps, **kw):
    run = StrictBalance(A, eps, **kw)
    aud = TraceAuditor(run)
    run.sink, run.event_sink = aud.on_step, aud.on_event
    return run, aud


def test_frozen_set_state_basics():
    st = FrozenSetState(4, 0.5)
    assert st.eps_prime == 0.25 / (64 * 256)
    assert st.frozen_stack == [frozenset()]
    st.frozen_phase[[1, 2]] = [2, 3]
    st.s = 3
    assert st.members(1) == () and st.members(2) == (1,) and st.members(3) == (1, 2)


def test_argument_checks(two):
    for eps in (0.0, 0.6, -1):
        with pytest.raises(ValueError):
            run_strict(two, eps)
    with pytest.raises(StructuralError):
        run_strict(SparseNonnegMatrix.from_entries(2, [(0, 1, 1.0)]), 0.1)


def test_already_balanced_takes_no_steps():
    bal = SparseNonnegMatrix.from_dense(np.ones((4, 4)) - np.eye(4))
    rep = run_strict(bal, 0.1)
    assert rep.steps == 0 and rep.phases == 0 and rep.exit == "balanced"


def test_two_by_two_hand_simulation(two):
    # phase 1: grad/f = 6/5 > eps', greedy tie (drops 1, 1) -> index 0,
    # one step to exact balance; tau_2 = 4 / 32 and both weights (4) freeze
    run = StrictBalance(two, 0.1)
    rep = run.run()
    assert rep.steps == 1 and rep.phases == 1 and rep.exit == "all_frozen"
    assert run.records[0].index == 0 and run.records[0].drop == pytest.approx(1.0)
    assert rep.taus == [0.0, pytest.approx(4.0 / 32)]
    [ev] = run.events
    assert ev.kind == "freeze" and ev.indices == (0, 1)
    assert rep.max_imbalance == pytest.approx(0.0, abs=1e-15)


def test_random_eight_by_eight():
    rng = np.random.default_rng(8)
    A = random_strongly_connected(8, 0.3, rng)
    rep = run_strict(A, 0.05)
    assert rep.max_imbalance <= 0.05
    assert rep.phases <= phase_bound(A.n, A.w)


def test_phase_loop_on_balanced_active_part():
    bal = SparseNonnegMatrix.from_dense(np.ones((3, 3)) - np.eye(3))
    assert StrictBalance(bal, 0.1).phase_loop() == 0


def test_phase_one_is_greedy(rng):
    A = random_strongly_connected(10, 0.4, rng)
    run = StrictBalance(A, 0.01)
    run.phase_loop()
    strict_idx = [r.index for r in run.records]
    classic = run_classic(A, VariantPolicy("greedy"), 1e-300, len(strict_idx))
    # replay greedy for the same number of steps and compare index sequences
    from osborne.steps import BalanceRun, select_index

    g = BalanceRun(A, 0.01, VariantPolicy("greedy"))
    seq = [g.balance_index(select_index(g.policy, g, np.ones(A.n, bool))).index for _ in strict_idx]
    assert seq == strict_idx
    assert classic.steps == len(strict_idx)
    assert np.allclose(g.x, run.x, rtol=0, atol=1e-12)


def test_reactivation_event():
    A = reactivation_fixture()
    run, aud = audited(A, 0.5)
    rep = run.run()
    kinds = [e.kind for e in run.events]
    assert "reactivate" in kinds
    ev = run.events[kinds.index("reactivate")]
    assert ev.indices == (2,) and ev.weights[0] < ev.tau
    assert rep.reactivations == 1 and rep.max_imbalance <= 0.5
    assert aud.ok, aud.failures


def test_reactivation_check_guard_and_threshold(rng):
    A = random_strongly_connected(6, 0.6, rng)
    run = StrictBalance(A, 0.1)
    assert run.reactivation_check() == ()  # s == 1
    st = run.state
    w = run.weights.r + run.weights.c
    st.s = 2
    st.tau = [0.0, float(w[3]) / 0.99]
    st.frozen_phase[[3, 4]] = 2
    st.frozen_phase[1] = 0
    # node 4 stays only if its weight clears the threshold
    keep4 = w[4] >= st.tau[1]
    removed = run.reactivation_check()
    assert 3 in removed and (4 in removed) != keep4
    assert st.frozen_phase[3] == 0


def test_reactivation_check_spares_older_sets(rng):
    A = random_strongly_connected(6, 0.6, rng)
    run = StrictBalance(A, 0.1)
    st = run.state
    st.s = 3
    st.tau = [0.0, 1e300, 1e300]
    st.frozen_phase[[0, 1]] = [2, 3]
    assert run.reactivation_check() == (1,)
    assert st.frozen_phase[0] == 2


def test_freeze_step_arithmetic():
    # n = 2, f = 4 n^3 = 32 -> tau = 1, both nodes freeze
    A = SparseNonnegMatrix.from_dense([[0, 16.0], [16.0, 0]])
    run = StrictBalance(A, 0.1)
    run.phase_loop()
    tau, B = run.freeze_step()
    assert tau == 1.0 and B == frozenset({0, 1}) and run.state.s == 2


def test_max_steps_cap():
    rng = np.random.default_rng(1)
    A = multilevel(6, rng)
    rep = run_strict(A, 0.01, max_steps=2)
    assert rep.steps == 2 and rep.exit == "iteration_cap"


@pytest.mark.parametrize("seed", range(12))
def test_multilevel_traces_pass_audit(seed):
    rng = np.random.default_rng(seed)
    A = multilevel(int(rng.integers(4, 8)), rng, scale=1e-3)
    eps = float(rng.choice([0.1, 0.3, 0.5]))
    run, aud = audited(A, eps)
    rep = run.run()
    assert aud.ok, aud.failures
    assert strict_imbalance(A, rep.x).max_ratio <= eps + 1e-12
    assert rep.phases <= phase_bound(A.n, A.w)
    n = A.n
    for s in range(3, len(rep.taus) + 1):
        assert rep.taus[s - 1] <= rep.taus[s - 2] / (4 * n * n) * (1 + 1e-9)
    for k in range(1, len(rep.phase_f)):
        assert rep.phase_f[k] <= rep.phase_f[k - 1] / (4 * n * n) * (1 + 1e-9)


def test_multilevel_corpus_reaches_several_phases():
    phases = []
    for seed in range(12):
        rng = np.random.default_rng(seed)
        A = multilevel(int(rng.integers(4, 8)), rng, scale=1e-3)
        phases.append(run_strict(A, 0.1).phases)
    assert max(phases) >= 2
