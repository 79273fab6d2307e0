import math

import numpy as np
import pytest

from partialgc.assignment import build_cyclic
from partialgc.errors import CoverageUnreachableError, InvalidParameterError
from partialgc.ordering import OrderingMatrix, chunk_ordering
from partialgc.simulator import (APPROX_METRICS, SimConfig, aggregate, baseline_completion_time,
                                 baseline_residual, coverage_trigger_time, draw_failures, prepare,
                                 run_approx_trial, run_exact_trial, run_trials, simulate_worker_timeline,
                                 state_at, summarize)

SMALL = dict(assignment="cyclic", m=20, degree=4, ramanujan_search=False)


# ---------------------------------------------------------------- timelines

def test_failed_worker_has_empty_timeline():
    assert simulate_worker_timeline(5, 1.0, True, 0).size == 0


def test_fast_worker_finishes_immediately():
    tl = simulate_worker_timeline(5, 1e12, False, 0)
    assert tl.shape == (5,) and tl[-1] < 1e-9


def test_timeline_increasing():
    tl = simulate_worker_timeline(50, 2.0, False, 1)
    assert (np.diff(tl) > 0).all()


def test_mean_first_completion():
    rng = np.random.default_rng(0)
    firsts = [simulate_worker_timeline(1, 2.5, False, rng)[0] for _ in range(100_000)]
    assert abs(np.mean(firsts) - 0.4) <= 0.02 * 0.4


def test_timeline_rejects_bad_rate():
    with pytest.raises(InvalidParameterError):
        simulate_worker_timeline(3, 0.0, False, 0)


def test_draw_failures_count():
    failed = draw_failures(30, 7, np.random.default_rng(0))
    assert failed.sum() == 7


def test_state_at_limits():
    tls = [simulate_worker_timeline(4, 1.0, False, s) for s in range(5)] + [np.empty(0)]
    np.testing.assert_array_equal(state_at(tls, 0.0), [0] * 6)
    np.testing.assert_array_equal(state_at(tls, math.inf), [4] * 5 + [0])
    prev = state_at(tls, 0.0)
    for t in np.linspace(0, 10, 41):
        cur = state_at(tls, t)
        assert (cur >= prev).all()
        prev = cur


# ---------------------------------------------------------------- trigger times

def _timelines(loads, failed=()):
    return [np.empty(0) if j in failed else np.arange(1.0, n + 1) + 0.1 * j for j, n in enumerate(loads)]


def test_trigger_time_zero_ell():
    a = build_cyclic(4, 2)
    o = OrderingMatrix.from_assignment(a)
    assert coverage_trigger_time(_timelines(a.load), a, o, 0) == 0.0
    assert baseline_completion_time(_timelines(a.load), a, 0) == 0.0


def test_trigger_time_full_replication_equals_baseline():
    a = build_cyclic(4, 2)
    o = OrderingMatrix.from_assignment(a)
    tls = _timelines(a.load)
    assert coverage_trigger_time(tls, a, o, 2) == baseline_completion_time(tls, a, 2) == pytest.approx(2.3)


def test_trigger_time_partial_beats_baseline():
    a = build_cyclic(4, 2)
    o, _ = chunk_ordering(a)
    tls = _timelines(a.load)
    # every chunk is first in line for one worker, so one copy is ready at ~1
    assert coverage_trigger_time(tls, a, o, 1) == pytest.approx(1.3)
    assert baseline_completion_time(tls, a, 1) == pytest.approx(2.2)   # chunk 3: workers 2, 3


def test_trigger_time_unreachable():
    a = build_cyclic(4, 2)
    o = OrderingMatrix.from_assignment(a)
    tls = _timelines(a.load, failed={0, 3})   # chunk 0 is held only by workers 0 and 3
    assert coverage_trigger_time(tls, a, o, 1) is None
    assert baseline_completion_time(tls, a, 1) is None


def test_baseline_residual_examples():
    a = build_cyclic(4, 2).dense()
    assert baseline_residual(a, np.zeros(4, dtype=bool)) == 4.0
    assert baseline_residual(a, np.ones(4, dtype=bool)) == pytest.approx(0.0, abs=1e-20)
    # workers 0 and 2 cover each chunk exactly once
    assert baseline_residual(a, np.array([True, False, True, False])) == pytest.approx(0.0, abs=1e-20)


# ---------------------------------------------------------------- trials

def test_approx_trial_at_zero_time():
    cfg = SimConfig(**SMALL, ells=(1, 2, 3), times=(0.0,), n_failures=2, trials=1)
    setup = prepare(cfg)
    rows = run_approx_trial(cfg, setup, 0)
    for row in rows:
        assert row.proposed_residual == pytest.approx(20 * row.ell)
        assert row.baseline_residual == 20
        assert row.psi == (0,) * 20


def test_approx_trial_at_large_time():
    cfg = SimConfig(**SMALL, ells=(1, 2), times=(1e6,), n_failures=1, trials=1)
    setup = prepare(cfg)
    for row in run_approx_trial(cfg, setup, 0):
        assert row.theoretical_error == 0
        assert row.proposed_residual <= 1e-18


def test_approx_residual_matches_theory():
    cfg = SimConfig(**SMALL, ells=(1, 2, 3), times=(1.0, 2.0, 3.0), n_failures=2, trials=5)
    setup = prepare(cfg)
    for row in run_trials(run_approx_trial, cfg, setup):
        assert row.proposed_residual == pytest.approx(row.theoretical_error, abs=1e-8)


def test_exact_trial_full_replication_equal_times():
    cfg = SimConfig(**SMALL, ells=(4,), n_failures=0, trials=20)
    setup = prepare(cfg)
    for row in run_trials(run_exact_trial, cfg, setup):
        assert row.proposed_completion == row.baseline_completion


def test_exact_trial_no_failures_proposed_not_later():
    cfg = SimConfig(**SMALL, ells=(1, 2, 3), n_failures=None, trials=50)
    setup = prepare(cfg)
    for row in run_trials(run_exact_trial, cfg, setup):
        assert row.proposed_completion <= row.baseline_completion


def test_exact_trial_delta_one():
    cfg = SimConfig(assignment="cyclic", m=6, degree=1, ramanujan_search=False, ells=(1,),
                    n_failures=0, trials=10)
    setup = prepare(cfg)
    for row in run_trials(run_exact_trial, cfg, setup):
        assert row.proposed_completion == row.baseline_completion


def test_exact_trial_unreachable_raises():
    # 3 failures out of 4 workers with degree 2 always leaves a chunk uncovered
    cfg = SimConfig(assignment="cyclic", m=4, degree=2, ramanujan_search=False, ells=(1,),
                    n_failures=3, trials=1)
    with pytest.raises(CoverageUnreachableError):
        run_exact_trial(cfg, prepare(cfg), 0)


def test_failures_auto():
    cfg = SimConfig(**SMALL, n_failures=None)
    assert [cfg.failures_for(e) for e in (1, 2, 3)] == [3, 2, 1]


@pytest.mark.parametrize("kwargs", [
    dict(assignment="star"), dict(ordering="greedy"), dict(rate=0.0), dict(trials=0),
    dict(ells=()), dict(n_failures=20), dict(times=(-1.0,)),
])
def test_sim_config_validation(kwargs):
    with pytest.raises(InvalidParameterError):
        SimConfig(**{**SMALL, **kwargs})


def test_trials_are_deterministic_and_thread_independent():
    cfg = SimConfig(**SMALL, ells=(1, 2), times=(2.0, 4.0), n_failures=2, trials=12)
    setup = prepare(cfg)
    seq = run_trials(run_approx_trial, cfg, setup, threads=1)
    par = run_trials(run_approx_trial, cfg, setup, threads=4)
    assert seq == par
    assert seq == run_trials(run_approx_trial, cfg, setup, threads=1)


def test_seed_changes_results():
    a = SimConfig(**SMALL, ells=(1,), times=(2.0,), n_failures=2, trials=3, seed=0)
    b = SimConfig(**SMALL, ells=(1,), times=(2.0,), n_failures=2, trials=3, seed=1)
    ra = run_trials(run_approx_trial, a, prepare(a))
    rb = run_trials(run_approx_trial, b, prepare(b))
    assert [r.psi for r in ra] != [r.psi for r in rb]


# ---------------------------------------------------------------- aggregation

def test_aggregate_examples():
    s = aggregate([1.0, 2.0, 3.0])
    assert (s.mean, s.std, s.n) == (2.0, 1.0, 3)
    s = aggregate([5.0])
    assert (s.mean, s.std, s.n) == (5.0, 0.0, 1)
    with pytest.raises(InvalidParameterError):
        aggregate([])


def test_summarize_groups_cells():
    cfg = SimConfig(**SMALL, ells=(1, 2), times=(1.0, 3.0), n_failures=2, trials=4)
    rows = summarize(run_trials(run_approx_trial, cfg, prepare(cfg)), APPROX_METRICS,
                     scale_by_ell=("proposed_residual",))
    assert len(rows) == 2 * 2 * len(APPROX_METRICS)
    assert all(s.n == 4 for *_, s in rows)
