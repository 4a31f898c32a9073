import json

import numpy as np
import pytest

from ftrc.analysis import (
    check_extremal_monotonicity,
    check_invariant_set,
    check_lyapunov_rate,
    convergence_bound,
    detect_consensus,
    hypotheses_hold,
    verify_ftrc,
)
from ftrc.config import GraphSpec, ScenarioConfig, load_config
from ftrc.sim import TrajectoryLog, run


def synthetic(x, alpha=1.0, dt=0.1, **kw):
    x = np.asarray(x, dtype=float)
    return TrajectoryLog.from_states(np.arange(len(x)) * dt, x, alpha, dt, **kw)


def two_cycle_log():
    cfg = ScenarioConfig(
        graph=GraphSpec("edges", n=2, edges=[[1, 2], [2, 1]]),
        F=0,
        alpha=1.0,
        normal_init=[0.0, 1.0],
        dt=0.1,
        t_max=1.0,
        stop_on_consensus=False,
    )
    return run(cfg)


def test_bound_examples():
    assert convergence_bound(50, 10) == 5.0
    assert convergence_bound(0, 3) == 0
    assert convergence_bound(1, 2) == 0.5
    with pytest.raises(ValueError):
        convergence_bound(-1, 1)
    with pytest.raises(ValueError):
        convergence_bound(1, 0)


def test_invariant_plant():
    x = np.tile([0.0, 1.0], (5, 1))
    x[3, 1] = 2.0
    v = check_invariant_set(synthetic(x))
    assert not v.ok
    assert v.worst_excursion == pytest.approx(1 - 1.0 * 0.1)


def test_constant_log_is_quiet():
    log = synthetic(np.full((20, 3), 4.0))
    assert check_invariant_set(log).worst_excursion == 0.0
    M, m = check_extremal_monotonicity(log)
    assert M.ok and m.ok and M.max_slope == 0 and m.min_slope == 0
    rate = check_lyapunov_rate(log)
    assert rate.ok and rate.windows_checked == 0 and rate.max_slope is None


def test_two_agent_trace():
    log = two_cycle_log()
    # the gap closes by 2*alpha*dt per step: 1.0, 0.8, ..., 0.2, 0.0
    assert log.V[:6] == pytest.approx([1.0, 0.8, 0.6, 0.4, 0.2, 0.0], abs=1e-12)
    M, m = check_extremal_monotonicity(log)
    assert M.min_slope == pytest.approx(-1.0)
    assert np.diff(log.M[:6]) / 0.1 == pytest.approx([-1.0] * 5)
    rate = check_lyapunov_rate(log, consensus_tol=1e-9, window=1)
    assert rate.ok and rate.max_slope == pytest.approx(-2.0)


def test_monotonicity_plant():
    x = np.array([[0.0, 1.0]] * 3 + [[0.0, 1.5]] + [[0.0, 1.0]] * 3)
    M, m = check_extremal_monotonicity(synthetic(x))
    assert not M.ok and M.max_slope == pytest.approx(5.0)
    assert m.ok
    x = np.array([[0.0, 1.0]] * 3 + [[-0.5, 1.0]] * 3)
    _, m = check_extremal_monotonicity(synthetic(x))
    assert not m.ok and m.min_slope == pytest.approx(-5.0)


def test_rate_plant():
    # V shrinks at 0.5 while alpha is 1: with eps = alpha this is still fine,
    # a growing V is not
    shrinking = np.column_stack([np.zeros(12), 5 - 0.05 * np.arange(12)])
    assert check_lyapunov_rate(synthetic(shrinking)).ok
    growing = np.column_stack([np.zeros(12), 5 + 0.05 * np.arange(12)])
    rate = check_lyapunov_rate(synthetic(growing))
    assert not rate.ok and rate.max_slope == pytest.approx(0.5)
    assert rate.windows_checked == 12 - 5


def test_rate_ignores_windows_touching_the_band():
    V = [1.0, 1.0, 0.01, 1.0, 1.0, 1.0, 1.0, 1.0]
    x = np.column_stack([np.zeros(8), V])
    rate = check_lyapunov_rate(synthetic(x, consensus_tol=0.4), window=5)
    assert rate.windows_checked == 0 and rate.ok


def test_detect_consensus():
    V = [3, 2, 0.1, 0.1, 5, 0.1, 0.1, 0.1, 0.1]
    log = synthetic(np.column_stack([np.zeros(9), V]), consensus_tol=0.2)
    assert detect_consensus(log, window=3) == 5
    assert detect_consensus(log, window=2) == 2
    assert detect_consensus(log, window=5) is None


def test_post_consensus_rebound_is_reported():
    V = [1.0] + [0.0] * 12 + [1.0] + [0.0] * 3
    log = synthetic(np.column_stack([np.zeros(17), V]), consensus_tol=0.5, window=3)
    report = verify_ftrc(log)
    assert report.consensus_time == pytest.approx(0.1)
    assert not report.post_consensus_ok and report.post_consensus_max_V == 1.0
    assert not report.all_pass


def test_missing_consensus_fails_bound():
    log = synthetic(np.tile([0.0, 1.0], (30, 1)))
    report = verify_ftrc(log)
    assert report.consensus_time is None and not report.bound_ok and not report.all_pass


def test_bound_uses_logged_initial_record():
    log = two_cycle_log()
    report = verify_ftrc(log)
    assert report.V0 == 1.0 and report.bound_T == 1.0
    assert report.bound_slack == pytest.approx(10 * 0.1 + 2 * 0.1)


def test_complete_graph_no_adversaries_passes():
    cfg = ScenarioConfig(graph=GraphSpec("complete", n=6), F=0, alpha=5.0, init_uniform=(-3.0, 9.0), seed=11)
    report = verify_ftrc(run(cfg), cfg, hypotheses_hold(cfg))
    assert report.all_pass and report.hypotheses_hold is True
    assert report.consensus_time <= report.bound_T + report.bound_slack


def test_sec4_report():
    cfg = load_config("scenario_paper_sec4")
    report = verify_ftrc(run(cfg), cfg, hypotheses_hold(cfg))
    assert report.all_pass and report.hypotheses_hold
    assert report.consensus_time <= report.bound_T + report.bound_slack <= 5.0 + report.bound_slack
    d = json.loads(report.json())
    assert d["all_pass"] is True and d["bound_T"] == report.V0 / 10
    assert report.summary_line().startswith("ftrc all=PASS")


def test_non_robust_hypotheses():
    cfg = load_config("scenario_non_robust")
    assert hypotheses_hold(cfg) is False
    big = cfg.replace(graph=GraphSpec("cycle", n=22), max_n=20)
    assert hypotheses_hold(big) is None
