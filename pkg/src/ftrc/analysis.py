"""Trajectory checks for invariance, extremal monotonicity, Lyapunov decrease
and finite convergence time.

All checks are descriptive: they return verdicts with the worst observed
numbers and never raise on a failed property.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .config import ScenarioConfig
from .graph import GraphTooLarge, is_F_local, is_r_robust
from .sim import TrajectoryLog

# relative allowance for rounding in x + dt*u; not a modelling slack
SLOPE_RTOL = 1e-9


@dataclass(frozen=True)
class InvariantVerdict:
    ok: bool
    worst_excursion: float
    lower: float
    upper: float


@dataclass(frozen=True)
class SlopeVerdict:
    ok: bool
    max_slope: float
    min_slope: float


@dataclass(frozen=True)
class RateVerdict:
    ok: bool
    max_slope: float | None
    windows_checked: int
    window: int


def check_invariant_set(log: TrajectoryLog) -> InvariantVerdict:
    """Every logged normal state stays in the initial envelope, widened by
    one Euler step on each side."""
    slack = log.alpha * log.dt
    lower = float(log.m[0]) - slack
    upper = float(log.M[0]) + slack
    excursion = max(0.0, float(log.x.max()) - upper, lower - float(log.x.min()))
    return InvariantVerdict(excursion == 0.0, excursion, lower, upper)


def _slopes(values: np.ndarray, times: np.ndarray):
    dt = np.diff(times)
    return np.diff(values) / dt, dt


def check_extremal_monotonicity(log: TrajectoryLog) -> tuple[SlopeVerdict, SlopeVerdict]:
    """Discrete slopes of M must lie in [-alpha - eps, eps] and those of m in
    [-eps, alpha + eps], with eps = alpha*dt/spacing covering one switch of
    the extremal agent between samples."""
    a = log.alpha
    if len(log) < 2:
        return SlopeVerdict(True, 0.0, 0.0), SlopeVerdict(True, 0.0, 0.0)
    sM, spacing = _slopes(log.M, log.times)
    sm, _ = _slopes(log.m, log.times)
    eps = a * log.dt / spacing
    fuzz = SLOPE_RTOL * a
    M_ok = bool(np.all(sM <= eps + fuzz) and np.all(sM >= -a - eps - fuzz))
    m_ok = bool(np.all(sm >= -eps - fuzz) and np.all(sm <= a + eps + fuzz))
    return (
        SlopeVerdict(M_ok, float(sM.max()), float(sM.min())),
        SlopeVerdict(m_ok, float(sm.max()), float(sm.min())),
    )


def check_lyapunov_rate(log: TrajectoryLog, consensus_tol: float | None = None, window: int = 5) -> RateVerdict:
    """Slope of V over ``window`` logged intervals, wherever V stays above the
    tolerance, must be at most -alpha + eps with eps = alpha*dt/spacing, the
    same per-record allowance the extremal checks use."""
    tol = log.consensus_tol if consensus_tol is None else consensus_tol
    a = log.alpha
    n = len(log)
    if n <= window:
        return RateVerdict(True, None, 0, window)
    above = log.V > tol
    # windows whose every record has V above tol
    run = np.convolve(above.astype(int), np.ones(window + 1, dtype=int), mode="valid") == window + 1
    starts = np.flatnonzero(run)
    if starts.size == 0:
        return RateVerdict(True, None, 0, window)
    span = log.times[starts + window] - log.times[starts]
    slope = (log.V[starts + window] - log.V[starts]) / span
    spacing = log.dt * log.log_every
    limit = -a + a * log.dt / spacing + SLOPE_RTOL * a
    return RateVerdict(bool(np.all(slope <= limit)), float(slope.max()), int(starts.size), window)


def convergence_bound(V0: float, alpha: float) -> float:
    if V0 < 0:
        raise ValueError("V0 must be nonnegative")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return V0 / alpha


def detect_consensus(log: TrajectoryLog, consensus_tol: float | None = None, window: int | None = None) -> int | None:
    """Index of the first record opening ``window`` consecutive records with V <= tol."""
    tol = log.consensus_tol if consensus_tol is None else consensus_tol
    w = log.window if window is None else window
    below = (log.V <= tol).astype(int)
    if below.size < w:
        return None
    hits = np.flatnonzero(np.convolve(below, np.ones(w, dtype=int), mode="valid") == w)
    return int(hits[0]) if hits.size else None


@dataclass(frozen=True)
class FtrcReport:
    invariant_set_ok: bool
    invariant_worst_excursion: float
    M_monotone_ok: bool
    M_max_slope: float
    M_min_slope: float
    m_monotone_ok: bool
    m_max_slope: float
    m_min_slope: float
    lyapunov_rate_ok: bool
    lyapunov_max_slope: float | None
    lyapunov_windows: int
    consensus_time: float | None
    post_consensus_ok: bool
    post_consensus_max_V: float | None
    bound_T: float
    bound_slack: float
    bound_ok: bool
    V0: float
    alpha: float
    consensus_tol: float
    hypotheses_hold: bool | None = None

    @property
    def all_pass(self) -> bool:
        return (
            self.invariant_set_ok
            and self.M_monotone_ok
            and self.m_monotone_ok
            and self.lyapunov_rate_ok
            and self.bound_ok
            and self.post_consensus_ok
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["all_pass"] = self.all_pass
        return d

    def summary_line(self) -> str:
        flag = lambda ok: "PASS" if ok else "FAIL"  # noqa: E731
        t = "none" if self.consensus_time is None else f"{self.consensus_time:.6g}"
        return (
            f"ftrc all={flag(self.all_pass)} invariant={flag(self.invariant_set_ok)} "
            f"M={flag(self.M_monotone_ok)} m={flag(self.m_monotone_ok)} "
            f"rate={flag(self.lyapunov_rate_ok)} bound={flag(self.bound_ok)} "
            f"post={flag(self.post_consensus_ok)} t*={t} T={self.bound_T:.6g} "
            f"M_slope_max={self.M_max_slope:.6g} m_slope_min={self.m_min_slope:.6g} "
            f"V_slope_max={'n/a' if self.lyapunov_max_slope is None else f'{self.lyapunov_max_slope:.6g}'} "
            f"hypotheses={self.hypotheses_hold}"
        )

    def text(self) -> str:
        lines = ["FTRC verification report", "========================"]
        for k, v in self.to_dict().items():
            lines.append(f"{k}: {v}")
        lines.append("")
        lines.append(self.summary_line())
        return "\n".join(lines) + "\n"

    def json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def hypotheses_hold(config: ScenarioConfig, workers: int = 1) -> bool | None:
    """F-locality plus (2F+1)-robustness; None if the graph exceeds the cap."""
    g = config.digraph
    if not is_F_local(g, config.adversary_ids, config.F):
        return False
    try:
        return is_r_robust(g, 2 * config.F + 1, config.max_n, workers).robust
    except GraphTooLarge:
        return None


def verify_ftrc(log: TrajectoryLog, config: ScenarioConfig | None = None, hypotheses: bool | None = None) -> FtrcReport:
    rate_window = config.rate_window if config is not None else 5
    inv = check_invariant_set(log)
    Mv, mv = check_extremal_monotonicity(log)
    rate = check_lyapunov_rate(log, log.consensus_tol, rate_window)
    V0 = float(log.V[0])
    T = convergence_bound(V0, log.alpha)
    spacing = log.dt * log.log_every
    slack = log.window * spacing + 2 * log.dt
    idx = detect_consensus(log)
    if idx is None:
        t_star, post_ok, post_max = None, False, None
    else:
        t_star = float(log.times[idx])
        post_max = float(log.V[idx:].max())
        post_ok = post_max <= log.consensus_tol
    bound_ok = t_star is not None and t_star <= T + slack
    return FtrcReport(
        invariant_set_ok=inv.ok,
        invariant_worst_excursion=inv.worst_excursion,
        M_monotone_ok=Mv.ok,
        M_max_slope=Mv.max_slope,
        M_min_slope=Mv.min_slope,
        m_monotone_ok=mv.ok,
        m_max_slope=mv.max_slope,
        m_min_slope=mv.min_slope,
        lyapunov_rate_ok=rate.ok,
        lyapunov_max_slope=rate.max_slope,
        lyapunov_windows=rate.windows_checked,
        consensus_time=t_star,
        post_consensus_ok=post_ok,
        post_consensus_max_V=post_max,
        bound_T=T,
        bound_slack=slack,
        bound_ok=bound_ok,
        V0=V0,
        alpha=log.alpha,
        consensus_tol=log.consensus_tol,
        hypotheses_hold=hypotheses,
    )
