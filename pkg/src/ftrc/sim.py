"""Fixed-step Euler simulation of the closed loop.

The per-agent filter and sign rule are evaluated for all normal agents at
once on a padded (agents x max in-degree) matrix. Where a floating-point sum
is too close to zero for its sign to be trusted, the row falls back to the
exact scalar rule, so the controls always equal ``protocol.control_input``.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field

import numpy as np

from .adversary import adversary_signal, canonical_broadcast
from .config import ScenarioConfig
from .protocol import exact_sign_of_differences

_EPS = np.finfo(float).eps


class SimulationError(RuntimeError):
    def __init__(self, message: str, log: "TrajectoryLog | None" = None):
        super().__init__(message)
        self.log = log


@dataclass
class SimState:
    t: float
    step: int
    x: np.ndarray


def compute_M_m_V(x, ids=None):
    """Max, min, spread, and argmax/argmin id sets of the normal states."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("state vector is empty")
    ids = list(range(1, x.size + 1)) if ids is None else list(ids)
    M = float(x.max())
    m = float(x.min())
    S_M = frozenset(i for i, v in zip(ids, x) if v == M)
    S_m = frozenset(i for i, v in zip(ids, x) if v == m)
    return M, m, M - m, S_M, S_m


@dataclass
class TrajectoryLog:
    times: np.ndarray
    x: np.ndarray  # records x normal agents
    u: np.ndarray
    adv: np.ndarray  # records x adversaries, canonical broadcast
    normal_ids: list[int]
    adversary_ids: list[int]
    alpha: float
    dt: float
    consensus_tol: float
    window: int = 10
    log_every: int = 1
    # records x agents x in-degree slots, aligned with sender_ids
    removed_mask: np.ndarray | None = None
    sender_ids: np.ndarray | None = None
    steps: np.ndarray | None = None
    consensus_time: float | None = None
    stop_reason: str = ""
    error: str | None = None
    M: np.ndarray = field(init=False)
    m: np.ndarray = field(init=False)
    V: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        self.u = np.asarray(self.u, dtype=float).reshape(self.x.shape)
        self.adv = np.asarray(self.adv, dtype=float).reshape(len(self.times), len(self.adversary_ids))
        if self.steps is None:
            self.steps = np.arange(len(self.times)) * self.log_every
        self.M = self.x.max(axis=1)
        self.m = self.x.min(axis=1)
        self.V = self.M - self.m

    @classmethod
    def from_states(cls, times, x, alpha: float, dt: float, consensus_tol: float | None = None, **kw) -> "TrajectoryLog":
        """Build a log from bare states (controls zero, no adversaries)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        kw.setdefault("normal_ids", list(range(1, x.shape[1] + 1)))
        kw.setdefault("adversary_ids", [])
        return cls(
            times=times,
            x=x,
            u=np.zeros_like(x),
            adv=np.zeros((len(times), len(kw["adversary_ids"]))),
            alpha=alpha,
            dt=dt,
            consensus_tol=4 * alpha * dt if consensus_tol is None else consensus_tol,
            **kw,
        )

    def __len__(self) -> int:
        return len(self.times)

    def csv_text(self) -> str:
        cols = (
            ["t"]
            + [f"x_{i}" for i in self.normal_ids]
            + [f"adv_{i}" for i in self.adversary_ids]
            + [f"u_{i}" for i in self.normal_ids]
            + ["M", "m", "V"]
        )
        data = np.column_stack([self.times, self.x, self.adv, self.u, self.M, self.m, self.V])
        out = io.StringIO()
        out.write(",".join(cols) + "\n")
        for row in data.tolist():
            out.write(",".join(map(repr, row)) + "\n")
        return out.getvalue()

    def removed_at(self, record: int) -> dict[int, tuple[int, ...]]:
        """Removed sender ids per normal agent at one logged record."""
        if self.removed_mask is None:
            raise ValueError("removed sets were not logged")
        mask = self.removed_mask[record]
        return {i: tuple(sorted(self.sender_ids[r, mask[r]].tolist())) for r, i in enumerate(self.normal_ids)}

    def removed_csv_text(self) -> str:
        out = io.StringIO()
        out.write("step,agent,removed\n")
        if self.removed_mask is None:
            return out.getvalue()
        for rec, step in enumerate(self.steps.tolist()):
            for agent, ids in self.removed_at(rec).items():
                out.write(f"{step},{agent},{' '.join(map(str, ids))}\n")
        return out.getvalue()


class Simulator:
    """Precomputed wiring for one scenario; ``controls`` and ``step`` are the
    only per-step work."""

    def __init__(self, config: ScenarioConfig):
        self.config = config
        g = config.digraph
        self.g = g
        self.gain = config.gain
        self.normal_ids = config.normal_ids
        self.adversary_ids = config.adversary_ids
        self.specs = {a.agent: a for a in config.adversaries}
        pos = {i: k for k, i in enumerate(self.normal_ids)}
        n_norm = len(self.normal_ids)

        # adversarial edges grouped by the sub-signal they carry
        self.adv_edges: list[tuple[int, int]] = []  # (adversary, target)
        self.adv_streams: dict[tuple[int, int], list[int]] = {}
        cols: list[list[int]] = []
        senders: list[list[int]] = []
        for i in self.normal_ids:
            row, srow = [], []
            for j in sorted(g.in_neighbors(i)):
                if j in pos:
                    row.append(pos[j])
                else:
                    key, _ = self.specs[j].sub_model(i)
                    self.adv_streams.setdefault((j, key), []).append(len(self.adv_edges))
                    row.append(n_norm + len(self.adv_edges))
                    self.adv_edges.append((j, i))
                srow.append(j)
            cols.append(row)
            senders.append(srow)
        self.width = max((len(r) for r in cols), default=0)
        pad = n_norm + len(self.adv_edges)
        self.col_index = np.full((n_norm, self.width), pad, dtype=np.intp)
        self.sender_ids = np.zeros((n_norm, self.width), dtype=np.int64)
        for k, (row, srow) in enumerate(zip(cols, senders)):
            self.col_index[k, : len(row)] = row
            self.sender_ids[k, : len(srow)] = srow
        self.degree = np.array([len(r) for r in cols], dtype=np.intp)
        self.valid = np.arange(self.width)[None, :] < self.degree[:, None]
        self.rows = np.arange(n_norm)[:, None]
        self.edge_raw = np.array([self.specs[j].raw_gain_output for j, _ in self.adv_edges], dtype=bool)

    def adversary_values(self, t: float, step: int) -> np.ndarray:
        seed = self.config.seed
        raw = np.empty(len(self.adv_edges))
        for (j, _key), edge_ids in self.adv_streams.items():
            target = self.adv_edges[edge_ids[0]][1]
            raw[edge_ids] = float(adversary_signal(self.specs[j], target, t, step, seed))
        if not np.all(np.isfinite(raw)):
            k = int(np.flatnonzero(~np.isfinite(raw))[0])
            raise SimulationError(f"adversary {self.adv_edges[k][0]} sent a non-finite value at step {step}")
        with np.errstate(over="ignore", invalid="ignore"):
            vals = np.where(self.edge_raw, raw, self.gain(raw))
        if not np.all(np.isfinite(vals)):
            k = int(np.flatnonzero(~np.isfinite(vals))[0])
            raise SimulationError(f"g overflowed on adversary {self.adv_edges[k][0]}'s value at step {step}")
        return vals

    def received_matrix(self, gx: np.ndarray, t: float, step: int) -> np.ndarray:
        pool = np.concatenate([gx, self.adversary_values(t, step), [np.nan]])
        return pool[self.col_index]

    def controls(self, x: np.ndarray, t: float, step: int, want_removed: bool = False):
        F = self.config.F
        with np.errstate(over="ignore", invalid="ignore"):
            gx = self.gain(x)
        if not np.all(np.isfinite(gx)):
            k = int(np.flatnonzero(~np.isfinite(gx))[0])
            raise SimulationError(f"agent {self.normal_ids[k]}: non-finite broadcast g(x) at step {step}")
        R = self.received_matrix(gx, t, step)
        own = gx[:, None]
        # columns are in sender-id order, so a stable sort orders by (value, sender)
        order = np.argsort(R, axis=1, kind="stable")
        Rs = R[self.rows, order]
        hi = np.minimum(F, (R > own).sum(axis=1))
        lo = np.minimum(F, (R < own).sum(axis=1))
        p = np.arange(self.width)[None, :]
        deg = self.degree[:, None]
        dropped = (p < lo[:, None]) | ((p >= deg - hi[:, None]) & (p < deg))
        kept = self.valid & ~dropped
        diffs = np.where(kept, Rs - own, 0.0)
        s = diffs.sum(axis=1)
        mag = np.abs(diffs).sum(axis=1)
        sgn = np.sign(s)
        k = kept.sum(axis=1)
        unsure = (np.abs(s) <= 2.0 * (k + 2) * _EPS * mag) & (mag > 0)
        for row in np.flatnonzero(unsure):
            sgn[row] = exact_sign_of_differences(Rs[row, kept[row]].tolist(), float(gx[row]))
        u = self.config.alpha * sgn
        removed = None
        if want_removed:
            removed = np.zeros_like(dropped)
            removed[self.rows, order] = dropped & self.valid
        return u, removed

    def step(self, state: SimState) -> SimState:
        u, _ = self.controls(state.x, state.t, state.step)
        nxt = state.x + self.config.dt * u
        return SimState((state.step + 1) * self.config.dt, state.step + 1, nxt)

    def canonical(self, t: float, step: int) -> list[float]:
        return [float(canonical_broadcast(self.specs[a], t, step, self.config.seed)) for a in self.adversary_ids]

    def run(self) -> TrajectoryLog:
        cfg = self.config
        x = cfg.initial_states()
        tol = cfg.tol
        max_steps = math.ceil(cfg.t_max / cfg.dt - 1e-9)
        max_steps = -(-max_steps // cfg.log_every) * cfg.log_every

        times, xs, us, advs, removed, steps = [], [], [], [], [], []
        run_len = 0
        first_below = None
        consensus_time = None
        reason = "t_max"
        error = None
        step = 0
        try:
            while True:
                t = step * cfg.dt
                logging_now = step % cfg.log_every == 0
                u, rem = self.controls(x, t, step, want_removed=logging_now and cfg.log_removed)
                if logging_now:
                    times.append(t)
                    xs.append(x.copy())
                    us.append(u)
                    advs.append(self.canonical(t, step))
                    steps.append(step)
                    if cfg.log_removed:
                        removed.append(rem)
                    V = float(x.max() - x.min())
                    if V <= tol:
                        if run_len == 0:
                            first_below = t
                        run_len += 1
                        if run_len >= cfg.window and consensus_time is None:
                            consensus_time = first_below
                            if cfg.stop_on_consensus:
                                reason = "consensus"
                                break
                    else:
                        run_len = 0
                if step >= max_steps:
                    break
                x = x + cfg.dt * u
                step += 1
        except SimulationError as exc:
            error = str(exc)
            reason = "error"

        log = TrajectoryLog(
            times=np.array(times),
            x=np.array(xs).reshape(len(times), len(self.normal_ids)),
            u=np.array(us).reshape(len(times), len(self.normal_ids)),
            adv=np.array(advs).reshape(len(times), len(self.adversary_ids)),
            normal_ids=self.normal_ids,
            adversary_ids=self.adversary_ids,
            alpha=cfg.alpha,
            dt=cfg.dt,
            consensus_tol=tol,
            window=cfg.window,
            log_every=cfg.log_every,
            removed_mask=np.array(removed, dtype=bool).reshape(len(times), len(self.normal_ids), self.width)
            if cfg.log_removed
            else None,
            sender_ids=self.sender_ids,
            steps=np.array(steps, dtype=np.int64),
            consensus_time=consensus_time,
            stop_reason=reason,
            error=error,
        )
        if error is not None:
            raise SimulationError(error, log)
        return log


def step(state: SimState, config: ScenarioConfig) -> SimState:
    return Simulator(config).step(state)


def run(config: ScenarioConfig) -> TrajectoryLog:
    return Simulator(config).run()
