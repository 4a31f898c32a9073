"""Random scenarios that satisfy the convergence hypotheses.

Each scenario has a digraph whose (2F+1)-robustness was confirmed by
exhaustive enumeration and an F-local adversary set. Adversary models cycle
through every implemented kind so that a batch of scenarios covers them all.
"""
from __future__ import annotations

import numpy as np

from .adversary import AdversarySpec, Byzantine, Chatter, Constant, Ramp, Sinusoid
from .config import GraphSpec, ScenarioConfig
from .graph import Digraph, complete_digraph, is_F_local, is_r_robust
from .protocol import GainFunction

MODEL_KINDS = ("constant", "ramp", "sinusoid", "chatter_alternate", "chatter_random", "byzantine")

GAINS = (
    GainFunction.identity(),
    GainFunction.paper_polynomial(),
    GainFunction(((1.0, 1), (0.5, 3))),
)


def random_robust_digraph(n: int, r: int, rng: np.random.Generator, drop: float) -> Digraph:
    """Complete digraph with edges dropped at random, kept only if r-robust."""
    for _ in range(20):
        edges = [e for e in complete_digraph(n).edges() if rng.random() >= drop]
        g = Digraph.from_edges(n, edges)
        if is_r_robust(g, r).robust:
            return g
        drop *= 0.7
    return complete_digraph(n)


def _base_model(kind: str, lo: float, width: float, rng: np.random.Generator):
    far_lo, far_hi = lo - width, lo + 2 * width
    if kind == "constant":
        return Constant(float(rng.uniform(far_lo, far_hi)))
    if kind == "ramp":
        return Ramp(float(rng.uniform(far_lo, far_hi)), float(rng.uniform(-3, 3) * width))
    if kind == "sinusoid":
        return Sinusoid(float(width * rng.uniform(0.5, 1.5)), float(rng.uniform(0.1, 5.0)), float(rng.uniform(0, 6.28)), float(lo + width / 2))
    if kind == "chatter_alternate":
        return Chatter(float(far_lo), float(far_hi), "alternate")
    if kind == "chatter_random":
        return Chatter(float(lo), float(lo + width), "random")
    raise ValueError(kind)


def _adversary(agent: int, kind: str, g: Digraph, lo: float, width: float, rng, offset: int) -> AdversarySpec:
    if kind == "byzantine":
        outs = sorted(g.out_neighbors(agent))
        picks = rng.choice(outs, size=min(len(outs), 3), replace=False) if outs else []
        targets = {int(t): _base_model(MODEL_KINDS[int(rng.integers(5))], lo, width, rng) for t in picks}
        model = Byzantine(_base_model("chatter_alternate", lo, width, rng), targets)
    else:
        model = _base_model(kind, lo, width, rng)
    return AdversarySpec(agent, model, seed_offset=offset, raw_gain_output=bool(rng.random() < 0.2))


def random_scenario(index: int, base_seed: int = 0, dt: float | None = None) -> ScenarioConfig:
    """Deterministic scenario number ``index``; F cycles 0, 1, 2 and the
    adversary model cycles through MODEL_KINDS
    for each F."""
    rng = np.random.default_rng([base_seed, index])
    F = index % 3
    r = 2 * F + 1
    n = int(rng.integers(max(2 * r - 1, 3) + (1 if F else 0), 13))
    drop = {0: 0.6, 1: 0.25, 2: 0.1}[F]
    g = random_robust_digraph(n, r, rng, drop)

    # F-local adversary set: grow greedily from a shuffled order
    A: list[int] = []
    want = int(rng.integers(0, F + 2)) if F else int(rng.integers(0, 2))
    for v in rng.permutation(np.arange(1, n + 1)).tolist():
        if len(A) >= want or len(A) >= n - 2:
            break
        if is_F_local(g, A + [v], F):
            A.append(v)
    if F == 0:
        A = []  # 0-local with any adversary means it is isolated from normals

    width = float(rng.choice([1.0, 10.0, 50.0]))
    lo = float(rng.uniform(-20, 20))
    if dt is None:
        dt = 1e-4 if index % 4 == 3 else 1e-3
    alpha = float(rng.choice([1.0, 5.0, 10.0]))
    if dt < 1e-3:
        alpha = max(alpha, width)  # keep the step count moderate
    kind = MODEL_KINDS[(index // 3) % len(MODEL_KINDS)]
    advs = [_adversary(a, kind, g, lo, width, rng, k) for k, a in enumerate(sorted(A))]
    return ScenarioConfig(
        graph=GraphSpec("edges", n=n, edges=[list(e) for e in g.edges()]),
        F=F,
        alpha=alpha,
        adversaries=advs,
        gain=GAINS[int(rng.integers(len(GAINS)))],
        init_uniform=(lo, lo + width),
        dt=dt,
        t_max=width / alpha + 0.25,
        seed=int(rng.integers(2**31)),
        stop_on_consensus=False,
        log_removed=False,
        check_hypotheses=False,
        name=f"random_{base_seed}_{index}",
    )
