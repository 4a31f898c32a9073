"""Directed communication graphs and exact robustness analysis.

Vertices are numbered ``1..n`` in every public function. Internally each
in-neighborhood is also kept as an integer bitmask (bit ``i-1`` for vertex
``i``) so that subset enumeration can run on numpy arrays.
"""
from __future__ import annotations

import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

DEFAULT_MAX_N = 20

# low ternary digits materialized per prefix; 3**9 = 19683 assignments
_LOW_DIGITS = 9
_TARGET_BATCH = 1 << 20


class GraphError(ValueError):
    pass


class GraphTooLarge(GraphError):
    pass


@dataclass(frozen=True)
class Digraph:
    """Static digraph stored by in-neighbor sets.

    An edge ``(i, j)`` means that ``j`` receives from ``i``, so ``i`` is
    in ``in_sets[j - 1]``.
    """

    n: int
    in_sets: tuple[frozenset[int], ...]
    _out_sets: tuple[frozenset[int], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1:
            raise GraphError(f"vertex count must be positive, got {self.n}")
        if len(self.in_sets) != self.n:
            raise GraphError(f"expected {self.n} in-neighbor sets, got {len(self.in_sets)}")
        out: list[set[int]] = [set() for _ in range(self.n)]
        for j, srcs in enumerate(self.in_sets, start=1):
            for i in srcs:
                if not 1 <= i <= self.n:
                    raise GraphError(f"vertex {i} out of range 1..{self.n}")
                if i == j:
                    raise GraphError(f"self-loop at vertex {j}")
                out[i - 1].add(j)
        object.__setattr__(self, "_out_sets", tuple(frozenset(s) for s in out))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Digraph":
        ins: list[set[int]] = [set() for _ in range(n)]
        for i, j in edges:
            if not 1 <= j <= n:
                raise GraphError(f"vertex {j} out of range 1..{n}")
            ins[j - 1].add(int(i))
        return cls(n, tuple(frozenset(s) for s in ins))

    @property
    def vertices(self) -> range:
        return range(1, self.n + 1)

    def in_neighbors(self, i: int) -> frozenset[int]:
        return self.in_sets[i - 1]

    def out_neighbors(self, i: int) -> frozenset[int]:
        return self._out_sets[i - 1]

    def in_degree(self, i: int) -> int:
        return len(self.in_sets[i - 1])

    def edges(self) -> list[tuple[int, int]]:
        return sorted((i, j) for j in self.vertices for i in self.in_sets[j - 1])

    def with_edge(self, i: int, j: int) -> "Digraph":
        return Digraph.from_edges(self.n, self.edges() + [(i, j)])

    def in_masks(self) -> list[int]:
        return [sum(1 << (i - 1) for i in s) for s in self.in_sets]

    def to_text(self) -> str:
        lines = [f"n {self.n}"]
        lines += [f"{i} {j}" for i, j in self.edges()]
        return "\n".join(lines) + "\n"

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "Digraph":
        n = None
        edges = []
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if n is None:
                if len(parts) != 2 or parts[0] != "n":
                    raise GraphError(f"line {lineno}: expected header 'n <count>'")
                n = int(parts[1])
                continue
            if len(parts) != 2:
                raise GraphError(f"line {lineno}: expected 'i j', got {raw!r}")
            edges.append((int(parts[0]), int(parts[1])))
        if n is None:
            raise GraphError("missing header 'n <count>'")
        return cls.from_edges(n, edges)

    @classmethod
    def load(cls, path: str | Path) -> "Digraph":
        return cls.from_text(Path(path).read_text())


def make_k_circulant(n: int, k: int) -> Digraph:
    """Vertex ``i`` receives from ``i+1, ..., i+k`` (indices wrap mod ``n``)."""
    if n < 2:
        raise GraphError(f"circulant needs n >= 2, got {n}")
    if not 1 <= k <= n - 1:
        raise GraphError(f"circulant needs 1 <= k <= n-1, got k={k} for n={n}")
    ins = tuple(frozenset((i - 1 + d) % n + 1 for d in range(1, k + 1)) for i in range(1, n + 1))
    return Digraph(n, ins)


def complete_digraph(n: int) -> Digraph:
    return Digraph(n, tuple(frozenset(j for j in range(1, n + 1) if j != i) for i in range(1, n + 1)))


def directed_cycle(n: int) -> Digraph:
    return make_k_circulant(n, 1)


def _check_subset(g: Digraph, S: Iterable[int]) -> frozenset[int]:
    S = frozenset(S)
    for v in S:
        if not 1 <= v <= g.n:
            raise GraphError(f"vertex {v} out of range 1..{g.n}")
    return S


def is_r_reachable(g: Digraph, S: Iterable[int], r: int) -> bool:
    S = _check_subset(g, S)
    if not S:
        raise GraphError("r-reachability is defined for nonempty sets only")
    return any(len(g.in_neighbors(i) - S) >= r for i in S)


def is_F_local(g: Digraph, A: Iterable[int], F: int) -> bool:
    A = _check_subset(g, A)
    return all(len(g.in_neighbors(i) & A) <= F for i in g.vertices if i not in A)


@dataclass(frozen=True)
class RobustnessCertificate:
    r: int
    robust: bool
    witness: tuple[frozenset[int], frozenset[int]] | None = None
    n: int = 0
    assignments_checked: int = 0
    elapsed: float = 0.0

    def __post_init__(self) -> None:
        if self.robust != (self.witness is None):
            raise ValueError("witness must be present exactly when the graph is not robust")

    @property
    def verdict(self) -> str:
        return "robust" if self.robust else "not-robust"

    def report(self) -> str:
        lines = [
            f"verdict: {self.verdict}",
            f"r: {self.r}",
            f"n: {self.n}",
            f"assignments_checked: {self.assignments_checked}",
            f"wall_time_s: {self.elapsed:.3f}",
        ]
        if self.witness is not None:
            s1, s2 = self.witness
            lines.append("witness_S1: " + " ".join(map(str, sorted(s1))))
            lines.append("witness_S2: " + " ".join(map(str, sorted(s2))))
        return "\n".join(lines) + "\n"


def _unreachable(masks: list[int], r: int) -> np.ndarray:
    # masks[p]: in-neighborhood of the vertex stored at bit p, same layout
    size = 1 << len(masks)
    subsets = np.arange(size, dtype=np.int64)
    reachable = np.zeros(size, dtype=bool)
    for p, mask in enumerate(masks):
        outside = np.bitwise_count(np.int64(mask) & ~subsets)
        reachable |= ((subsets >> p) & 1).astype(bool) & (outside >= r)
    table = ~reachable
    table[0] = False
    return table


def unreachable_table(g: Digraph, r: int) -> np.ndarray:
    """Boolean array over all ``2**n`` subsets (vertex ``i`` at bit ``i-1``):
    True where the subset is nonempty and not r-reachable."""
    return _unreachable(g.in_masks(), r)


def _ternary_low_block(m: int) -> tuple[np.ndarray, np.ndarray]:
    """S1/S2 bitmasks over bits 0..m-1 for all 3**m assignments, listed in
    ascending assignment order (bit b is ternary digit b; 0 neither, 1 S1, 2 S2)."""
    s1 = np.zeros(1, dtype=np.int64)
    s2 = np.zeros(1, dtype=np.int64)
    for b in range(m):
        bit = np.int64(1 << b)
        s1 = np.concatenate([s1, s1 | bit, s1])
        s2 = np.concatenate([s2, s2, s2 | bit])
    return s1, s2


def _prefix_masks(n: int, m: int) -> tuple[np.ndarray, np.ndarray]:
    """S1/S2 bitmasks over the high bits n-1..m, most significant first.
    The top bit (vertex 1) never goes to S2."""
    p1 = [0]
    p2 = [0]
    for bitpos in range(n - 1, m - 1, -1):
        choices = (0, 1) if bitpos == n - 1 else (0, 1, 2)
        bit = 1 << bitpos
        n1, n2 = [], []
        for a, b in zip(p1, p2):
            for d in choices:
                n1.append(a | bit if d == 1 else a)
                n2.append(b | bit if d == 2 else b)
        p1, p2 = n1, n2
    return np.asarray(p1, dtype=np.int64), np.asarray(p2, dtype=np.int64)


def _bits_to_vertices(mask: int, n: int) -> frozenset[int]:
    # enumeration layout: vertex v lives at bit n - v
    return frozenset(n - p for p in range(n) if mask >> p & 1)


def is_r_robust(g: Digraph, r: int, max_n: int = DEFAULT_MAX_N, workers: int = 1) -> RobustnessCertificate:
    """Exact r-robustness by enumerating vertex assignments to (S1, S2, neither).

    Assignments are enumerated in a fixed canonical order (vertex 1 is the
    most significant ternary digit and never placed in S2, which is a pure
    symmetry cut). The returned witness is the first one in that order, no
    matter how many worker threads share the scan.
    """
    if g.n < 2:
        raise GraphError("robustness needs n >= 2")
    if r < 0:
        raise GraphError(f"r must be nonnegative, got {r}")
    if g.n > max_n:
        raise GraphTooLarge(f"n={g.n} exceeds the enumeration cap {max_n}")
    start = time.perf_counter()
    n = g.n
    # vertex v at bit n - v so that vertex 1 is the most significant digit
    masks = [sum(1 << (n - i) for i in g.in_neighbors(n - p)) for p in range(n)]
    bad = _unreachable(masks, r)

    m = min(_LOW_DIGITS, n - 1)
    lo1, lo2 = _ternary_low_block(m)
    hi1, hi2 = _prefix_masks(n, m)
    per_batch = max(1, _TARGET_BATCH // len(lo1))
    batches = [(s, min(s + per_batch, len(hi1))) for s in range(0, len(hi1), per_batch)]

    def scan(bounds: tuple[int, int]) -> int | None:
        a, b = bounds
        s1 = (hi1[a:b, None] | lo1[None, :]).reshape(-1)
        s2 = (hi2[a:b, None] | lo2[None, :]).reshape(-1)
        hit = bad[s1] & bad[s2]
        idx = np.flatnonzero(hit)
        if idx.size == 0:
            return None
        k = int(idx[0])
        return int(s1[k]) << 32 | int(s2[k])

    found = None
    checked = 0
    if workers <= 1:
        for bounds in batches:
            checked += (bounds[1] - bounds[0]) * len(lo1)
            found = scan(bounds)
            if found is not None:
                break
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for w in range(0, len(batches), workers):
                group = batches[w : w + workers]
                results = list(pool.map(scan, group))
                for bounds, res in zip(group, results):
                    checked += (bounds[1] - bounds[0]) * len(lo1)
                    if res is not None:
                        found = res
                        break
                if found is not None:
                    break

    elapsed = time.perf_counter() - start
    if found is None:
        return RobustnessCertificate(r, True, None, n, checked, elapsed)
    s1 = _bits_to_vertices(found >> 32, n)
    s2 = _bits_to_vertices(found & 0xFFFFFFFF, n)
    return RobustnessCertificate(r, False, (s1, s2), n, checked, elapsed)


def max_robustness(g: Digraph, max_n: int = DEFAULT_MAX_N, workers: int = 1) -> int:
    """Largest r for which ``g`` is r-robust (0 if not even 1-robust)."""
    if g.n > max_n:
        raise GraphTooLarge(f"n={g.n} exceeds the enumeration cap {max_n}")
    # no digraph on n vertices is r-robust beyond ceil(n/2)
    r = 0
    while r < (g.n + 1) // 2 and is_r_robust(g, r + 1, max_n, workers).robust:
        r += 1
    return r


def brute_force_robust(g: Digraph, r: int) -> tuple[frozenset[int], frozenset[int]] | None:
    """Direct transcription of the definition, exponential and meant for
    small n. Returns the first failing pair in canonical order, or None."""
    V = list(g.vertices)
    for labels in itertools.product((0, 1, 2), repeat=g.n):
        s1 = frozenset(v for v, l in zip(V, labels) if l == 1)
        s2 = frozenset(v for v, l in zip(V, labels) if l == 2)
        if s1 and s2 and not is_r_reachable(g, s1, r) and not is_r_reachable(g, s2, r):
            return s1, s2
    return None
