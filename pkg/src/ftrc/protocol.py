"""Resilient sign-consensus rule: gain function, F-trimming filter, control input."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class ProtocolError(ValueError):
    pass


def sign(x: float) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


@dataclass(frozen=True)
class GainFunction:
    """Odd polynomial ``sum(c * x**e)`` applied to states before broadcast.

    Powers are built by repeated multiplication in a fixed order so a scalar
    call and an array call give bitwise-identical results.
    """

    terms: tuple[tuple[float, int], ...] = ((1.0, 1),)

    def __post_init__(self) -> None:
        if not self.terms:
            raise ProtocolError("gain function needs at least one term")
        terms = tuple(sorted(((float(c), int(e)) for c, e in self.terms), key=lambda t: t[1]))
        for c, e in terms:
            if e < 1 or e % 2 == 0:
                raise ProtocolError(f"gain exponents must be odd and positive, got {e}")
            if not math.isfinite(c):
                raise ProtocolError(f"gain coefficient must be finite, got {c}")
        object.__setattr__(self, "terms", terms)

    @classmethod
    def identity(cls) -> "GainFunction":
        return cls(((1.0, 1),))

    @classmethod
    def paper_polynomial(cls) -> "GainFunction":
        return cls(((0.1, 3), (1e-3, 5), (1e-4, 7)))

    @classmethod
    def parse(cls, spec) -> "GainFunction":
        if spec is None or spec == "identity":
            return cls.identity()
        if isinstance(spec, str):
            raise ProtocolError(f"unknown gain keyword {spec!r}")
        return cls(tuple((float(c), int(e)) for c, e in spec))

    @property
    def is_identity(self) -> bool:
        return self.terms == ((1.0, 1),)

    def to_config(self):
        return "identity" if self.is_identity else [[c, e] for c, e in self.terms]

    def __call__(self, x):
        if self.is_identity:
            return x
        x2 = x * x
        power = x
        exp = 1
        acc = None
        for c, e in self.terms:
            while exp < e:
                power = power * x2
                exp += 2
            term = c * power
            acc = term if acc is None else acc + term
        return acc

    def check_increasing(self, span: float = 1e3, points: int = 10_001) -> bool:
        grid = np.linspace(-span, span, points)
        with np.errstate(over="ignore", invalid="ignore"):
            vals = self(grid)
        return bool(np.all(np.isfinite(vals)) and np.all(np.diff(vals) > 0))


@dataclass(frozen=True)
class ReceivedValue:
    sender: int
    value: float


@dataclass(frozen=True)
class FilterOutcome:
    removed: frozenset[int]
    retained: tuple[ReceivedValue, ...]
    own: float

    @property
    def retained_values(self) -> list[float]:
        return [rv.value for rv in self.retained] + [self.own]


def filter_values(own: float, received: Sequence[ReceivedValue], F: int) -> FilterOutcome:
    """Drop up to F values strictly above ``own`` and up to F strictly below.

    If fewer than F values lie strictly above, all of them go; otherwise
    exactly the F largest go. Same on the low side. Ties at a cut are broken
    by sender id: larger ids are dropped first on the high side, smaller ids
    first on the low side.
    """
    if F < 0:
        raise ProtocolError(f"F must be nonnegative, got {F}")
    senders = [rv.sender for rv in received]
    if len(set(senders)) != len(senders):
        raise ProtocolError("duplicate sender in received values")
    ordered = sorted(received, key=lambda rv: (rv.value, rv.sender))
    n_above = sum(1 for rv in ordered if rv.value > own)
    n_below = sum(1 for rv in ordered if rv.value < own)
    hi = min(F, n_above)
    lo = min(F, n_below)
    dropped = ordered[:lo] + ordered[len(ordered) - hi :]
    kept = ordered[lo : len(ordered) - hi]
    return FilterOutcome(frozenset(rv.sender for rv in dropped), tuple(kept), own)


def exact_sign_of_differences(values: Iterable[float], own: float) -> int:
    """Sign of ``sum(v - own)`` evaluated without rounding error."""
    values = list(values)
    return sign(math.fsum(values + [-own] * len(values)))


def control_input(
    own_state: float,
    received: Sequence[ReceivedValue],
    F: int,
    alpha: float,
    g: GainFunction | None = None,
) -> float:
    """``alpha * sign(sum_j (g(x_j) - g(x_i)))`` over the filtered neighbors.

    ``received`` already carries gain-transformed values. The agent's own
    term is part of the sum and contributes zero.
    """
    if not alpha > 0:
        raise ProtocolError(f"alpha must be positive, got {alpha}")
    g = g or GainFunction.identity()
    own = g(own_state)
    outcome = filter_values(own, received, F)
    return alpha * exact_sign_of_differences((rv.value for rv in outcome.retained), own)
