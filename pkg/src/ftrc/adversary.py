"""Broadcast signals of misbehaving agents.

Every signal is a pure function of (model, target, t, step, seed). Random
chatter draws its coin from a hash of those inputs instead of a stateful
generator, so any step can be evaluated in isolation and in any order.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Mapping, Union

from .graph import Digraph


class AdversaryError(ValueError):
    pass


def _finite(name: str, *vals: float) -> None:
    for v in vals:
        if not math.isfinite(v):
            raise AdversaryError(f"{name}: parameters must be finite, got {v}")


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self) -> None:
        _finite("constant", self.value)

    def evaluate(self, t: float, step: int, coin_seed: tuple[int, ...]) -> float:
        return self.value


@dataclass(frozen=True)
class Ramp:
    start: float
    rate: float

    def __post_init__(self) -> None:
        _finite("ramp", self.start, self.rate)

    def evaluate(self, t: float, step: int, coin_seed: tuple[int, ...]) -> float:
        return self.start + self.rate * t


@dataclass(frozen=True)
class Sinusoid:
    amplitude: float
    frequency: float  # Hz
    phase: float = 0.0
    offset: float = 0.0

    def __post_init__(self) -> None:
        _finite("sinusoid", self.amplitude, self.frequency, self.phase, self.offset)
        if self.frequency < 0:
            raise AdversaryError("sinusoid: frequency must be nonnegative")

    def evaluate(self, t: float, step: int, coin_seed: tuple[int, ...]) -> float:
        return self.offset + self.amplitude * math.sin(2.0 * math.pi * self.frequency * t + self.phase)


def _coin(coin_seed: tuple[int, ...], step: int) -> int:
    key = ":".join(map(str, coin_seed + (step,))).encode()
    return hashlib.blake2b(key, digest_size=8).digest()[0] & 1


@dataclass(frozen=True)
class Chatter:
    """Switches between ``a`` and ``b`` at integration-step resolution.

    ``alternate`` flips on every step (``a`` on even steps); ``random`` picks
    by a fair coin per step.
    """

    a: float
    b: float
    mode: str = "alternate"

    def __post_init__(self) -> None:
        _finite("chatter", self.a, self.b)
        if self.a == self.b:
            raise AdversaryError("chatter: a and b must differ")
        if self.mode not in ("alternate", "random"):
            raise AdversaryError(f"chatter: unknown mode {self.mode!r}")

    def evaluate(self, t: float, step: int, coin_seed: tuple[int, ...]) -> float:
        if self.mode == "alternate":
            return self.a if step % 2 == 0 else self.b
        return self.b if _coin(coin_seed, step) else self.a


BaseModel = Union[Constant, Ramp, Sinusoid, Chatter]


@dataclass(frozen=True)
class Byzantine:
    """Per-target signals; unmapped targets get ``default``."""

    default: BaseModel
    targets: Mapping[int, BaseModel] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", dict(sorted((int(k), v) for k, v in self.targets.items())))

    def __hash__(self) -> int:
        return hash((self.default, tuple(self.targets.items())))

    def distinct(self) -> bool:
        return len({self.default, *self.targets.values()}) > 1


SignalModel = Union[BaseModel, Byzantine]


@dataclass(frozen=True)
class AdversarySpec:
    agent: int
    model: SignalModel
    seed_offset: int = 0
    # emit values straight onto the wire instead of passing them through g
    raw_gain_output: bool = False

    def __post_init__(self) -> None:
        if self.seed_offset < 0:
            raise AdversaryError("seed_offset must be nonnegative")

    def sub_model(self, target: int) -> tuple[int, BaseModel]:
        """(stream key, model) used toward ``target``; key 0 is the default."""
        if isinstance(self.model, Byzantine):
            if target in self.model.targets:
                return target, self.model.targets[target]
            return 0, self.model.default
        return 0, self.model

    def validate(self, graph: Digraph) -> None:
        if not 1 <= self.agent <= graph.n:
            raise AdversaryError(f"adversary {self.agent} is not a vertex of the graph")
        if isinstance(self.model, Byzantine):
            outs = graph.out_neighbors(self.agent)
            extra = sorted(set(self.model.targets) - outs)
            if extra:
                raise AdversaryError(f"adversary {self.agent}: byzantine targets {extra} are not out-neighbors")


def adversary_signal(
    spec: AdversarySpec,
    target: int,
    t: float,
    step: int,
    seed: int = 0,
    graph: Digraph | None = None,
) -> float:
    """Raw value adversary ``spec.agent`` sends to ``target`` at step ``step``."""
    if graph is not None and target not in graph.out_neighbors(spec.agent):
        raise AdversaryError(f"agent {target} is not an out-neighbor of adversary {spec.agent}")
    if t < 0:
        raise AdversaryError("time must be nonnegative")
    key, model = spec.sub_model(target)
    return model.evaluate(t, step, (seed, spec.seed_offset, key))


def canonical_broadcast(spec: AdversarySpec, t: float, step: int, seed: int = 0) -> float:
    """The default-stream signal, logged as the adversary's state."""
    model = spec.model.default if isinstance(spec.model, Byzantine) else spec.model
    return model.evaluate(t, step, (seed, spec.seed_offset, 0))


_BASE = {"constant": Constant, "ramp": Ramp, "sinusoid": Sinusoid, "chatter": Chatter}


def model_from_dict(d: Mapping) -> SignalModel:
    d = dict(d)
    kind = d.pop("model", None)
    if kind == "byzantine":
        default = model_from_dict(d.pop("default"))
        targets = {int(k): model_from_dict(v) for k, v in (d.pop("targets", None) or {}).items()}
        if d:
            raise AdversaryError(f"byzantine: unknown fields {sorted(d)}")
        if isinstance(default, Byzantine) or any(isinstance(v, Byzantine) for v in targets.values()):
            raise AdversaryError("byzantine sub-signals cannot be byzantine themselves")
        return Byzantine(default, targets)
    if kind not in _BASE:
        raise AdversaryError(f"unknown adversary model {kind!r}")
    try:
        return _BASE[kind](**d)
    except TypeError as exc:
        raise AdversaryError(f"{kind}: {exc}") from None


def model_to_dict(m: SignalModel) -> dict:
    if isinstance(m, Byzantine):
        return {
            "model": "byzantine",
            "default": model_to_dict(m.default),
            "targets": {int(k): model_to_dict(v) for k, v in m.targets.items()},
        }
    name = {v: k for k, v in _BASE.items()}[type(m)]
    return {"model": name, **{f: getattr(m, f) for f in m.__dataclass_fields__}}


def spec_from_dict(d: Mapping) -> AdversarySpec:
    d = dict(d)
    try:
        agent = int(d.pop("agent"))
    except KeyError:
        raise AdversaryError("adversary entry needs an 'agent' field") from None
    seed_offset = int(d.pop("seed_offset", 0))
    raw = bool(d.pop("raw_gain_output", False))
    return AdversarySpec(agent, model_from_dict(d), seed_offset, raw)


def spec_to_dict(spec: AdversarySpec) -> dict:
    return {
        "agent": spec.agent,
        **model_to_dict(spec.model),
        "seed_offset": spec.seed_offset,
        "raw_gain_output": spec.raw_gain_output,
    }
