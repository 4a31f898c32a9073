"""Scenario configuration: dataclass, YAML loading, dotted-key overrides."""
from __future__ import annotations

import copy
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .adversary import AdversaryError, AdversarySpec, spec_from_dict, spec_to_dict
from .graph import DEFAULT_MAX_N, Digraph, GraphError, complete_digraph, is_F_local, make_k_circulant
from .protocol import GainFunction, ProtocolError

log = logging.getLogger(__name__)

BUNDLED = ("scenario_paper_sec4", "scenario_paper_sec4_random", "scenario_chatter", "scenario_byzantine", "scenario_non_robust")


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass
class GraphSpec:
    kind: str = "circulant"
    n: int | None = None
    k: int | None = None
    path: str | None = None
    edges: list[list[int]] | None = None

    def build(self) -> Digraph:
        try:
            if self.kind == "circulant":
                return make_k_circulant(int(self.n), int(self.k))
            if self.kind == "complete":
                return complete_digraph(int(self.n))
            if self.kind == "cycle":
                return make_k_circulant(int(self.n), 1)
            if self.kind == "file":
                return Digraph.load(self.path)
            if self.kind == "edges":
                return Digraph.from_edges(int(self.n), [tuple(e) for e in self.edges or []])
        except (GraphError, TypeError, OSError) as exc:
            raise ConfigError("graph", str(exc)) from None
        raise ConfigError("graph.kind", f"unknown graph kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass
class ScenarioConfig:
    graph: GraphSpec
    F: int
    alpha: float
    adversaries: list[AdversarySpec] = field(default_factory=list)
    gain: GainFunction = field(default_factory=GainFunction.identity)
    normal_init: list[float] | None = None
    init_uniform: tuple[float, float] | None = None
    dt: float = 1e-3
    t_max: float = 10.0
    seed: int = 0
    consensus_tol: float | None = None  # None -> 4 * alpha * dt
    window: int = 10
    rate_window: int = 5
    log_every: int = 1
    stop_on_consensus: bool = True
    log_removed: bool = True
    check_hypotheses: bool = True
    max_n: int = DEFAULT_MAX_N
    expect: str = "theorem"
    name: str = "scenario"

    _digraph: Digraph | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def digraph(self) -> Digraph:
        if self._digraph is None:
            self._digraph = self.graph.build()
        return self._digraph

    @property
    def tol(self) -> float:
        return self.consensus_tol if self.consensus_tol is not None else 4.0 * self.alpha * self.dt

    @property
    def adversary_ids(self) -> list[int]:
        return sorted(a.agent for a in self.adversaries)

    @property
    def normal_ids(self) -> list[int]:
        bad = set(self.adversary_ids)
        return [i for i in self.digraph.vertices if i not in bad]

    def initial_states(self) -> np.ndarray:
        if self.normal_init is not None:
            return np.asarray(self.normal_init, dtype=float)
        lo, hi = self.init_uniform
        rng = np.random.default_rng(self.seed)
        return rng.uniform(lo, hi, size=len(self.normal_ids))

    def validate(self) -> list[str]:
        """Raise ConfigError on invalid fields; return warnings."""
        g = self.digraph
        if not self.dt > 0:
            raise ConfigError("simulation.dt", "dt must be positive")
        if not self.t_max > 0:
            raise ConfigError("simulation.t_max", "t_max must be positive")
        if not self.alpha > 0:
            raise ConfigError("protocol.alpha", "alpha must be positive")
        if self.F < 0:
            raise ConfigError("protocol.F", "F must be nonnegative")
        if self.consensus_tol is not None and not self.consensus_tol > 0:
            raise ConfigError("analysis.consensus_tol", "consensus_tol must be positive")
        for name in ("window", "rate_window", "log_every"):
            if getattr(self, name) < 1:
                raise ConfigError(name, f"{name} must be at least 1")
        if self.expect not in ("theorem", "exploratory"):
            raise ConfigError("expect", f"expect must be 'theorem' or 'exploratory', got {self.expect!r}")
        ids = [a.agent for a in self.adversaries]
        if len(set(ids)) != len(ids):
            raise ConfigError("adversaries", "adversary ids must be distinct")
        for a in self.adversaries:
            try:
                a.validate(g)
            except AdversaryError as exc:
                raise ConfigError("adversaries", str(exc)) from None
        if not self.normal_ids:
            raise ConfigError("adversaries", "at least one agent must be normal")
        if self.normal_init is None and self.init_uniform is None:
            raise ConfigError("agents", "give either init or init_uniform")
        if self.normal_init is not None:
            if len(self.normal_init) != len(self.normal_ids):
                raise ConfigError(
                    "agents.init",
                    f"expected {len(self.normal_ids)} initial states (normal agents {self.normal_ids}), got {len(self.normal_init)}",
                )
            if not np.all(np.isfinite(self.normal_init)):
                raise ConfigError("agents.init", "initial states must be finite")
        elif not (len(self.init_uniform) == 2 and self.init_uniform[0] <= self.init_uniform[1]):
            raise ConfigError("agents.init_uniform", "expected [lo, hi] with lo <= hi")
        if not self.gain.check_increasing():
            raise ConfigError("protocol.gain", "gain function is not strictly increasing on the check grid")
        warnings = []
        if not is_F_local(g, ids, self.F):
            warnings.append(f"adversary set {sorted(ids)} is not {self.F}-local; convergence guarantees do not apply")
        return warnings

    def to_dict(self) -> dict:
        agents: dict[str, Any] = {}
        if self.normal_init is not None:
            agents["init"] = [float(v) for v in self.normal_init]
        else:
            agents["init_uniform"] = [float(v) for v in self.init_uniform]
        return {
            "name": self.name,
            "expect": self.expect,
            "seed": self.seed,
            "graph": self.graph.to_dict(),
            "agents": agents,
            "adversaries": [spec_to_dict(a) for a in self.adversaries],
            "protocol": {"F": self.F, "alpha": self.alpha, "gain": self.gain.to_config()},
            "simulation": {
                "dt": self.dt,
                "t_max": self.t_max,
                "log_every": self.log_every,
                "stop_on_consensus": self.stop_on_consensus,
                "log_removed": self.log_removed,
            },
            "analysis": {
                "consensus_tol": self.tol,
                "window": self.window,
                "rate_window": self.rate_window,
                "check_hypotheses": self.check_hypotheses,
                "max_n": self.max_n,
            },
        }

    def replace(self, **changes) -> "ScenarioConfig":
        new = copy.copy(self)
        for k, v in changes.items():
            setattr(new, k, v)
        if "graph" in changes:
            new._digraph = None
        return new


_SECTIONS = {
    "graph": None,
    "agents": {"init", "init_uniform"},
    "adversaries": None,
    "protocol": {"F", "alpha", "gain"},
    "simulation": {"dt", "t_max", "log_every", "stop_on_consensus", "log_removed"},
    "analysis": {"consensus_tol", "window", "rate_window", "check_hypotheses", "max_n"},
}
_TOP = {"name", "expect", "seed"}


def from_dict(d: dict, base_dir: Path | None = None) -> ScenarioConfig:
    d = copy.deepcopy(d)
    unknown = set(d) - set(_SECTIONS) - _TOP
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown field")
    for sec, keys in _SECTIONS.items():
        if keys is None or sec not in d:
            continue
        if not isinstance(d[sec], dict):
            raise ConfigError(sec, "expected a mapping")
        extra = set(d[sec]) - keys
        if extra:
            raise ConfigError(f"{sec}.{sorted(extra)[0]}", "unknown field")

    gd = d.get("graph")
    if not isinstance(gd, dict):
        raise ConfigError("graph", "missing graph section")
    try:
        graph = GraphSpec(**gd)
    except TypeError as exc:
        raise ConfigError("graph", str(exc)) from None
    if graph.kind == "file" and graph.path and base_dir is not None and not Path(graph.path).is_absolute():
        graph.path = str((base_dir / graph.path).resolve())

    proto = d.get("protocol", {})
    if "F" not in proto or "alpha" not in proto:
        raise ConfigError("protocol", "F and alpha are required")
    try:
        gain = GainFunction.parse(proto.get("gain", "identity"))
    except (ProtocolError, TypeError, ValueError) as exc:
        raise ConfigError("protocol.gain", str(exc)) from None

    advs = []
    for idx, a in enumerate(d.get("adversaries") or []):
        try:
            advs.append(spec_from_dict(a))
        except (AdversaryError, TypeError, ValueError) as exc:
            raise ConfigError(f"adversaries[{idx}]", str(exc)) from None

    agents = d.get("agents", {})
    sim = d.get("simulation", {})
    ana = d.get("analysis", {})
    try:
        cfg = ScenarioConfig(
            graph=graph,
            F=int(proto["F"]),
            alpha=float(proto["alpha"]),
            adversaries=advs,
            gain=gain,
            normal_init=[float(v) for v in agents["init"]] if "init" in agents else None,
            init_uniform=tuple(float(v) for v in agents["init_uniform"]) if "init_uniform" in agents else None,
            dt=float(sim.get("dt", 1e-3)),
            t_max=float(sim.get("t_max", 10.0)),
            seed=int(d.get("seed", 0)),
            consensus_tol=None if ana.get("consensus_tol") is None else float(ana["consensus_tol"]),
            window=int(ana.get("window", 10)),
            rate_window=int(ana.get("rate_window", 5)),
            log_every=int(sim.get("log_every", 1)),
            stop_on_consensus=bool(sim.get("stop_on_consensus", True)),
            log_removed=bool(sim.get("log_removed", True)),
            check_hypotheses=bool(ana.get("check_hypotheses", True)),
            max_n=int(ana.get("max_n", DEFAULT_MAX_N)),
            expect=str(d.get("expect", "theorem")),
            name=str(d.get("name", "scenario")),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("config", str(exc)) from None
    return cfg


def parse_override(item: str) -> tuple[list[str], Any]:
    if "=" not in item:
        raise ConfigError(item, "override must look like key=value")
    key, raw = item.split("=", 1)
    return key.strip().split("."), yaml.safe_load(raw)


def apply_overrides(d: dict, overrides: list[str]) -> dict:
    d = copy.deepcopy(d)
    for item in overrides:
        path, value = parse_override(item)
        node = d
        for p in path[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(".".join(path), "cannot override inside a non-mapping")
        node[path[-1]] = value
    return d


def resolve_path(name_or_path: str) -> Path:
    p = Path(name_or_path)
    if p.exists():
        return p
    stem = p.stem if p.suffix in (".yaml", ".yml") else p.name
    if stem in BUNDLED:
        return Path(str(resources.files("ftrc") / "scenarios" / f"{stem}.yaml"))
    raise ConfigError("config", f"no such config file or bundled scenario: {name_or_path}")


def load_raw(name_or_path: str) -> tuple[dict, Path]:
    path = resolve_path(name_or_path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError("config", f"cannot parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config", f"{path} does not hold a mapping")
    return data, path


def load_config(name_or_path: str, overrides: list[str] | None = None) -> ScenarioConfig:
    data, path = load_raw(name_or_path)
    if overrides:
        data = apply_overrides(data, overrides)
    return from_dict(data, base_dir=path.parent)


def dump_config(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(cfg.to_dict(), sort_keys=False)
