import pytest

from ftrc.config import BUNDLED, ConfigError, apply_overrides, dump_config, from_dict, load_config, load_raw
from ftrc.protocol import GainFunction
from ftrc.sim import run


@pytest.mark.parametrize("name", BUNDLED)
def test_bundled_scenarios_load(name):
    cfg = load_config(name)
    cfg.validate()
    assert cfg.name == name


def test_sec4_parameters():
    cfg = load_config("scenario_paper_sec4")
    assert (cfg.digraph.n, cfg.F, cfg.alpha, cfg.dt) == (15, 2, 10.0, 1e-3)
    assert cfg.adversary_ids == [2, 13]
    assert cfg.gain == GainFunction.paper_polynomial()
    assert cfg.tol == pytest.approx(0.04)
    assert all(0 <= v <= 50 for v in cfg.initial_states())


def test_random_variant_is_seeded():
    a = load_config("scenario_paper_sec4_random")
    assert a.initial_states().tolist() == a.initial_states().tolist()
    assert a.replace(seed=5).initial_states().tolist() != a.initial_states().tolist()


@pytest.mark.parametrize(
    "override,field",
    [
        ("simulation.dt=0", "simulation.dt"),
        ("simulation.t_max=-1", "simulation.t_max"),
        ("protocol.alpha=0", "protocol.alpha"),
        ("analysis.consensus_tol=0", "analysis.consensus_tol"),
        ("expect=maybe", "expect"),
        ("protocol.gain=[[1, 2]]", "protocol.gain"),
        ("agents.init=[1, 2]", "agents.init"),
    ],
)
def test_validation_names_the_field(override, field):
    data, _ = load_raw("scenario_paper_sec4")
    with pytest.raises(ConfigError) as info:
        from_dict(apply_overrides(data, [override])).validate()
    assert info.value.field == field
    assert str(info.value).startswith(field + ":")


def test_unknown_fields_rejected():
    data, _ = load_raw("scenario_paper_sec4")
    with pytest.raises(ConfigError, match="simulation.dtt"):
        from_dict(apply_overrides(data, ["simulation.dtt=1"]))
    with pytest.raises(ConfigError, match="bogus"):
        from_dict({**data, "bogus": 1})


def test_adversary_errors():
    data, _ = load_raw("scenario_paper_sec4")
    bad = apply_overrides(data, ["adversaries=[{agent: 2, model: chatter, a: 1, b: 1}]"])
    with pytest.raises(ConfigError, match="adversaries"):
        from_dict(bad)
    dup = apply_overrides(data, ["adversaries=[{agent: 2, model: constant, value: 1}, {agent: 2, model: constant, value: 2}]"])
    with pytest.raises(ConfigError, match="distinct"):
        from_dict(dup).validate()


def test_F_locality_is_a_warning():
    cfg = load_config("scenario_paper_sec4", ["protocol.F=1"])
    warnings = cfg.validate()
    assert len(warnings) == 1 and "not 1-local" in warnings[0]


def test_missing_file():
    with pytest.raises(ConfigError, match="no such config"):
        load_config("does_not_exist.yaml")


def test_graph_file(tmp_path):
    (tmp_path / "g.txt").write_text("n 3\n1 2\n2 3\n3 1\n")
    (tmp_path / "s.yaml").write_text(
        "graph: {kind: file, path: g.txt}\nagents: {init: [0, 1, 2]}\nprotocol: {F: 0, alpha: 1}\n"
    )
    cfg = load_config(str(tmp_path / "s.yaml"))
    assert cfg.digraph.in_neighbors(2) == {1}


def test_dump_round_trip_reproduces_run(tmp_path):
    cfg = load_config("scenario_byzantine", ["simulation.t_max=0.3"])
    p = tmp_path / "resolved.yaml"
    p.write_text(dump_config(cfg))
    again = load_config(str(p))
    assert dump_config(again) == dump_config(cfg)
    assert run(again).csv_text() == run(cfg).csv_text()
