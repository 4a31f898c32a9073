import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ftrc.graph import (
    Digraph,
    GraphError,
    GraphTooLarge,
    brute_force_robust,
    complete_digraph,
    directed_cycle,
    is_F_local,
    is_r_reachable,
    is_r_robust,
    make_k_circulant,
    max_robustness,
)
from oracles import robust_oracle


@st.composite
def digraphs(draw, min_n=2, max_n=6):
    n = draw(st.integers(min_n, max_n))
    pairs = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1) if i != j]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs)))
    return Digraph.from_edges(n, chosen)


def test_circulant_15_11_in_degree():
    g = make_k_circulant(15, 11)
    assert all(g.in_degree(i) == 11 for i in g.vertices)
    assert g.in_neighbors(1) == frozenset(range(2, 13))
    assert g.in_neighbors(15) == frozenset(range(1, 12))


def test_small_circulants():
    assert make_k_circulant(3, 1) == directed_cycle(3)
    assert make_k_circulant(3, 1).in_neighbors(3) == {1}
    assert make_k_circulant(4, 3) == complete_digraph(4)


@pytest.mark.parametrize("n,k", [(1, 1), (5, 0), (5, 5)])
def test_circulant_bad_parameters(n, k):
    with pytest.raises(GraphError):
        make_k_circulant(n, k)


def test_digraph_rejects_self_loops_and_range():
    with pytest.raises(GraphError):
        Digraph.from_edges(3, [(1, 1)])
    with pytest.raises(GraphError):
        Digraph.from_edges(3, [(1, 4)])


def test_reachability_examples():
    assert is_r_reachable(complete_digraph(5), {1, 2}, 3)
    assert not is_r_reachable(complete_digraph(5), {1, 2}, 4)
    g = make_k_circulant(15, 11)
    assert not is_r_reachable(g, g.vertices, 1)
    assert is_r_reachable(g, {1}, 11)
    assert not is_r_reachable(g, {1}, 12)
    with pytest.raises(GraphError):
        is_r_reachable(g, set(), 1)


def test_F_local_examples():
    assert is_F_local(make_k_circulant(7, 3), [], 0)
    assert is_F_local(make_k_circulant(15, 11), {2, 13}, 2)
    assert not is_F_local(make_k_circulant(15, 11), {2, 13}, 1)
    assert not is_F_local(complete_digraph(5), {1, 2}, 1)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_cycle_robustness(n):
    g = directed_cycle(n)
    assert is_r_robust(g, 1).robust
    cert = is_r_robust(g, 2)
    assert not cert.robust
    s1, s2 = cert.witness
    assert s1 and s2 and not s1 & s2
    assert not is_r_reachable(g, s1, 2) and not is_r_reachable(g, s2, 2)


def test_max_robustness_examples():
    assert max_robustness(complete_digraph(5)) == 3
    assert max_robustness(directed_cycle(5)) == 1
    assert max_robustness(Digraph.from_edges(2, [])) == 0


def test_circulant_15_11_is_6_robust():
    cert = is_r_robust(make_k_circulant(15, 11), 6)
    assert cert.robust and cert.witness is None
    assert "verdict: robust" in cert.report()


def test_circulant_15_11_max_robustness_frozen():
    # exhaustive enumeration gives exactly 6, so 7 must come with a witness
    g = make_k_circulant(15, 11)
    assert max_robustness(g) == 6
    cert = is_r_robust(g, 7)
    s1, s2 = cert.witness
    assert not is_r_reachable(g, s1, 7) and not is_r_reachable(g, s2, 7)


def test_size_cap():
    with pytest.raises(GraphTooLarge):
        is_r_robust(complete_digraph(21), 1)
    with pytest.raises(GraphTooLarge):
        is_r_robust(complete_digraph(8), 1, max_n=7)


def test_certificate_invariant():
    from ftrc.graph import RobustnessCertificate

    with pytest.raises(ValueError):
        RobustnessCertificate(1, True, (frozenset({1}), frozenset({2})))
    with pytest.raises(ValueError):
        RobustnessCertificate(1, False, None)


def test_file_round_trip(tmp_path):
    g = make_k_circulant(7, 3)
    p = tmp_path / "g.txt"
    g.save(p)
    assert p.read_text().splitlines()[0] == "n 7"
    assert Digraph.load(p) == g


def test_file_format_errors():
    with pytest.raises(GraphError):
        Digraph.from_text("3\n1 2\n")
    with pytest.raises(GraphError):
        Digraph.from_text("n 3\n1 2 3\n")


def test_workers_give_same_witness():
    g = directed_cycle(14)
    one = is_r_robust(g, 2, workers=1)
    four = is_r_robust(g, 2, workers=4)
    assert one.witness == four.witness


@given(digraphs())
def test_transpose_consistency(g):
    for i in g.vertices:
        for j in g.vertices:
            assert (j in g.in_neighbors(i)) == (i in g.out_neighbors(j))


@given(digraphs(), st.integers(0, 4))
def test_robustness_matches_subset_dp(g, r):
    assert is_r_robust(g, r).robust == robust_oracle(g, r)


@given(digraphs(max_n=5), st.integers(1, 3))
def test_first_witness_matches_brute_force(g, r):
    assert is_r_robust(g, r).witness == brute_force_robust(g, r)


@given(digraphs(), st.integers(1, 4))
def test_witness_validity(g, r):
    cert = is_r_robust(g, r)
    if not cert.robust:
        s1, s2 = cert.witness
        assert s1 and s2 and not s1 & s2
        assert not is_r_reachable(g, s1, r) and not is_r_reachable(g, s2, r)


@given(digraphs())
def test_robustness_monotone_in_r(g):
    verdicts = [is_r_robust(g, r).robust for r in range(0, 5)]
    assert verdicts == sorted(verdicts, reverse=True)


@settings(max_examples=50)
@given(digraphs(), st.data())
def test_adding_an_edge_never_lowers_robustness(g, data):
    missing = [(i, j) for i, j in itertools.permutations(g.vertices, 2) if i not in g.in_neighbors(j)]
    if not missing:
        return
    i, j = data.draw(st.sampled_from(missing))
    assert max_robustness(g.with_edge(i, j)) >= max_robustness(g)


@given(digraphs())
def test_text_round_trip(g):
    assert Digraph.from_text(g.to_text()) == g
