import math
from fractions import Fraction

import numpy as np
import pytest

from blackboard.distributions import make_params, sample
from blackboard.errors import ConfigError, LayoutRequired
from blackboard.model import Graph, Matching, complete_graph, random_graph, run_protocol
from blackboard.oracles import is_mis, matching_score, max_matching_size
from blackboard.protocols import (
    ProtocolSpec,
    best_zero_round_referee_apx,
    best_zero_round_referee_mis,
    bipartite_wrapper,
    build_protocol,
    cut_bits,
    cut_subgraph,
    full_broadcast,
    greedy_matching,
    luby_blackboard,
    luby_quiescence,
    silent,
    xor_protocol,
)

TOY = make_params(1, 1, toy=(1, 2))


@pytest.mark.parametrize("g", [Graph(1, ()), Graph(5, ()), complete_graph(6), Graph(4, ((0, 1), (2, 3)))])
def test_luby_on_small_fixtures(g):
    tr, out, bits = run_protocol(g, luby_blackboard(10), seed=3)
    assert is_mis(g, out.vertices) and bits <= 2
    assert luby_quiescence(tr.rounds) is not None


def test_luby_flags_exhausted_phase_budget():
    g = random_graph(30, 0.3, np.random.default_rng(0))
    _, out, _ = run_protocol(g, luby_blackboard(1), seed=0)
    assert "phase_budget_exceeded" in out.flags


@pytest.mark.parametrize("n", [8, 16, 32])
def test_luby_valid_on_random_graphs(n):
    budget = math.ceil(8 * math.log2(n))
    for s in range(25):
        g = random_graph(n, 0.5, np.random.default_rng([n, s]))
        tr, out, bits = run_protocol(g, luby_blackboard(budget), seed=s)
        assert is_mis(g, out.vertices) and bits <= 2
        assert luby_quiescence(tr.rounds) <= budget


def test_full_broadcast_solves_both_problems():
    g = random_graph(10, 0.4, np.random.default_rng(1))
    _, out, bits = run_protocol(g, full_broadcast(10, 1, "mis"))
    assert is_mis(g, out.vertices) and bits == 10
    _, m, _ = run_protocol(g, full_broadcast(10, 1, "apx"))
    assert matching_score(g, m).valid_edges == max_matching_size(g)


def test_greedy_matching_output_is_a_matching_within_bandwidth():
    g = random_graph(12, 0.3, np.random.default_rng(2))
    proto = greedy_matching(12)
    _, m, bits = run_protocol(g, proto, seed=1)
    assert isinstance(m, Matching) and bits <= proto.bandwidth == 4
    assert matching_score(g, m).valid_edges >= 1


def test_silent_protocol_posts_nothing():
    tr, _, bits = run_protocol(complete_graph(3), silent(2, 3, "mis"))
    assert tr.n_rounds == 2 and bits == 0


def test_xor_needs_a_layout():
    with pytest.raises(LayoutRequired):
        xor_protocol("symmetric_xor", None, 10, 0, 1, "mis")
    with pytest.raises(LayoutRequired):
        ProtocolSpec.parse("xor:fooling_xor").build(10)


@pytest.mark.parametrize("variant", ["directed_round1", "fooling_xor", "symmetric_xor"])
def test_xor_variants_run_within_one_bit(variant):
    inst = sample(TOY, seed=4)
    proto = ProtocolSpec.parse(f"xor:{variant},rounds=2").build(inst.graph.n, inst.layout)
    tr, out, bits = run_protocol(inst.graph, proto, seed=1)
    assert tr.n_rounds == 2 and bits <= 1
    assert out.vertices <= set(range(inst.graph.n))


def test_fooling_xor_keeps_principal_vertices_constant():
    inst = sample(TOY, seed=4)
    proto = ProtocolSpec.parse("xor:fooling_xor").build(inst.graph.n, inst.layout)
    tr, _, _ = run_protocol(inst.graph, proto, seed=1)
    assert all(tr.round(1)[v] == "0" for v in inst.layout.principal_vertices)


def test_spec_parsing():
    spec = ProtocolSpec.parse("xor:symmetric_xor,rounds=2")
    assert spec.name == "xor" and spec.args == ("symmetric_xor",) and dict(spec.options) == {"rounds": "2"}
    assert str(spec) == "xor:symmetric_xor,rounds=2"
    assert ProtocolSpec.parse("luby:3").build(8).rounds == 3
    assert ProtocolSpec.parse("bipartite:greedy-matching").build(6, kind="apx").bandwidth == 3
    for bad in ("nope", "bipartite", "luby:x"):
        with pytest.raises(ConfigError):
            ProtocolSpec.parse(bad).build(4)
    assert build_protocol("silent", 4).rounds == 1


def test_zero_round_optima():
    for k in (1, 2, 3, 4):
        out, p = best_zero_round_referee_mis(k)
        assert p == Fraction(1, 2**k) and out.vertices == frozenset(range(2 * k))
    for k in (1, 2, 3):
        _, e = best_zero_round_referee_apx(k)
        assert e == Fraction(1, k)


def test_zero_protocol_hits_the_base_case_rate():
    params = make_params(2, 0)
    proto = ProtocolSpec.parse("zero").build(4)
    hits = 0
    for s in range(4000):
        g = sample(params, s).graph
        hits += is_mis(g, run_protocol(g, proto, s).output.vertices)
    assert abs(hits / 4000 - 0.25) < 0.03


def test_bipartite_wrapper_matches_inner_run_on_the_cut():
    g = random_graph(10, 0.5, np.random.default_rng(5))
    inner = greedy_matching(10)
    wrapped = bipartite_wrapper(inner)
    for seed in range(10):
        tw, ow, bw = run_protocol(g, wrapped, seed)
        ti, oi, bi = run_protocol(cut_subgraph(g, cut_bits(seed, 10)), inner, seed)
        assert tw.rounds == ti.rounds and ow == oi and bw == bi
    assert wrapped.rounds == inner.rounds and wrapped.bandwidth == inner.bandwidth


def test_cut_subgraph_is_bipartite():
    g = complete_graph(6)
    z = cut_bits(1, 6)
    assert all(z[u] != z[v] for u, v in cut_subgraph(g, z).edges)
