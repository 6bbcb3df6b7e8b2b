import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blackboard.errors import OutOfRange
from blackboard.model import Graph, Matching, complete_graph, random_graph
from blackboard.oracles import (
    bipartite_matching_size,
    decode_dropped_edges,
    enumerate_all_mis,
    is_independent,
    is_mis,
    matching_score,
    max_matching_size,
    max_matching_size_blossom,
)


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True) if pairs else st.just([]))
    return Graph(n, tuple(chosen))


def brute_mis(g: Graph):
    out = []
    for r in range(g.n + 1):
        for s in itertools.combinations(range(g.n), r):
            if is_mis(g, s):
                out.append(frozenset(s))
    return sorted(out, key=lambda s: (len(s), sorted(s)))


def test_mis_predicates():
    path = Graph(3, ((0, 1), (1, 2)))
    assert is_mis(path, {0, 2}) and is_mis(path, {1})
    assert not is_mis(path, {0}) and not is_independent(path, {0, 1})
    assert is_mis(Graph(1, ()), {0})
    with pytest.raises(OutOfRange):
        is_mis(path, {3})


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_mis_enumeration_matches_brute_force(g):
    assert enumerate_all_mis(g) == brute_mis(g)


def test_mis_counts_of_known_families():
    assert len(enumerate_all_mis(complete_graph(5))) == 5
    assert len(enumerate_all_mis(Graph(6, ()))) == 1
    # the 5-cycle has exactly 5 maximal independent sets
    assert len(enumerate_all_mis(Graph(5, tuple((i, (i + 1) % 5) for i in range(5))))) == 5


@settings(max_examples=150, deadline=None)
@given(graphs(max_n=10))
def test_matching_size_agrees_with_blossom(g):
    assert max_matching_size(g) == max_matching_size_blossom(g)


def test_matching_beyond_exhaustive_limit():
    g = random_graph(40, 0.1, np.random.default_rng(4))
    ref = len(nx.max_weight_matching(nx.Graph(list(g.edges)), maxcardinality=True))
    assert max_matching_size(g) == ref


def test_bipartite_matching_size():
    rng = np.random.default_rng(0)
    for _ in range(50):
        g = random_graph(10, 0.4, rng)
        left = [v for v in range(10) if rng.random() < 0.5]
        lset = set(left)
        cross = Graph(10, tuple(e for e in g.edges if (e[0] in lset) != (e[1] in lset)))
        assert bipartite_matching_size(cross, left) == max_matching_size(cross)


def test_matching_score_counts_only_real_edges():
    g = Graph(4, ((0, 1), (2, 3)))
    score = matching_score(g, Matching(((0, 1), (2, 3))))
    assert score.valid_edges == 2
    assert matching_score(g, [(0, 2), (1, 3)]).valid_edges == 0


def test_decode_dropped_edges():
    assert decode_dropped_edges(2, {0, 1, 2}) == {(0, 1)}
    assert decode_dropped_edges(3, range(6)) == {(0, 1), (2, 3), (4, 5)}
    assert decode_dropped_edges(2, {1, 2}) == frozenset()
