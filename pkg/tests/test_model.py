import numpy as np
import pytest

from blackboard.errors import BandwidthExceeded, NotDisjoint, OutOfRange
from blackboard.model import (
    MIS,
    Coins,
    Graph,
    Matching,
    Protocol,
    Transcript,
    complete_graph,
    output_to_dict,
    random_graph,
    run_protocol,
    vertex_message,
    vertex_view,
)


def test_edges_are_canonical_and_deduplicated():
    g = Graph(4, ((1, 0), (0, 1), (3, 2)))
    assert g.edges == ((0, 1), (2, 3))
    assert g.has_edge(1, 0) and not g.has_edge(0, 2)


def test_graph_rejects_self_loops_and_bad_vertices():
    with pytest.raises(ValueError):
        Graph(3, ((1, 1),))
    with pytest.raises(OutOfRange):
        Graph(3, ((0, 3),))
    with pytest.raises(OutOfRange):
        complete_graph(3).neighbors(5)


def test_neighbors_and_views():
    g = complete_graph(4)
    assert g.neighbors(2) == (0, 1, 3)
    view = vertex_view(g, 2)
    assert view.self_id == 2 and view.n == 4 and view.neighbors == (0, 1, 3)


def test_graph_json_round_trip():
    g = random_graph(9, 0.4, np.random.default_rng(3))
    assert Graph.from_json(g.to_json()) == g


def test_induced_subgraph_keeps_labels():
    g = Graph(4, ((0, 1), (1, 2), (2, 3)))
    assert g.induced([1, 2, 3]).edges == ((1, 2), (2, 3))


def test_matching_disjointness():
    Matching(((0, 1), (3, 2)))
    with pytest.raises(NotDisjoint):
        Matching(((0, 1), (1, 2)))
    with pytest.raises(NotDisjoint):
        Matching(((2, 2),))
    assert Matching(((3, 2),)).pairs == ((2, 3),)


def test_output_restriction_and_dict():
    s = MIS({0, 2, 5})
    assert s.restrict([2, 5, 7]).vertices == {2, 5}
    assert output_to_dict(s)["vertices"] == [0, 2, 5]
    m = Matching(((0, 1), (2, 3)))
    assert m.restrict([0, 1, 2]).pairs == ((0, 1),)


def test_coins_are_reproducible_and_roles_differ():
    a, b = Coins(7, 0), Coins(7, 0)
    assert a.private(1, "x").integers(0, 1 << 30) == b.private(1, "x").integers(0, 1 << 30)
    assert Coins(7, 0).private(1).random() != Coins(7, 1).private(1).random()
    assert Coins(7, 0).public(1).random() == Coins(7, 3).public(1).random() == Coins(7).public(1).random()
    assert Coins(7).public_bits(0, 32, "k") != Coins(8).public_bits(0, 32, "k")
    assert sorted(Coins(1).public_permutation(2, 10)) == list(range(10))
    with pytest.raises(ValueError):
        Coins(1).private(1)


def _echo(bits: str, rounds: int = 1) -> Protocol:
    return Protocol("echo", rounds, 1, lambda view, t, board, coins: bits, lambda board, coins: MIS(()))


def test_bandwidth_is_enforced():
    g = complete_graph(3)
    with pytest.raises(BandwidthExceeded):
        run_protocol(g, _echo("01"))
    tr, _, bits = run_protocol(g, _echo("01"), strict=False)
    assert bits == 2 and tr.violations == ((1, 0, 2), (1, 1, 2), (1, 2, 2))


def test_messages_must_be_bit_strings():
    with pytest.raises(ValueError):
        run_protocol(complete_graph(2), _echo("2"))


def test_players_see_only_the_board_prefix():
    seen = []

    def msg(view, t, board, coins):
        seen.append((t, len(board)))
        return str(t % 2)

    proto = Protocol("p", 3, 1, msg, lambda board, coins: MIS(()))
    tr, _, _ = run_protocol(complete_graph(2), proto)
    assert seen == [(1, 0), (1, 0), (2, 1), (2, 1), (3, 2), (3, 2)]
    assert tr.n_rounds == 3 and tr.round(2) == ("0", "0") and len(tr.prefix(2)) == 1


def test_transcript_round_trip_and_reproducibility():
    g = random_graph(8, 0.5, np.random.default_rng(1))
    proto = Protocol(
        "coin", 2, 1,
        lambda view, t, board, coins: str(int(coins.private(t).integers(2))),
        lambda board, coins: MIS(()),
    )
    t1, _, _ = run_protocol(g, proto, seed=11)
    t2, _, _ = run_protocol(g, proto, seed=11)
    assert t1.rounds == t2.rounds
    assert Transcript.from_dict(t1.to_dict()).rounds == t1.rounds
    assert vertex_message(proto, vertex_view(g, 3), 1, (), 11) == t1.round(1)[3]
