import itertools
import math
from fractions import Fraction

import pytest

from blackboard import embedding as emb
from blackboard import suites
from blackboard.distributions import level_law, make_params
from blackboard.errors import ConfigError, NondeterministicProtocol, TooLarge
from blackboard.model import MIS, Protocol

TOY = make_params(1, 1, toy=(1, 2), variant="mis")
APX = make_params(2, 1, toy=(1, 1), variant="apx")


@pytest.fixture(scope="module")
def laws():
    return {name: emb.enumerate_joint(TOY, name) for name in ("silent", "full-broadcast", "xor:directed_round1", "xor:fooling_xor")}


def test_joint_law_shape(laws):
    jl = laws["silent"]
    assert jl.blocks == 4 and jl.block_size == 2 and jl.n == 10
    assert len(jl.sigmas) == 4
    assert sum(q for _, q in jl.dist.items()) == 1
    assert len(jl.dist) == 4 * 4096


def test_sigma_is_uniform_and_blocks_follow_the_level_law(laws):
    jl = laws["full-broadcast"]
    assert set(q for _, q in jl.dist.marginal("Sigma").items()) == {Fraction(1, 4)}
    target = level_law(TOY, 0)
    for i in range(jl.blocks):
        assert emb.block_marginal(jl, i) == target
    assert emb.blocks_product_gap(jl) == 0


@pytest.mark.parametrize("name", ["silent", "full-broadcast", "xor:directed_round1", "xor:fooling_xor"])
def test_product_property_and_budgets(laws, name):
    jl = laws[name]
    assert all(emb.check_product_property(jl, i) == 0 for i in range(jl.blocks))
    lv = TOY.level(1)
    k = next(iter(jl.protocols.values())).bandwidth
    for i in range(jl.blocks):
        assert emb.mi_first_round(jl, i) <= jl.block_size * k / lv.f_hat + 1e-9
    lhs, rhs = emb.check_sum_info(jl, 1)
    assert lhs <= rhs + 1e-9
    terms = [emb.mi_round_t(jl, i, 1) for i in range(jl.blocks)]
    assert sum(t for t, _ in terms) / jl.blocks <= 1e-9
    assert sum(f for _, f in terms) / jl.blocks <= k * (jl.block_size - 1) * lv.f / lv.p + 1e-9


def test_known_information_values(laws):
    full = laws["full-broadcast"]
    assert [emb.mi_first_round(full, i) for i in range(4)] == pytest.approx([1.0] * 4)
    directed = laws["xor:directed_round1"]
    assert sorted(emb.mi_first_round(directed, i) for i in range(4)) == pytest.approx([0.25, 0.5, 0.5, 0.75])
    assert all(emb.mi_first_round(laws["silent"], i) == 0.0 for i in range(4))


def test_silent_simulation_is_exact(laws):
    jl = laws["silent"]
    for i in range(jl.blocks):
        assert emb.expected_tvd_mu_nu(jl, i) == 0
    assert emb.nu_success(jl, 0) == Fraction(1, 2)


def test_tv_within_pinsker_budget(laws):
    for jl in laws.values():
        tv = sum(emb.expected_tvd_mu_nu(jl, i) for i in range(jl.blocks)) / jl.blocks
        assert float(tv) <= emb.pinsker_budget(jl)["budget"] + 1e-9
    assert sum(emb.expected_tvd_mu_nu(laws["full-broadcast"], i) for i in range(4)) / 4 == Fraction(1, 2)


def test_nu_law_is_a_distribution(laws):
    nu = emb.build_nu(laws["xor:directed_round1"], 1)
    assert sum(nu.probs.values()) + nu.fail == 1


def test_round_elimination_audit(laws):
    for jl in laws.values():
        rep = emb.round_elim_audit(jl)
        assert rep.holds and rep.lhs >= rep.rhs
        assert set(rep.to_dict()) >= {"lhs", "rhs", "delta"}
    assert emb.round_elim_audit(laws["full-broadcast"]).delta == 1


def test_rectangle_gap_sensitivity(laws):
    assert emb.rectangle_gap(laws["silent"], 0) == 0
    assert emb.rectangle_gap(laws["xor:fooling_xor"], 0) > 0


def test_broken_fixture_is_detected():
    jl = emb.enumerate_joint(TOY, "silent", instance_law=suites.broken_fixture_law(TOY))
    assert emb.check_product_property(jl, 0) > 0


def test_shard_order_and_workers_do_not_change_the_law():
    a = emb.enumerate_joint(TOY, "xor:symmetric_xor", workers=1)
    b = emb.enumerate_joint(TOY, "xor:symmetric_xor", workers=2, shard_order=[1, 0])
    assert a.dist == b.dist and a.success_weight == b.success_weight


def test_guards():
    with pytest.raises(TooLarge):
        emb.enumerate_joint(TOY, "silent", "full", sigma_limit=20_000)
    with pytest.raises(ConfigError):
        emb.enumerate_joint(make_params(1, 0), "silent")
    counter = itertools.count()
    flaky = Protocol("flaky", 1, 1, lambda view, t, board, coins: str(int(next(counter) % 3 == 0)), lambda b, c: MIS(()))
    with pytest.raises(NondeterministicProtocol):
        emb.enumerate_joint(TOY, flaky)


def test_tau_monte_carlo_tracks_nu():
    jl = emb.enumerate_joint(TOY, "luby:2")
    exact = float(emb.nu_success(jl, 0))
    runs = [emb.simulate_tau(jl, 0, s) for s in range(3000)]
    rate = sum(r.success for r in runs) / len(runs)
    assert abs(rate - exact) <= 3 * math.sqrt(exact * (1 - exact) / len(runs))
    assert {r.rounds_communicated for r in runs if not r.failed} == {1}
    assert max(r.rounds_communicated for r in runs) == 1


def test_matching_variant_audit():
    jl = emb.enumerate_joint(APX, "greedy-matching")
    rep = emb.round_elim_audit(jl)
    assert rep.holds
    tv = sum(emb.expected_tvd_mu_nu(jl, i) for i in range(jl.blocks)) / jl.blocks
    assert float(tv) <= emb.pinsker_budget(jl)["budget"] + 1e-9


def test_quantity_exports():
    rows = [emb.quantity("a", Fraction(1, 3), 1), emb.quantity("b", 2.0, 1)]
    assert [q.passed for q in rows] == [True, False]
    text = emb.quantities_to_csv(rows)
    assert text.splitlines()[0] == "schema=1" and "1/3" in text
