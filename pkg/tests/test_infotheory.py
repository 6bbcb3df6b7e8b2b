import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blackboard import suites
from blackboard.errors import SupportMismatch, UnknownVariable, ZeroProbabilityEvent
from blackboard.infotheory import (
    DiscreteDist,
    entropy,
    kl,
    mutual_info,
    product,
    product_gap,
    random_dist,
    tvd,
)

FAIR = DiscreteDist.uniform("A", (0, 1))


def joint(weights, names="AB"):
    return DiscreteDist(names, weights)


@st.composite
def dists(draw, names="ABC"):
    sizes = [draw(st.integers(1, 3)) for _ in names]
    atoms = list(np.ndindex(*sizes))
    ws = draw(st.lists(st.integers(0, 6), min_size=len(atoms), max_size=len(atoms)))
    if not any(ws):
        ws[0] = 1
    return DiscreteDist(names, {tuple(int(x) for x in a): w for a, w in zip(atoms, ws) if w})


def test_weights_are_reduced_and_exact():
    d = joint({(0, 0): 2, (1, 1): 6})
    assert d.prob((1, 1)) == Fraction(3, 4)
    assert d.prob({"A": 0, "B": 0}) == Fraction(1, 4)
    assert d.prob((0, 1)) == 0
    assert d.total == 4


def test_from_probs_requires_exact_normalization():
    DiscreteDist.from_probs("A", {(0,): Fraction(1, 3), (1,): Fraction(2, 3)})
    with pytest.raises(ValueError):
        DiscreteDist.from_probs("A", {(0,): Fraction(1, 3), (1,): Fraction(1, 3)})


def test_unknown_variable_and_zero_event():
    d = joint({(0, 0): 1, (1, 1): 1})
    with pytest.raises(UnknownVariable):
        d.marginal("Z")
    with pytest.raises(ZeroProbabilityEvent):
        d.condition({"A": 5})


def test_marginal_condition_and_table():
    d = joint({(0, 0): 1, (0, 1): 1, (1, 1): 2})
    assert d.marginal("B") == DiscreteDist("B", {(0,): 1, (1,): 3})
    assert d.condition({"B": 1}).marginal("A").prob((1,)) == Fraction(2, 3)
    table = d.conditional_table("A", "B")
    assert dict(table[(1,)]) == {(0,): Fraction(1, 3), (1,): Fraction(2, 3)}


def test_derive_and_reorder():
    d = joint({(0, 1): 1, (1, 1): 1})
    x = d.derive("X", lambda a, b: a ^ b, ["A", "B"])
    assert x.marginal("X") == DiscreteDist("X", {(1,): 1, (0,): 1})
    assert d.reorder(["B", "A"]) == d


def test_json_round_trip_preserves_rationals():
    d = DiscreteDist("AB", {((0, 1), "x"): 1, ((2,), "y"): 5})
    back = DiscreteDist.from_json(d.to_json())
    assert back == d
    assert back.prob((((2,)), "y")) == Fraction(5, 6)


def test_product_and_known_values():
    two = product(FAIR, DiscreteDist.uniform("B", (0, 1, 2, 3)))
    assert entropy(two, ["A", "B"]) == pytest.approx(3.0)
    assert mutual_info(two, "A", "B") == 0.0
    copy = joint({(0, 0): 1, (1, 1): 1})
    assert mutual_info(copy, "A", "B") == pytest.approx(1.0)
    assert entropy(copy, "A", "B") == pytest.approx(0.0, abs=1e-12)


def test_kl_and_tvd():
    p = DiscreteDist("A", {(0,): 1, (1,): 1})
    q = DiscreteDist("A", {(0,): 1, (1,): 3})
    assert tvd(p, q) == Fraction(1, 4)
    assert kl(p, q) == pytest.approx(0.5 * math.log2(2) + 0.5 * math.log2(2 / 3))
    assert kl(p, p) == 0.0
    with pytest.raises(SupportMismatch):
        kl(p, DiscreteDist("A", {(0,): 1}))


def test_product_gap_detects_dependence():
    assert product_gap(joint({(0, 0): 1, (1, 1): 1}), ["A", "B"]) == Fraction(1, 2)
    assert product_gap(product(FAIR, DiscreteDist.uniform("B", (0, 1))), ["A", "B"]) == 0


@settings(max_examples=120, deadline=None)
@given(dists())
def test_mutual_information_identities(d):
    i = mutual_info(d, "A", "B", "C")
    assert i >= -1e-9
    assert abs(i - (entropy(d, "A", "C") - entropy(d, "A", ["B", "C"]))) <= 1e-9
    assert abs(mutual_info(d, "A", "B") - mutual_info(d, "B", "A")) <= 1e-9
    assert (product_gap(d, ["A", "B"], "C") == 0) == (i == 0.0)


@settings(max_examples=120, deadline=None)
@given(dists(), dists())
def test_tvd_is_a_metric_on_shared_variables(p, q):
    assert 0 <= tvd(p, q) <= 1
    assert tvd(p, q) == tvd(q, p)
    assert tvd(p, p) == 0


def test_random_dist_respects_sizes():
    d = random_dist(np.random.default_rng(0), {"A": 3, "B": 2})
    assert set(d.domain("A")) <= {0, 1, 2} and set(d.domain("B")) <= {0, 1}
    assert sum(q for _, q in d.items()) == 1


@pytest.mark.parametrize("name", sorted(suites.fact_checks()))
def test_each_fact_over_seeded_trials(name):
    check = suites.fact_checks()[name]
    rng = np.random.default_rng([42, len(name)])
    assert all(check(rng) for _ in range(40))


def test_fixtures_break_the_unconditioned_inequalities():
    fx = suites.counterexample_fixtures()
    assert not suites.info_increase_holds(fx["info_increase_without_premise"])
    assert not suites.info_decrease_holds(fx["info_decrease_without_premise"])


def test_tvd_chain_bound_is_tight_for_products():
    mu = product(FAIR, DiscreteDist("B", {(0,): 1, (1,): 3}))
    nu = product(DiscreteDist("A", {(0,): 1, (1,): 2}), DiscreteDist("B", {(0,): 1, (1,): 1}))
    assert tvd(mu, nu) <= suites.tvd_chain_bound(mu, nu, ["A", "B"])
    assert suites.tvd_chain_bound(mu, mu, ["A", "B"]) == 0
