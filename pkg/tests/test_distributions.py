from fractions import Fraction

import pytest

from blackboard import suites
from blackboard.distributions import (
    BlockLayout,
    Instance,
    Params,
    count_sigma_atoms,
    enumerate_law,
    level_law,
    make_params,
    matching_size_bound,
    pre_layout,
    sample,
    sample_apx_hard0,
    sample_mis_hard,
    sample_mis_hard0,
    sample_mis_half,
    star_law,
    verify_solve_half,
)
from blackboard.errors import ConfigError, Overflow
from blackboard.oracles import enumerate_all_mis, max_matching_size

TOY = make_params(1, 1, toy=(1, 2), variant="mis")


def test_toy_counts():
    lv = TOY.level(1)
    assert (lv.f_hat, lv.p_hat, lv.n_hat) == (1, 2, 5)
    assert (lv.f, lv.p, lv.n) == (2, 4, 10)
    apx = make_params(1, 1, toy=(1, 2), variant="apx")
    assert apx.n() == 5 and apx.level(1).p == 2


def test_full_scale_counts_for_k2():
    p = make_params(2, 1)
    lv = p.level(1)
    assert lv.f_hat == 4096 and lv.p_hat == 16_777_216
    assert lv.n == 2 * (3 * 4096 + 4 * 16_777_216) == 134_242_304


def test_int64_overflow_and_materialization_cap():
    with pytest.raises(Overflow):
        make_params(2, 2)
    with pytest.raises(Overflow, match="16777216"):
        sample(make_params(2, 1), seed=0)


def test_bad_configs():
    with pytest.raises(ConfigError):
        make_params(0, 1)
    with pytest.raises(ConfigError):
        make_params(1, 1, variant="nope")


def test_params_round_trip():
    p = make_params(1, 2, toy=((1, 1), (2, 1)))
    assert Params.from_dict(p.to_dict()) == p


def test_level_zero_laws():
    law = level_law(make_params(2, 0), 0)
    assert len(law) == 4 and set(law.values()) == {Fraction(1, 4)}
    assert all(set(e) <= {(0, 1), (2, 3)} for e in law)
    apx = level_law(make_params(3, 0, variant="apx"), 0)
    assert len(apx) == 9
    assert all(len(e) == 1 and e[0][0] < 3 <= e[0][1] for e in apx)


def test_base_samplers():
    inst = sample_mis_hard0(2, seed=1)
    assert inst.graph.n == 4 and set(inst.graph.edges) <= {(0, 1), (2, 3)}
    assert len(sample_apx_hard0(3, seed=1).graph.edges) == 1


def test_star_law_places_the_vertex_uniformly():
    law = star_law(TOY, 1)
    assert law == {(): Fraction(1, 2), (0,): Fraction(1, 2)}


def test_enumerate_law_sums_to_one():
    law = enumerate_law(lambda ch: (ch.uniform(3), ch.bit()))
    assert sum(law.values()) == 1 and len(law) == 6


def test_sigma_atom_counts():
    pre = pre_layout(TOY, 1)
    assert count_sigma_atoms(pre, "identity") == 1
    assert count_sigma_atoms(pre, "full") == 3_628_800
    assert count_sigma_atoms(pre, "blocks") == 3_628_800 // 16


def test_sampling_is_reproducible_and_serializable():
    a = sample_mis_hard(TOY, seed=5)
    assert a == sample_mis_hard(TOY, seed=5)
    assert a.graph != sample_mis_hard(TOY, seed=6).graph or a.layout != sample_mis_hard(TOY, seed=6).layout
    back = Instance.from_dict(a.to_dict())
    assert back.graph == a.graph and back.layout == a.layout and back.params == a.params
    assert BlockLayout.from_dict(a.layout.to_dict()) == a.layout


def test_identity_sigma_mode():
    inst = sample_mis_half(TOY, seed=2)
    assert inst.layout.sigma == tuple(range(inst.graph.n))


@pytest.mark.parametrize("seed", range(20))
def test_structure_of_mis_instances(seed):
    inst = sample_mis_hard(TOY, seed=seed)
    assert suites._mis_structure_ok(inst)
    assert all(verify_solve_half(inst, s) != "neither" for s in enumerate_all_mis(inst.graph))


def test_layout_roles_cover_all_vertices():
    inst = sample(TOY, seed=3)
    roles = inst.layout.role
    assert sorted(roles) == list(range(10))
    assert sum(1 for r in roles.values() if r[0] == "P") == 8


def test_apx_bound_and_samples():
    apx = make_params(1, 1, toy=(1, 2), variant="apx")
    assert matching_size_bound(apx) == Fraction(5, 4)
    for seed in range(30):
        inst = sample(apx, seed)
        assert max_matching_size(inst.graph) >= matching_size_bound(apx)
        assert suites._apx_structure_ok(inst)


def test_multi_level_toy_instance():
    p = make_params(1, 2, toy=((1, 1), (1, 1)))
    inst = sample(p, seed=0)
    assert inst.graph.n == p.n(2)
    assert all(len(b) == p.n(1) for b in inst.layout.principal)
