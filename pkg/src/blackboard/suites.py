"""Verification suites.  Each returns a :class:`SuiteReport` listing every checked
quantity with its budget and verdict; the CLI and the acceptance tests share them."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional, Sequence

import numpy as np

from . import embedding as emb
from .distributions import (
    Params,
    level_law,
    make_params,
    matching_size_bound,
    sample_apx_hard,
    sample_mis_hard,
    verify_solve_half,
)
from .embedding import Quantity, quantities_to_csv, quantity
from .infotheory import DiscreteDist, entropy, kl, mutual_info, product_gap, random_dist, tvd
from .model import random_graph, run_protocol
from .oracles import bipartite_matching_size, enumerate_all_mis, is_mis, max_matching_size
from .protocols import (
    ProtocolSpec,
    best_zero_round_referee_apx,
    best_zero_round_referee_mis,
    bipartite_wrapper,
    cut_bits,
    cut_subgraph,
    luby_blackboard,
    luby_quiescence,
)

TOL = 1e-9
SUITES = ("base-cases", "structure", "infotheory", "embedding", "protocols", "all")
MIS_STRESS = (
    "silent",
    "zero",
    "full-broadcast",
    "xor:directed_round1",
    "xor:fooling_xor",
    "xor:symmetric_xor",
    "luby:1",
)
MIS_STRESS_MULTIROUND = ("silent:2", "luby:2", "xor:symmetric_xor,rounds=2")
APX_STRESS = (
    "silent",
    "zero",
    "full-broadcast",
    "greedy-matching",
    "xor:directed_round1",
    "xor:fooling_xor",
    "xor:symmetric_xor",
)


@dataclass
class SuiteReport:
    suite: str
    quantities: list[Quantity] = field(default_factory=list)
    config: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(q.passed for q in self.quantities)

    def add(self, q: Quantity) -> Quantity:
        self.quantities.append(q)
        return q

    def check(self, name: str, ok: bool, value: Any = None, budget: Any = None, note: str = "") -> Quantity:
        v = float(ok) if value is None else value
        return self.add(quantity(name, v, budget, passed=bool(ok), note=note))

    def extend(self, other: "SuiteReport") -> None:
        self.quantities.extend(other.quantities)

    def failures(self) -> list[Quantity]:
        return [q for q in self.quantities if not q.passed]

    def to_dict(self) -> dict[str, Any]:
        return {
            "suite": self.suite,
            "passed": self.passed,
            "config": self.config,
            "quantities": [q.to_dict() for q in self.quantities],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        return quantities_to_csv(self.quantities)


# --- base cases --------------------------------------------------------------


def base_cases(mis_ks: Sequence[int] = (1, 2, 3, 4), apx_ks: Sequence[int] = (1, 2, 3, 4)) -> SuiteReport:
    rep = SuiteReport("base-cases", config={"mis_k": list(mis_ks), "apx_k": list(apx_ks)})
    for k in mis_ks:
        _, p = best_zero_round_referee_mis(k)
        target = Fraction(1, 2**k)
        rep.check(f"mis_base.k{k}.best_success", p == target, p, target, "exact equality with 2^-k")
    for k in apx_ks:
        out, e = best_zero_round_referee_apx(k)
        ratio = Fraction(1) / e  # the maximum matching of every level-0 sample has size 1
        rep.check(f"apx_base.k{k}.best_expected_valid", e <= Fraction(1, k), e, Fraction(1, k),
                  "an optimum above 1/k would be a flagged discrepancy")
        rep.check(f"apx_base.k{k}.ratio", ratio >= k, ratio, None, f"ratio must be at least {k}")
    return rep


# --- structure ---------------------------------------------------------------


def structure(trials: int = 200, seed: int = 0, k: int = 1, f_hat: int = 1, p_hat: int = 2) -> SuiteReport:
    rep = SuiteReport("structure", config={"trials": trials, "seed": seed, "k": k, "f_hat": f_hat, "p_hat": p_hat})
    params = make_params(k, 1, toy=(f_hat, p_hat), variant="mis")
    neither = layout_bad = mis_total = 0
    for s in range(trials):
        inst = sample_mis_hard(params, seed * 1_000_003 + s, "full")
        layout_bad += not _mis_structure_ok(inst)
        for mis in enumerate_all_mis(inst.graph):
            mis_total += 1
            if verify_solve_half(inst, mis) == "neither":
                neither += 1
    rep.check("mis_hard.half_solving.neither_count", neither == 0, neither, 0, f"over {mis_total} MIS of {trials} instances")
    rep.check("mis_hard.layout_invariants.violations", layout_bad == 0, layout_bad, 0)

    for kk in sorted({k, 2}):
        apx = make_params(kk, 1, toy=(f_hat, p_hat), variant="apx")
        bound = matching_size_bound(apx)
        worst = None
        bad = 0
        for s in range(trials):
            inst = sample_apx_hard(apx, seed * 1_000_003 + s, "full")
            mu = max_matching_size(inst.graph)
            worst = mu if worst is None else min(worst, mu)
            bad += mu < bound or not _apx_structure_ok(inst)
        rep.check(f"apx_hard.k{kk}.matching_bound.violations", bad == 0, bad, 0,
                  f"min mu(G) = {worst}, bound = {bound}")
    return rep


def _mis_structure_ok(inst) -> bool:
    lay, g = inst.layout, inst.graph
    m = inst.params.n(0)
    block_of = {v: i for i, blk in enumerate(lay.principal) for v in blk}
    for u, v in g.edges:
        if u in block_of and v in block_of and block_of[u] != block_of[v]:
            return False
    left = [v for j, blk in enumerate(lay.fooling) if lay.fooling_side[j] == 0 for v in blk]
    right = [v for j, blk in enumerate(lay.fooling) if lay.fooling_side[j] == 1 for v in blk]
    if not all(g.has_edge(u, v) for u in left for v in right):
        return False
    fool = set(left) | set(right)
    for u, v in g.edges:
        if u in fool and v in fool and (u in left) == (v in left):
            return False
    return all(len(b) == m for b in lay.principal) and all(len(b) == m - 1 for b in lay.fooling)


def _apx_structure_ok(inst) -> bool:
    lay, g = inst.layout, inst.graph
    fool = set(lay.fooling_vertices)
    block_of = {v: i for i, blk in enumerate(lay.principal) for v in blk}
    for u, v in g.edges:
        if u in fool and v in fool:
            return False
        if u in block_of and v in block_of and block_of[u] != block_of[v]:
            return False
    return True


# --- information theory ------------------------------------------------------


def _random_sizes(rng: np.random.Generator, names: str) -> dict[str, int]:
    return {c: int(rng.integers(2, 4)) for c in names}


def _compose(rng: np.random.Generator, sizes: dict[str, int], factors: Sequence[tuple[str, str]]) -> DiscreteDist:
    """Joint law built as a product of random conditionals ``P(target | parents)``."""
    names = list(sizes)
    tables = []
    for target, parents in factors:
        pshape = [sizes[p] for p in parents]
        tab = {}
        for pv in np.ndindex(*pshape) if pshape else [()]:
            w = rng.integers(1, 9, size=sizes[target])
            if rng.random() < 0.3:
                w[rng.integers(sizes[target])] = 0
                if w.sum() == 0:
                    w[0] = 1
            tab[tuple(int(x) for x in pv)] = [int(x) for x in w]
        tables.append((target, parents, tab))
    weights = {}
    for atom in np.ndindex(*[sizes[n] for n in names]):
        val = dict(zip(names, (int(x) for x in atom)))
        w = 1
        for target, parents, tab in tables:
            row = tab[tuple(val[p] for p in parents)]
            # normalize each conditional by multiplying by the other rows' totals
            w *= row[val[target]] * math.prod(sum(r) for key, r in tab.items() if key != tuple(val[p] for p in parents))
        if w:
            weights[tuple(int(x) for x in atom)] = w
    return DiscreteDist(names, weights)


def fact_checks() -> dict[str, Callable[[np.random.Generator], bool]]:
    """One randomized check per fact; each draws its own distributions and returns a verdict."""

    def entropy_bounds(rng):
        d = random_dist(rng, _random_sizes(rng, "A"))
        supp = len(d.marginal("A"))
        h = entropy(d, "A")
        n = int(rng.integers(1, 9))
        u = DiscreteDist.uniform("A", range(n))
        return -TOL <= h <= math.log2(supp) + TOL and abs(entropy(u, "A") - math.log2(n)) <= TOL

    def mi_nonneg_and_zero(rng):
        d = random_dist(rng, _random_sizes(rng, "ABC"))
        ci = _compose(rng, _random_sizes(rng, "ABC"), [("C", ""), ("A", "C"), ("B", "C")])
        i_rand = mutual_info(d, "A", "B", "C")
        zero_iff = (i_rand == 0.0) == (product_gap(d, ["A", "B"], "C") == 0)
        return i_rand >= -TOL and mutual_info(ci, "A", "B", "C") == 0.0 and product_gap(ci, ["A", "B"], "C") == 0 and zero_iff

    def conditioning_reduces(rng):
        d = random_dist(rng, _random_sizes(rng, "ABC"))
        return entropy(d, "A", "B") <= entropy(d, "A") + TOL and entropy(d, "A", ["B", "C"]) <= entropy(d, "A", "B") + TOL

    def subadditivity(rng):
        d = random_dist(rng, _random_sizes(rng, "ABC"))
        return entropy(d, ["A", "B", "C"]) <= entropy(d, "A") + entropy(d, "B") + entropy(d, "C") + TOL

    def entropy_chain(rng):
        d = random_dist(rng, _random_sizes(rng, "ABC"))
        return abs(entropy(d, ["A", "B"], "C") - entropy(d, "A", "C") - entropy(d, "B", ["A", "C"])) <= TOL

    def mi_chain(rng):
        d = random_dist(rng, _random_sizes(rng, "ABCD"))
        lhs = mutual_info(d, ["A", "B"], "C", "D")
        rhs = mutual_info(d, "A", "C", "D") + mutual_info(d, "B", "C", ["A", "D"])
        return abs(lhs - rhs) <= TOL

    def data_processing(rng):
        d = random_dist(rng, _random_sizes(rng, "ABC"))
        table = [int(x) for x in rng.integers(0, 2, size=3)]
        d2 = d.derive("FA", lambda a: table[a], "A")
        return mutual_info(d2, "FA", "B", "C") <= mutual_info(d2, "A", "B", "C") + TOL

    def info_increase(rng):
        d = _compose(rng, _random_sizes(rng, "ABCD"), [("C", ""), ("A", "C"), ("D", "C"), ("B", "ACD")])
        assert product_gap(d, ["A", "D"], "C") == 0
        return info_increase_holds(d)

    def info_decrease(rng):
        d = _compose(rng, _random_sizes(rng, "ABCD"), [("C", ""), ("B", "C"), ("A", "BC"), ("D", "BC")])
        assert product_gap(d, ["A", "D"], ["B", "C"]) == 0
        return info_decrease_holds(d)

    def pinsker(rng):
        sizes = _random_sizes(rng, "AB")
        p = random_dist(rng, sizes)
        q = random_dist(rng, sizes, zero_prob=0.0)
        return float(tvd(p, q)) <= math.sqrt(kl(p, q) * math.log(2) / 2) + TOL

    def tvd_small(rng):
        sizes = _random_sizes(rng, "AB")
        mu, nu = random_dist(rng, sizes), random_dist(rng, sizes)
        xs = {a: int(rng.integers(0, 6)) for a in np.ndindex(*sizes.values())}
        xs = {tuple(int(v) for v in a): x for a, x in xs.items()}
        top = max(xs.values())
        e_mu = sum((q * xs[a] for a, q in mu.items()), Fraction(0))
        e_nu = sum((q * xs[a] for a, q in nu.items()), Fraction(0))
        return e_mu <= e_nu + tvd(mu, nu) * top

    def tvd_chain(rng):
        sizes = _random_sizes(rng, "ABC")
        mu = random_dist(rng, sizes)
        nu = random_dist(rng, sizes, zero_prob=0.0)
        return tvd(mu, nu) <= tvd_chain_bound(mu, nu, ["A", "B", "C"])

    def tvd_marginal(rng):
        sizes = _random_sizes(rng, "ABC")
        mu, nu = random_dist(rng, sizes), random_dist(rng, sizes)
        keep = ["A", "C"] if rng.random() < 0.5 else ["B"]
        return tvd(mu.marginal(keep), nu.marginal(keep)) <= tvd(mu, nu)

    def kl_info(rng):
        d = random_dist(rng, _random_sizes(rng, "ABC"))
        return abs(mutual_info(d, "A", "B", "C") - kl_info_rhs(d)) <= TOL

    return {
        "entropy_bounds": entropy_bounds,
        "mi_nonnegative_zero_iff_independent": mi_nonneg_and_zero,
        "conditioning_reduces_entropy": conditioning_reduces,
        "subadditivity": subadditivity,
        "entropy_chain_rule": entropy_chain,
        "mi_chain_rule": mi_chain,
        "data_processing": data_processing,
        "info_increase_under_independence": info_increase,
        "info_decrease_under_independence": info_decrease,
        "pinsker": pinsker,
        "tvd_small": tvd_small,
        "tvd_chain_rule": tvd_chain,
        "tvd_marginal": tvd_marginal,
        "kl_info": kl_info,
    }


def info_increase_holds(d: DiscreteDist) -> bool:
    return mutual_info(d, "A", "B", "C") <= mutual_info(d, "A", "B", ["C", "D"]) + TOL


def info_decrease_holds(d: DiscreteDist) -> bool:
    return mutual_info(d, "A", "B", "C") >= mutual_info(d, "A", "B", ["C", "D"]) - TOL


def tvd_chain_bound(mu: DiscreteDist, nu: DiscreteDist, order: Sequence[str]) -> Fraction:
    """sum_i E_{x_<i ~ mu} TV(mu(X_i | x_<i), nu(X_i | x_<i))."""
    total = Fraction(0)
    for idx, name in enumerate(order):
        prev = list(order[:idx])
        tm = mu.conditional_table(name, prev)
        tn = nu.conditional_table(name, prev)
        pm = mu.marginal(prev) if prev else None
        for key, row in tm.items():
            weight = pm.prob(key) if prev else Fraction(1)
            a = {v: q for v, q in row}
            b = {v: q for v, q in tn.get(key, [])}
            total += weight * sum((abs(a.get(x, 0) - b.get(x, 0)) for x in a.keys() | b.keys()), Fraction(0)) / 2
    return total


def kl_info_rhs(d: DiscreteDist) -> float:
    """E_{(b,c)} KL(D(A | b, c) || D(A | c))."""
    acc = []
    for (b, c), q in d.marginal(["B", "C"]).items():
        p_abc = d.condition({"B": b, "C": c})
        p_ac = d.condition({"C": c}).marginal("A")
        acc.append(float(q) * kl(p_abc.marginal("A"), p_ac))
    return math.fsum(acc)


def counterexample_fixtures() -> dict[str, DiscreteDist]:
    bit = {(0, 0, 0, 0): 1, (1, 1, 0, 1): 1}  # variables A, B, C, D
    xor = {(a, b, 0, a ^ b): 1 for a in (0, 1) for b in (0, 1)}
    return {
        "info_increase_without_premise": DiscreteDist("ABCD", bit),
        "info_decrease_without_premise": DiscreteDist("ABCD", xor),
    }


def infotheory(trials: int = 100, seed: int = 0) -> SuiteReport:
    rep = SuiteReport("infotheory", config={"trials": trials, "seed": seed})
    for idx, (name, fn) in enumerate(fact_checks().items()):
        rng = np.random.default_rng([seed, idx])
        fails = sum(not fn(rng) for _ in range(trials))
        rep.check(f"fact.{name}.failures", fails == 0, fails, 0, f"{trials} random distributions")
    fx = counterexample_fixtures()
    inc, dec = fx["info_increase_without_premise"], fx["info_decrease_without_premise"]
    rep.check("fixture.info_increase_premise_violated", product_gap(inc, ["A", "D"], "C") > 0 and not info_increase_holds(inc),
              note="A = B = D fair bit: the inequality must fail")
    rep.check("fixture.info_decrease_premise_violated", product_gap(dec, ["A", "D"], ["B", "C"]) > 0 and not info_decrease_holds(dec),
              note="D = A xor B: the inequality must fail")
    return rep


# --- protocols ---------------------------------------------------------------


def luby_suite(sizes: Sequence[int] = (8, 16, 32, 64), graphs: int = 100, seed: int = 0, edge_p: float = 0.5) -> SuiteReport:
    rep = SuiteReport("luby", config={"sizes": list(sizes), "graphs": graphs, "seed": seed, "edge_p": edge_p})
    for n in sizes:
        budget = math.ceil(8 * math.log2(n))
        proto = luby_blackboard(budget)
        valid = quiet = 0
        bits = 0
        for s in range(graphs):
            g = random_graph(n, edge_p, np.random.default_rng([seed, n, s]))
            tr, out, mb = run_protocol(g, proto, seed=seed * 7919 + s)
            valid += is_mis(g, out.vertices)
            bits = max(bits, mb)
            q = luby_quiescence(tr.rounds)
            quiet += q is not None and q <= budget
        rep.check(f"luby.n{n}.valid_runs", valid == graphs, valid, None, f"of {graphs}")
        rep.check(f"luby.n{n}.max_bits", bits <= 2, bits, 2)
        rep.check(f"luby.n{n}.quiescent_fraction", quiet >= 0.99 * graphs, quiet / graphs, None,
                  f"within {budget} phases, need at least 0.99")
    return rep


def bipartite_suite(graphs: int = 20, samples: int = 2000, seed: int = 0, max_n: int = 12) -> SuiteReport:
    rep = SuiteReport("bipartite", config={"graphs": graphs, "samples": samples, "seed": seed, "max_n": max_n})
    rng = np.random.default_rng([seed, 0xB1])
    worst_slack = math.inf
    mismatches = 0
    for gidx in range(graphs):
        n = int(rng.integers(2, max_n + 1))
        g = random_graph(n, float(rng.uniform(0.2, 0.8)), rng)
        mu = max_matching_size(g)
        vals = []
        for s in range(samples):
            z = cut_bits(seed * 100_003 + gidx * samples + s, n)
            vals.append(bipartite_matching_size(cut_subgraph(g, z), [v for v in range(n) if z[v] == 0]))
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1)) / math.sqrt(samples) if samples > 1 else 0.0
        slack = mean - (mu / 2 - 3 * se)
        worst_slack = min(worst_slack, slack)
        rep.check(f"bipartite.g{gidx}.mean_cut_matching", slack >= 0, mean, None,
                  f"n={n} mu={mu} need >= mu/2 - 3se = {mu / 2 - 3 * se:.4f}")
        for inner_name in ("greedy-matching", "full-broadcast"):
            inner = ProtocolSpec.parse(inner_name).build(n, kind="apx")
            wrapped = bipartite_wrapper(inner)
            for s in range(3):
                run_seed = seed * 31 + gidx * 3 + s
                tw, ow, bw = run_protocol(g, wrapped, run_seed)
                ti, oi, bi = run_protocol(cut_subgraph(g, cut_bits(run_seed, n)), inner, run_seed)
                if wrapped.rounds != inner.rounds or tw.n_rounds != ti.n_rounds or bw != bi or tw.rounds != ti.rounds or ow != oi:
                    mismatches += 1
    rep.check("bipartite.wrapper_accounting_mismatches", mismatches == 0, mismatches, 0,
              "rounds, max bits and transcript equal the inner protocol on the cut subgraph")
    return rep


def protocols_suite(seed: int = 0) -> SuiteReport:
    rep = SuiteReport("protocols", config={"seed": seed})
    rep.extend(luby_suite(seed=seed))
    rep.extend(bipartite_suite(seed=seed))
    return rep


# --- embedding ---------------------------------------------------------------


def _budgets(jl: emb.JointLaw, bandwidth: int) -> dict[str, Any]:
    lv = jl.params.level(jl.level)
    m = jl.block_size
    return {
        "first": Fraction(m * bandwidth, lv.f_hat),
        "term_p": lambda t: Fraction(bandwidth * (m - 1) * lv.f * (t - 1), lv.p),
        "term_f": lambda t: Fraction(bandwidth * (m - 1) * lv.f * t, lv.p),
    }


def analyze_protocol(jl: emb.JointLaw, label: str, *, exact_zero_tv: bool = False) -> SuiteReport:
    """Every exact check on one joint law."""
    rep = SuiteReport(f"embedding:{label}")
    p = jl.blocks
    proto = next(iter(jl.protocols.values()))
    bw = proto.bandwidth
    b = _budgets(jl, bw)
    pre = f"{jl.kind}.{label}"

    sig = jl.dist.marginal("Sigma")
    rep.check(f"{pre}.sigma_uniform", all(q == Fraction(1, len(jl.sigmas)) for _, q in sig.items()), len(sig))
    target = level_law(jl.params, jl.level - 1)
    for i in range(p):
        rep.check(f"{pre}.B{i}.marginal_equals_level_law", emb.block_marginal(jl, i) == target)
    gap = emb.blocks_product_gap(jl)
    rep.check(f"{pre}.blocks_product_gap", gap == 0, gap, 0)
    worst = max(emb.check_product_property(jl, i) for i in range(p))
    rep.check(f"{pre}.fooling_product_tv_max", worst == 0, worst, 0)

    if jl.rounds >= 1:
        for i in range(p):
            rep.add(quantity(f"{pre}.first_round_info.B{i}", emb.mi_first_round(jl, i), b["first"]))
    for t in range(1, jl.rounds + 1):
        terms = [emb.mi_round_t(jl, i, t) for i in range(p)]
        tp = math.fsum(x for x, _ in terms) / p
        tf = math.fsum(y for _, y in terms) / p
        rep.add(quantity(f"{pre}.round{t}.other_blocks_info_avg", tp, b["term_p"](t)))
        rep.add(quantity(f"{pre}.round{t}.fooling_info_avg", tf, b["term_f"](t)))
        lhs, rhs = emb.check_sum_info(jl, t)
        rep.check(f"{pre}.round{t}.info_additivity", lhs <= rhs + TOL, lhs, rhs, "lhs <= rhs + 1e-9")

    budget = emb.pinsker_budget(jl)
    audit = emb.round_elim_audit(jl)
    mean_tv = sum(audit.per_block_tv, Fraction(0)) / p
    rep.check(f"{pre}.mean_tv_vs_pinsker_budget", float(mean_tv) <= budget["budget"] + TOL, mean_tv, budget["budget"])
    if exact_zero_tv:
        rep.check(f"{pre}.tv_exactly_zero", mean_tv == 0, mean_tv, 0)
    rep.check(f"{pre}.round_elimination", audit.holds, audit.lhs, None,
              f"need >= {float(audit.rhs):.6f}; delta={float(audit.delta):.6f}; best block {audit.best_block}")
    return rep


def monte_carlo_tau(jl: emb.JointLaw, label: str, trials: int = 10_000, block: int = 0, seed: int = 0) -> SuiteReport:
    rep = SuiteReport(f"tau-mc:{label}")
    exact = float(emb.nu_success(jl, block))
    hits = 0
    talked = set()
    worst = 0
    for s in range(trials):
        run = emb.simulate_tau(jl, block, seed * 1_000_003 + s)
        hits += run.success
        worst = max(worst, run.rounds_communicated)
        if not run.failed:
            talked.add(run.rounds_communicated)
    rate = hits / trials
    sd = math.sqrt(exact * (1 - exact) / trials)
    rep.check(f"{jl.kind}.{label}.tau_success_within_3sd", abs(rate - exact) <= 3 * sd + 1e-12, rate, None,
              f"exact {exact:.6f}, 3sd {3 * sd:.6f}")
    expected = max(jl.rounds - 1, 0)
    rep.check(f"{jl.kind}.{label}.tau_rounds_communicated", talked <= {expected} and worst <= expected, worst, expected,
              "completed runs post exactly one round fewer; aborted runs post fewer")
    return rep


def broken_fixture_law(params: Params):
    """Instance law whose first two vertices of block 0 share one fooling neighborhood draw."""
    base = emb.default_instance_law(params)

    def gen():
        for blocks, stars, w in base():
            if stars[0][0] == stars[0][1]:
                yield blocks, stars, w

    return gen


def embedding(
    k: int = 1,
    f_hat: int = 1,
    p_hat: int = 2,
    protocols: Optional[Sequence[str]] = None,
    sigma_mode: str = "blocks",
    sigma_limit: int = 4,
    seed: int = 0,
    mc_trials: int = 10_000,
    apx: bool = True,
    multiround: bool = True,
) -> SuiteReport:
    rep = SuiteReport(
        "embedding",
        config={"k": k, "f_hat": f_hat, "p_hat": p_hat, "sigma_mode": sigma_mode, "sigma_limit": sigma_limit,
                "seed": seed, "mc_trials": mc_trials},
    )
    params = make_params(k, 1, toy=(f_hat, p_hat), variant="mis")
    names = list(protocols) if protocols else list(MIS_STRESS) + (list(MIS_STRESS_MULTIROUND) if multiround else [])
    laws = {}
    for name in names:
        jl = emb.enumerate_joint(params, name, sigma_mode, sigma_limit=sigma_limit, seed=seed)
        laws[name] = jl
        rep.extend(analyze_protocol(jl, name, exact_zero_tv=name.split(":")[0] in ("silent", "zero")))

    if protocols is None:
        for name in ("silent", "luby:2" if multiround else "luby:1"):
            rep.extend(monte_carlo_tau(laws[name], name, mc_trials, seed=seed))
        silent_gap = emb.rectangle_gap(laws["silent"], 0)
        rep.check("mis.rectangle.silent_gap", silent_gap == 0, silent_gap, 0)
        fx_gap = emb.rectangle_gap(laws["xor:fooling_xor"], 0)
        rep.check("mis.rectangle.fooling_xor_gap_positive", fx_gap > 0, fx_gap, None)
        broken = emb.enumerate_joint(params, "silent", sigma_mode, sigma_limit=sigma_limit, seed=seed,
                                     instance_law=broken_fixture_law(params))
        gap = emb.check_product_property(broken, 0)
        rep.check("mis.fixture.correlated_fooling_detected", gap > 0, gap, None)

    if apx and protocols is None:
        apx_params = make_params(max(k, 2), 1, toy=(1, 1), variant="apx")
        for name in APX_STRESS:
            jl = emb.enumerate_joint(apx_params, name, sigma_mode, sigma_limit=sigma_limit, seed=seed)
            rep.extend(analyze_protocol(jl, name, exact_zero_tv=name in ("silent", "zero")))
    return rep


# --- driver ------------------------------------------------------------------


def run_suite(name: str, *, trials: Optional[int] = None, seed: int = 0, **kw: Any) -> SuiteReport:
    if name == "base-cases":
        return base_cases()
    if name == "structure":
        return structure(trials or 200, seed)
    if name == "infotheory":
        return infotheory(trials or 100, seed)
    if name == "embedding":
        return embedding(seed=seed, **kw)
    if name == "protocols":
        return protocols_suite(seed)
    if name == "all":
        rep = SuiteReport("all", config={"seed": seed, "trials": trials})
        for sub in ("base-cases", "structure", "infotheory", "protocols", "embedding"):
            rep.extend(run_suite(sub, trials=trials, seed=seed, **kw))
        return rep
    raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
