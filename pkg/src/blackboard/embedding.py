"""Exact joint law of (instance, permutation, transcript) and the block simulation.

The joint law is enumerated atom by atom: every combination of principal
sub-instances and per-vertex fooling neighborhoods (their exact component laws
come from :mod:`blackboard.distributions`) is combined with every permutation
atom, assembled into a graph, and the protocol is actually executed on it.

Variable names in the joint law::

    Sigma          permutation atom (a tuple of public labels)
    B{i}           edges inside principal block i, in block positions
    T{i}.{a}       fooling neighbors (block, position) of position a of block i
    M{t}P{i}       round-t messages of block i, in block positions
    M{t}F          round-t messages of all fooling vertices, in layout order

The simulation for block ``i`` keeps the block's real input, draws the other
players' messages from conditionals of the joint law, and runs the original
referee on the resulting blackboard.  Its law over the same variables is built
exactly by :func:`build_nu`; atoms it reaches outside the joint law's support
(where a conditional is undefined) are collected in a single failure atom.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from .distributions import (
    BlockLayout,
    Params,
    assemble_edges,
    count_sigma_atoms,
    layout_for,
    level_law,
    pre_layout,
    sigma_from_permutation,
    star_law,
)
from .errors import ConfigError, NondeterministicProtocol, TooLarge
from .infotheory import DiscreteDist, mutual_info, product_gap
from .model import MIS, Board, Coins, Graph, Matching, Protocol, VertexView, run_protocol
from .protocols import ProtocolSpec

ATOM_LIMIT = 1 << 26
FAIL = "FAIL"

ProtocolSource = Union[Protocol, ProtocolSpec, str, Callable[[BlockLayout], Protocol]]


# --- variable naming ---------------------------------------------------------


def b_var(i: int) -> str:
    return f"B{i}"


def t_var(i: int, a: int) -> str:
    return f"T{i}.{a}"


def mp_var(t: int, i: int) -> str:
    return f"M{t}P{i}"


def mf_var(t: int) -> str:
    return f"M{t}F"


# --- the joint law -----------------------------------------------------------


@dataclass
class JointLaw:
    dist: DiscreteDist
    params: Params
    rounds: int
    kind: str
    sigmas: tuple[tuple[int, ...], ...]
    layouts: dict
    protocols: dict
    seed: int
    success_weight: int = 0
    value_weight: int = 0
    block_success_weight: tuple[int, ...] = ()
    block_value_weight: tuple[int, ...] = ()
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def level(self) -> int:
        return self.params.r

    @property
    def blocks(self) -> int:
        return len(pre_layout(self.params, self.level).principal)

    @property
    def block_size(self) -> int:
        return self.params.n(self.level - 1)

    @property
    def n(self) -> int:
        return self.params.n(self.level)

    def g_vars(self, i: int) -> list[str]:
        return [b_var(i)] + [t_var(i, a) for a in range(self.block_size)]

    def all_g_vars(self) -> list[str]:
        return [v for i in range(self.blocks) for v in self.g_vars(i)]

    def p_vars(self, t: int, exclude: Optional[int] = None) -> list[str]:
        return [mp_var(t, j) for j in range(self.blocks) if j != exclude]

    def round_vars(self, t: int) -> list[str]:
        return self.p_vars(t) + [mf_var(t)]

    def before(self, t: int) -> list[str]:
        """Variables of M^{(<t)}."""
        return [v for s in range(1, t) for v in self.round_vars(s)]

    def nu_vars(self, i: int) -> list[str]:
        return ["Sigma"] + self.g_vars(i) + [v for t in range(1, self.rounds + 1) for v in self.round_vars(t)]

    @property
    def success(self) -> Fraction:
        """Probability that the protocol's output is correct (MIS) on the full instance."""
        return Fraction(self.success_weight, self.dist.total)

    @property
    def expected_value(self) -> Fraction:
        """Expected number of valid output pairs (matching kind)."""
        return Fraction(self.value_weight, self.dist.total)

    def block_success(self, i: int) -> Fraction:
        return Fraction(self.block_success_weight[i], self.dist.total)

    def block_value(self, i: int) -> Fraction:
        return Fraction(self.block_value_weight[i], self.dist.total)

    def board(self, sigma: tuple[int, ...], messages: Sequence[tuple]) -> Board:
        """Rebuild full rows from per-round ``(block messages..., fooling messages)`` groups."""
        layout = self.layouts[sigma]
        rows = []
        for group in messages:
            row = [""] * self.n
            for j, blk in enumerate(layout.principal):
                for v, m in zip(blk, group[j]):
                    row[v] = m
            for v, m in zip(layout.fooling_vertices, group[-1]):
                row[v] = m
            rows.append(tuple(row))
        return tuple(rows)


def _protocol_factory(source: ProtocolSource, n: int, kind: str) -> Callable[[BlockLayout], Protocol]:
    if isinstance(source, Protocol):
        return lambda layout: source
    if isinstance(source, str):
        source = ProtocolSpec.parse(source)
    if isinstance(source, ProtocolSpec):
        spec = source
        return lambda layout: spec.build(n, layout, kind)
    return source


def sigma_atoms(params: Params, mode: str, limit: int, seed: int) -> tuple[tuple[int, ...], ...]:
    """A seeded set of distinct permutation atoms (all of them when few enough)."""
    pre = pre_layout(params, params.r)
    total = count_sigma_atoms(pre, mode)
    want = min(limit, total)
    rng = np.random.default_rng([seed, 0x5167])
    found: set[tuple[int, ...]] = set()
    tries = 0
    while len(found) < want:
        found.add(sigma_from_permutation(tuple(int(x) for x in rng.permutation(pre.n)), pre, mode))
        tries += 1
        if tries > 1000 * want:
            raise ConfigError(f"could not draw {want} distinct sigma atoms")
    return tuple(sorted(found))


def _int_weights(law: dict) -> list[tuple[Any, int]]:
    den = math.lcm(*(p.denominator for p in law.values()))
    return sorted(((v, int(p * den)) for v, p in law.items()), key=lambda x: repr(x[0]))


def component_laws(params: Params) -> tuple[list, dict[int, list]]:
    """Integer-weighted laws of one principal sub-instance and of one vertex's fooling
    neighborhood (per side)."""
    level = params.r
    pre = pre_layout(params, level)
    b_law = _int_weights(level_law(params, level - 1))
    star = _int_weights(star_law(params, level))
    t_laws = {}
    for side in set(pre.principal_side):
        js = pre.fooling_of_side(side)
        combos = []
        for picks in itertools.product(star, repeat=len(js)):
            value = tuple(sorted((j, x) for j, (hits, _) in zip(js, picks) for x in hits))
            combos.append((value, math.prod(w for _, w in picks)))
        merged: dict = defaultdict(int)
        for v, w in combos:
            merged[v] += w
        t_laws[side] = sorted(merged.items(), key=lambda x: repr(x[0]))
    return b_law, t_laws


def default_instance_law(params: Params) -> Callable[[], Iterator[tuple[tuple, tuple, int]]]:
    """Product of component laws, yielding ``(blocks, stars, weight)``."""
    pre = pre_layout(params, params.r)
    m = params.n(params.r - 1)
    p = len(pre.principal)
    b_law, t_laws = component_laws(params)
    factors = [b_law] * p + [t_laws[pre.principal_side[i]] for i in range(p) for _ in range(m)]

    def gen():
        for picks in itertools.product(*factors):
            blocks = tuple(v for v, _ in picks[:p])
            flat = [v for v, _ in picks[p:]]
            stars = tuple(tuple(flat[i * m : (i + 1) * m]) for i in range(p))
            yield blocks, stars, math.prod(w for _, w in picks)

    gen.size = math.prod(len(f) for f in factors)
    return gen


@lru_cache(maxsize=1 << 16)
def _block_is_mis(m: int, edges: tuple, chosen: frozenset[int]) -> bool:
    for a, b in edges:
        if a in chosen and b in chosen:
            return False
    adj = [set() for _ in range(m)]
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return all(a in chosen or adj[a] & chosen for a in range(m))


def block_outcome(kind: str, out, block: Sequence[int], edges: tuple) -> tuple[bool, int]:
    """(MIS restricted to the block is valid, number of valid pairs inside the block)."""
    pos = {v: a for a, v in enumerate(block)}
    if kind == "mis":
        chosen = frozenset(pos[v] for v in out.vertices if v in pos)
        return _block_is_mis(len(block), edges, chosen), 0
    eset = set(edges)
    hits = 0
    for u, v in out.pairs:
        if u in pos and v in pos:
            a, b = sorted((pos[u], pos[v]))
            hits += (a, b) in eset
    return False, hits


def _graph_outcome(kind: str, out, graph: Graph) -> tuple[bool, int]:
    if kind == "mis":
        s = out.vertices
        if any(u in s and v in s for u, v in graph.edges):
            return False, 0
        adj = graph.adjacency
        return all(v in s or any(w in s for w in adj[v]) for v in range(graph.n)), 0
    return False, sum(1 for p in out.pairs if p in graph.edge_set)


def _shard(jl_meta, sigmas, gen, factory, seed, kind):
    params, m, p = jl_meta
    weights: dict[tuple, int] = {}
    succ = val = 0
    bsucc = [0] * p
    bval = [0] * p
    layouts, protocols = {}, {}
    for sigma in sigmas:
        layout = layout_for(params, params.r, sigma)
        proto = factory(layout)
        layouts[sigma], protocols[sigma] = layout, proto
        for blocks, stars, w in gen():
            edges = assemble_edges(params, params.r, sigma, blocks, stars)
            graph = Graph(params.n(), edges)
            tr, out, _ = run_protocol(graph, proto, seed, layout=layout)
            msgs = []
            for rnd in tr.rounds:
                msgs.extend(tuple(rnd[v] for v in blk) for blk in layout.principal)
                msgs.append(tuple(rnd[v] for v in layout.fooling_vertices))
            flat_stars = tuple(s for row in stars for s in row)
            atom = (sigma,) + blocks + flat_stars + tuple(msgs)
            weights[atom] = weights.get(atom, 0) + w
            ok, hits = _graph_outcome(kind, out, graph)
            succ += w * ok
            val += w * hits
            for i, blk in enumerate(layout.principal):
                bok, bh = block_outcome(kind, out, blk, blocks[i])
                bsucc[i] += w * bok
                bval[i] += w * bh
    return weights, succ, val, bsucc, bval, layouts, protocols


def enumerate_joint(
    params: Params,
    protocol: ProtocolSource,
    sigma_mode: str = "blocks",
    *,
    sigma_limit: int = 4,
    seed: int = 0,
    workers: int = 1,
    instance_law: Optional[Callable[[], Iterable[tuple[tuple, tuple, int]]]] = None,
    determinism_checks: int = 100,
    shard_order: Optional[Sequence[int]] = None,
) -> JointLaw:
    """Exact joint law for a toy level-``r`` instance and a deterministic protocol.

    ``seed`` fixes the protocol's public and private coins for every atom.
    ``instance_law`` replaces the product of component laws (used to build
    deliberately broken fixtures).  Sharding by permutation atom is exact and
    independent of ``shard_order``.
    """
    if params.r < 1:
        raise ConfigError("the joint law needs a recursive level r >= 1")
    kind = params.variant
    pre = pre_layout(params, params.r)
    m, p = params.n(params.r - 1), len(pre.principal)
    sigmas = sigma_atoms(params, sigma_mode, sigma_limit, seed)
    gen = instance_law or default_instance_law(params)
    size = getattr(gen, "size", None)
    if size is not None and size * len(sigmas) > ATOM_LIMIT:
        raise TooLarge(f"{size} instance atoms x {len(sigmas)} sigma atoms exceeds {ATOM_LIMIT}")
    factory = _protocol_factory(protocol, params.n(), kind)

    shards = [list(sigmas[s::max(1, workers)]) for s in range(max(1, workers))]
    order = list(shard_order) if shard_order is not None else list(range(len(shards)))
    meta = (params, m, p)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(lambda s: _shard(meta, s, gen, factory, seed, kind), [shards[k] for k in order]))
    else:
        results = [_shard(meta, shards[k], gen, factory, seed, kind) for k in order]

    weights: dict[tuple, int] = defaultdict(int)
    succ = val = 0
    bsucc, bval = [0] * p, [0] * p
    layouts, protocols = {}, {}
    for w, s, v, bs, bv, lay, pro in results:
        for atom, x in w.items():
            weights[atom] += x
        succ += s
        val += v
        bsucc = [a + b for a, b in zip(bsucc, bs)]
        bval = [a + b for a, b in zip(bval, bv)]
        layouts.update(lay)
        protocols.update(pro)

    rounds = next(iter(protocols.values())).rounds
    names = (
        ["Sigma"]
        + [b_var(i) for i in range(p)]
        + [t_var(i, a) for i in range(p) for a in range(m)]
        + [v for t in range(1, rounds + 1) for v in [mp_var(t, i) for i in range(p)] + [mf_var(t)]]
    )
    raw_total = sum(weights.values())
    dist = DiscreteDist(names, weights)
    scale = raw_total // dist.total  # DiscreteDist reduces by the gcd; keep counters consistent
    jl = JointLaw(
        dist,
        params,
        rounds,
        kind,
        sigmas,
        layouts,
        protocols,
        seed,
        _div(succ, scale),
        _div(val, scale),
        tuple(_div(x, scale) for x in bsucc),
        tuple(_div(x, scale) for x in bval),
    )
    _check_determinism(jl, determinism_checks)
    return jl


def _div(x: int, scale: int) -> int:
    q, r = divmod(x, scale)
    assert r == 0, "accumulated weights must share the distribution's gcd"
    return q


def atom_graph(jl: JointLaw, atom: tuple) -> Graph:
    p, m = jl.blocks, jl.block_size
    sigma = atom[0]
    blocks = atom[1 : 1 + p]
    flat = atom[1 + p : 1 + p + p * m]
    stars = tuple(tuple(flat[i * m : (i + 1) * m]) for i in range(p))
    return Graph(jl.n, assemble_edges(jl.params, jl.level, sigma, blocks, stars))


def atom_messages(jl: JointLaw, atom: tuple) -> list[tuple]:
    start = 1 + jl.blocks + jl.blocks * jl.block_size
    per = jl.blocks + 1
    return [atom[start + s * per : start + (s + 1) * per] for s in range(jl.rounds)]


def _check_determinism(jl: JointLaw, count: int) -> None:
    atoms = sorted(jl.dist.weights, key=repr)
    if not atoms or count <= 0:
        return
    rng = np.random.default_rng([jl.seed, 0xD7])
    for idx in rng.choice(len(atoms), size=min(count, len(atoms)), replace=False):
        atom = atoms[int(idx)]
        sigma = atom[0]
        tr, _, _ = run_protocol(atom_graph(jl, atom), jl.protocols[sigma], jl.seed, layout=jl.layouts[sigma])
        if jl.board(sigma, atom_messages(jl, atom)) != tr.rounds:
            raise NondeterministicProtocol(f"re-running atom {idx} produced a different transcript")


# --- leakage quantities ------------------------------------------------------


def _with_block_rows(jl: JointLaw, i: int) -> DiscreteDist:
    """Joint law extended by ``B{i}.{a}``: the block edges at position ``a``."""
    key = ("rows", i)
    if key not in jl._cache:
        d = jl.dist
        for a in range(jl.block_size):
            d = d.derive(f"B{i}.{a}", lambda e, a=a: tuple(x for x in e if a in x), b_var(i))
        jl._cache[key] = d
    return jl._cache[key]


def mi_first_round(jl: JointLaw, i: int) -> float:
    """I(M1_{P,i}; B_i | Sigma)."""
    if jl.rounds < 1:
        return 0.0
    return mutual_info(jl.dist, mp_var(1, i), b_var(i), "Sigma")


def check_product_property(jl: JointLaw, i: int) -> Fraction:
    """Max over supported (B_i, M1_{P,i}, Sigma) of the TV between the law of T_i and
    the product of per-vertex conditionals given (B_i(u), M1_{P,i}, Sigma)."""
    d = _with_block_rows(jl, i)
    m = jl.block_size
    first = [mp_var(1, i)] if jl.rounds >= 1 else []
    t_names = [t_var(i, a) for a in range(m)]
    joint = d.conditional_table(t_names, [b_var(i)] + first + ["Sigma"])
    per_vertex = [d.conditional_table(t_var(i, a), [f"B{i}.{a}"] + first + ["Sigma"]) for a in range(m)]
    worst = Fraction(0)
    for cond, rows in joint.items():
        edges, rest = cond[0], cond[1:]
        factors = []
        for a in range(m):
            row_a = tuple(x for x in edges if a in x)
            factors.append({v[0]: q for v, q in per_vertex[a][(row_a,) + rest]})
        seen = Fraction(0)
        dev = Fraction(0)
        for tvals, q in rows:
            prod_q = math.prod((factors[a].get(tvals[a], Fraction(0)) for a in range(m)), start=Fraction(1))
            dev += abs(q - prod_q)
            seen += prod_q
        worst = max(worst, (dev + (1 - seen)) / 2)
    return worst


def mi_round_t(jl: JointLaw, i: int, t: int) -> tuple[float, float]:
    """(I(M^t_{P,-i}; G_i | M^{<t}, M^t_{P,i}, Sigma), I(M^t_F; G_i | M^{<t}, M^t_P, Sigma))."""
    if not 1 <= t <= jl.rounds:
        raise ConfigError(f"round {t} outside [1, {jl.rounds}]")
    prev = jl.before(t)
    gi = jl.g_vars(i)
    others = jl.p_vars(t, exclude=i)
    term_p = mutual_info(jl.dist, others, gi, prev + [mp_var(t, i), "Sigma"]) if others else 0.0
    term_f = mutual_info(jl.dist, mf_var(t), gi, prev + jl.p_vars(t) + ["Sigma"])
    return term_p, term_f


def check_sum_info(jl: JointLaw, t: int) -> tuple[float, float]:
    """Left and right sides of the information-additivity inequality at round ``t``."""
    prev_f = [mf_var(s) for s in range(1, t)]
    prev_p = [v for s in range(1, t) for v in jl.p_vars(s)]
    lhs = mutual_info(jl.dist, prev_p + jl.p_vars(t), jl.all_g_vars(), prev_f + ["Sigma"])
    rhs = math.fsum(
        mutual_info(jl.dist, prev_p + [mp_var(t, i)], jl.g_vars(i), prev_f + ["Sigma"]) for i in range(jl.blocks)
    )
    return lhs, rhs


def rectangle_gap(jl: JointLaw, i: int, t: Optional[int] = None) -> Fraction:
    """E TV between D(G_i, G_-i | M^{<=t}, Sigma) and the product of its two marginals."""
    t = jl.rounds if t is None else t
    others = [v for j in range(jl.blocks) if j != i for v in jl.g_vars(j)]
    given = [v for s in range(1, t + 1) for v in jl.round_vars(s)] + ["Sigma"]
    return product_gap(jl.dist, [jl.g_vars(i), others], given)


def blocks_product_gap(jl: JointLaw) -> Fraction:
    """E TV between D(B_1..B_p | Sigma) and the product of the block marginals."""
    return product_gap(jl.dist, [[b_var(i)] for i in range(jl.blocks)], ["Sigma"])


def block_marginal(jl: JointLaw, i: int) -> dict[tuple, Fraction]:
    return {a[0]: q for a, q in jl.dist.marginal(b_var(i)).items()}


# --- the simulated law -------------------------------------------------------


@dataclass
class NuLaw:
    i: int
    variables: tuple[str, ...]
    probs: dict[tuple, Fraction]
    fail: Fraction

    def total(self) -> Fraction:
        return sum(self.probs.values(), Fraction(0)) + self.fail


@dataclass
class _Tables:
    first: dict
    vertex: list
    others: list  # per round, keyed by (M^{<t} values, M^t_{P,i}, Sigma)
    fooling: list  # per round, keyed by (M^{<t} values, M^t_P, Sigma)
    prior_b: list
    prior_sigma: list


def _tables(jl: JointLaw, i: int) -> _Tables:
    key = ("tables", i)
    if key in jl._cache:
        return jl._cache[key]
    d = _with_block_rows(jl, i)
    m = jl.block_size
    first = [mp_var(1, i)] if jl.rounds >= 1 else []
    first_table = d.conditional_table(mp_var(1, i), ["Sigma"]) if first else {}
    vertex = [d.conditional_table(t_var(i, a), [f"B{i}.{a}"] + first + ["Sigma"]) for a in range(m)]
    others, fooling = [], []
    for t in range(1, jl.rounds + 1):
        prev = jl.before(t)
        rest = jl.p_vars(t, exclude=i)
        others.append(d.conditional_table(rest, prev + [mp_var(t, i), "Sigma"]) if rest else None)
        fooling.append(d.conditional_table(mf_var(t), prev + jl.p_vars(t) + ["Sigma"]))
    prior_b = [(a[0], q) for a, q in jl.dist.marginal(b_var(i)).items()]
    prior_sigma = [(a[0], q) for a, q in jl.dist.marginal("Sigma").items()]
    tables = _Tables(first_table, vertex, others, fooling, sorted(prior_b, key=repr), sorted(prior_sigma))
    jl._cache[key] = tables
    return tables


def _real_block_messages(jl: JointLaw, i: int, sigma, edges, stars, board: Board, t: int) -> tuple[str, ...]:
    """Round-``t`` messages of block ``i`` computed from the block's actual input."""
    layout = jl.layouts[sigma]
    proto = jl.protocols[sigma]
    blk = layout.principal[i]
    out = []
    for a, v in enumerate(blk):
        nbrs = [blk[b if a == c else c] for c, b in edges if a in (c, b)]
        nbrs += [layout.fooling[j][x] for j, x in stars[a]]
        view = VertexView(v, jl.n, tuple(sorted(nbrs)))
        out.append(proto.message_fn(view, t, board, Coins(jl.seed, v)))
    return tuple(out)


def _splice(group_others: tuple, i: int, mine: tuple) -> tuple:
    """Insert block ``i`` messages into the tuple of the other blocks' messages."""
    return group_others[:i] + (mine,) + group_others[i:]


def build_nu(jl: JointLaw, i: int) -> NuLaw:
    """Exact law of the block-``i`` simulation over the joint-law variables of ``G_i``,
    the transcript and ``Sigma``."""
    tab = _tables(jl, i)
    m = jl.block_size
    fail = Fraction(0)
    # state: (sigma, edges, stars, rounds so far as list of per-round groups) -> prob
    states: list[tuple[tuple, tuple, tuple, tuple, Fraction]] = []
    sig_b = jl.dist.marginal(["Sigma", b_var(i)])
    for (sigma, edges), q in sig_b.items():
        states.append((sigma, edges, (), (), q))

    if jl.rounds == 0:
        expanded = []
        for sigma, edges, _, _, q in states:
            expanded.extend(_expand_stars(tab, m, sigma, edges, (), q))
        probs = defaultdict(Fraction)
        for sigma, edges, stars, q in expanded:
            probs[(sigma, edges) + stars] += q
        return NuLaw(i, tuple(jl.nu_vars(i)), dict(probs), Fraction(0))

    for t in range(1, jl.rounds + 1):
        nxt = []
        for sigma, edges, stars, rounds, q in states:
            prev_vals = tuple(v for grp in rounds for v in grp)
            if t == 1:
                mine_opts = [(v[0], r) for v, r in tab.first[(sigma,)]]
            else:
                board = jl.board(sigma, rounds)
                mine_opts = [(_real_block_messages(jl, i, sigma, edges, stars, board, t), Fraction(1))]
            for mine, r1 in mine_opts:
                if t == 1:
                    star_opts = _expand_stars(tab, m, sigma, edges, (mine,), q * r1)
                    if not star_opts:
                        fail += q * r1
                        continue
                else:
                    star_opts = [(sigma, edges, stars, q * r1)]
                for _, _, st, q2 in star_opts:
                    if tab.others[t - 1] is None:
                        other_opts = [((), Fraction(1))]
                    else:
                        row = tab.others[t - 1].get(prev_vals + (mine, sigma))
                        if row is None:
                            fail += q2
                            continue
                        other_opts = row
                    for others, r2 in other_opts:
                        ps = _splice(tuple(others), i, mine)
                        frow = tab.fooling[t - 1].get(prev_vals + ps + (sigma,))
                        if frow is None:
                            fail += q2 * r2
                            continue
                        for fv, r3 in frow:
                            nxt.append((sigma, edges, st, rounds + (ps + fv,), q2 * r2 * r3))
        states = nxt

    probs: dict[tuple, Fraction] = defaultdict(Fraction)
    for sigma, edges, stars, rounds, q in states:
        probs[(sigma, edges) + stars + tuple(v for grp in rounds for v in grp)] += q
    return NuLaw(i, tuple(jl.nu_vars(i)), dict(probs), fail)


def _expand_stars(tab: _Tables, m: int, sigma, edges, first: tuple, q: Fraction):
    """Per-vertex fooling neighborhoods drawn independently; an empty result means a
    required conditional is undefined and the caller books the mass as failure."""
    partial = [((), q)]
    for a in range(m):
        row_a = tuple(x for x in edges if a in x)
        row = tab.vertex[a].get((row_a,) + first + (sigma,))
        if row is None:
            return []
        partial = [(acc + (v[0],), pq * r) for acc, pq in partial for v, r in row]
    return [(sigma, edges, stars, pq) for stars, pq in partial]


def mu_marginal_for(jl: JointLaw, i: int) -> dict[tuple, Fraction]:
    return {a: q for a, q in jl.dist.marginal(jl.nu_vars(i)).items()}


def expected_tvd_mu_nu(jl: JointLaw, i: int, nu: Optional[NuLaw] = None) -> Fraction:
    """E over B_i of TV between the true and simulated conditional laws.

    Both laws give B_i the same marginal, so this equals the joint TV, with the
    failure mass counted as lying outside the true law's support.
    """
    nu = nu or build_nu(jl, i)
    mu = mu_marginal_for(jl, i)
    dev = Fraction(0)
    for a in mu.keys() | nu.probs.keys():
        dev += abs(mu.get(a, Fraction(0)) - nu.probs.get(a, Fraction(0)))
    return (dev + nu.fail) / 2


def pinsker_budget(jl: JointLaw) -> dict[str, float]:
    """Sum-of-square-roots bound on the block-averaged TV, from block-averaged information terms."""
    p = jl.blocks
    first = math.fsum(mi_first_round(jl, i) for i in range(p)) / p
    parts = {"first_round": first}
    total = math.sqrt(max(first, 0.0))
    for t in range(1, jl.rounds + 1):
        terms = [mi_round_t(jl, i, t) for i in range(p)]
        tp = math.fsum(x for x, _ in terms) / p
        tf = math.fsum(y for _, y in terms) / p
        parts[f"round{t}_P"] = tp
        parts[f"round{t}_F"] = tf
        total += math.sqrt(max(tp, 0.0)) + math.sqrt(max(tf, 0.0))
    parts["budget"] = total
    return parts


# --- success under the simulated law -----------------------------------------


def _nu_outcomes(jl: JointLaw, i: int, nu: NuLaw) -> tuple[Fraction, Fraction]:
    """(probability the simulation's block output is a valid MIS, expected valid block pairs)."""
    succ = val = Fraction(0)
    start = 2 + jl.block_size
    per = jl.blocks + 1
    for atom, q in nu.probs.items():
        sigma, edges = atom[0], atom[1]
        msgs = [atom[start + s * per : start + (s + 1) * per] for s in range(jl.rounds)]
        out = jl.protocols[sigma].referee_fn(jl.board(sigma, msgs), Coins(jl.seed))
        ok, hits = block_outcome(jl.kind, out, jl.layouts[sigma].principal[i], edges)
        succ += q * ok
        val += q * hits
    return succ, val


def nu_success(jl: JointLaw, i: int, nu: Optional[NuLaw] = None) -> Fraction:
    return _nu_outcomes(jl, i, nu or build_nu(jl, i))[0]


def nu_value(jl: JointLaw, i: int, nu: Optional[NuLaw] = None) -> Fraction:
    return _nu_outcomes(jl, i, nu or build_nu(jl, i))[1]


@dataclass
class TauRun:
    output: Any
    success: bool
    value: int
    rounds_communicated: int
    failed: bool


def _draw(rng: np.random.Generator, row: Sequence[tuple[Any, Fraction]]):
    u = rng.random()
    acc = 0.0
    for v, q in row:
        acc += float(q)
        if u < acc:
            return v
    return row[-1][0]


def simulate_tau(jl: JointLaw, i: int, seed: int, block_input: Optional[tuple] = None) -> TauRun:
    """One run of the block-``i`` simulation.

    Public randomness draws Sigma, the block's first-round messages and every
    other player's messages; each block vertex privately draws its fooling
    neighborhood.  From round 2 on the block's players post their real messages.
    """
    tab = _tables(jl, i)
    rng = np.random.default_rng([seed, 0x7A])
    edges = block_input if block_input is not None else _draw(rng, tab.prior_b)
    sigma = _draw(rng, tab.prior_sigma)
    layout = jl.layouts[sigma]
    blk = layout.principal[i]

    def restricted(out):
        return out.restrict(blk)

    def finish(board: Board, talked: int) -> TauRun:
        out = jl.protocols[sigma].referee_fn(board, Coins(jl.seed))
        ok, hits = block_outcome(jl.kind, out, blk, edges)
        return TauRun(restricted(out), ok, hits, talked, False)

    def failed(talked: int) -> TauRun:
        empty = MIS(frozenset()) if jl.kind == "mis" else Matching(())
        return TauRun(empty, False, 0, talked, True)

    first = ()
    mine = None
    if jl.rounds >= 1:
        mine = _draw(rng, tab.first[(sigma,)])[0]
        first = (mine,)
    stars = []
    for a in range(jl.block_size):
        private = np.random.default_rng([seed, 0x7B, a])
        row = tab.vertex[a].get((tuple(x for x in edges if a in x),) + first + (sigma,))
        if row is None:
            return failed(0)
        stars.append(_draw(private, row)[0])
    stars = tuple(stars)
    if jl.rounds == 0:
        return finish((), 0)

    rounds: list[tuple] = []
    talked = 0
    for t in range(1, jl.rounds + 1):
        prev_vals = tuple(v for grp in rounds for v in grp)
        if t > 1:
            mine = _real_block_messages(jl, i, sigma, edges, stars, jl.board(sigma, rounds), t)
            talked += 1
        if tab.others[t - 1] is None:
            others = ()
        else:
            row = tab.others[t - 1].get(prev_vals + (mine, sigma))
            if row is None:
                return failed(talked)
            others = _draw(rng, row)
        ps = _splice(tuple(others), i, mine)
        frow = tab.fooling[t - 1].get(prev_vals + ps + (sigma,))
        if frow is None:
            return failed(talked)
        rounds.append(ps + _draw(rng, frow))
    return finish(jl.board(sigma, rounds), talked)


# --- round elimination audit -------------------------------------------------


@dataclass
class AuditReport:
    kind: str
    delta: Fraction
    expected_value: Fraction
    per_block_tv: list[Fraction]
    per_block_nu: list[Fraction]
    per_block_mu: list[Fraction]
    lhs: Fraction
    rhs: Fraction
    best_block: int

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "delta": _q(self.delta),
            "expected_value": _q(self.expected_value),
            "per_block_tv": [_q(x) for x in self.per_block_tv],
            "per_block_nu": [_q(x) for x in self.per_block_nu],
            "per_block_mu": [_q(x) for x in self.per_block_mu],
            "lhs": _q(self.lhs),
            "rhs": _q(self.rhs),
            "best_block": self.best_block,
            "holds": self.holds,
        }


def _q(x: Fraction) -> dict[str, Any]:
    return {"exact": f"{x.numerator}/{x.denominator}", "value": float(x)}


def round_elim_audit(jl: JointLaw) -> AuditReport:
    """Check that some block simulation inherits the protocol's performance up to the TV loss.

    MIS: mean_i success(tau_i) >= delta/2 - mean_i TV_i.
    Matching: mean_i value(tau_i) >= (E[valid pairs] - n_{r-1} f_r)/p_r - (n_{r-1}/2) mean_i TV_i.
    """
    p = jl.blocks
    tvs, nus, mus = [], [], []
    for i in range(p):
        nu = build_nu(jl, i)
        tvs.append(expected_tvd_mu_nu(jl, i, nu))
        s, v = _nu_outcomes(jl, i, nu)
        nus.append(s if jl.kind == "mis" else v)
        mus.append(jl.block_success(i) if jl.kind == "mis" else jl.block_value(i))
    mean_tv = sum(tvs, Fraction(0)) / p
    lhs = sum(nus, Fraction(0)) / p
    if jl.kind == "mis":
        rhs = jl.success / 2 - mean_tv
    else:
        lv = jl.params.level(jl.level)
        m = jl.block_size
        rhs = (jl.expected_value - m * lv.f) / lv.p - Fraction(m, 2) * mean_tv
    best = max(range(p), key=lambda i: (nus[i], -i))
    return AuditReport(jl.kind, jl.success, jl.expected_value, tvs, nus, mus, lhs, rhs, best)


def round_count_audit(jl: JointLaw, i: int = 0, seed: int = 0) -> int:
    return simulate_tau(jl, i, seed).rounds_communicated


# --- report export -----------------------------------------------------------


@dataclass
class Quantity:
    name: str
    value: float
    budget: Optional[float] = None
    exact: Optional[str] = None
    passed: bool = True
    note: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {k: v for k, v in vars(self).items() if v is not None and v != ""}


def quantity(name: str, value, budget=None, passed=None, note: str = "") -> Quantity:
    exact = f"{value.numerator}/{value.denominator}" if isinstance(value, Fraction) else None
    bval = float(budget) if budget is not None else None
    if passed is None:
        passed = True if budget is None else float(value) <= bval + 1e-9
    return Quantity(name, float(value), bval, exact, bool(passed), note)


CSV_FIELDS = ("name", "value", "budget", "exact", "passed", "note")


def quantities_to_csv(rows: Iterable[Quantity]) -> str:
    buf = io.StringIO()
    buf.write("schema=1\n")
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    w.writeheader()
    for q in rows:
        w.writerow({k: ("" if getattr(q, k) is None else getattr(q, k)) for k in CSV_FIELDS})
    return buf.getvalue()


def quantities_to_json(rows: Iterable[Quantity], **extra: Any) -> str:
    return json.dumps({**extra, "quantities": [q.to_dict() for q in rows]}, indent=2, sort_keys=True)
