"""Recursive hard input distributions for MIS and approximate matching.

A level-``r`` instance consists of principal blocks, each carrying an
independent level-``r-1`` instance, and fooling blocks whose vertices only
touch principal vertices through fooling stars: for a principal vertex ``u``
and a fooling block ``F`` a level-``r-1`` instance is drawn on ``F + {u}``
with ``u`` at a uniform position, and only the edges at ``u`` are kept.  The
MIS variant has two such halves joined by a complete biclique between their
fooling vertices; the matching variant has a single half.  Finally every
label is relabelled by a public permutation.

Every random choice goes through a :class:`Chooser`, so the same code path
serves Monte Carlo sampling (:class:`RandomChooser`) and exact enumeration of
component laws (:func:`enumerate_law`).

Pre-permutation labels of a half start with its principal blocks followed by
its fooling blocks; the second half of the MIS variant is offset by ``n_hat``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Any, Callable, Hashable, Optional, Sequence

import numpy as np

from .errors import ConfigError, Overflow, TooLarge
from .model import Edge, Graph, canonical_edge
from .oracles import is_independent

INT64_MAX = 2**63 - 1
MATERIALIZE_LIMIT = 1 << 20
SIGMA_MODES = ("full", "blocks", "identity")
VARIANTS = ("mis", "apx")


# --- parameters --------------------------------------------------------------


@dataclass(frozen=True)
class Level:
    f_hat: int
    p_hat: int
    n_hat: int
    f: int
    p: int
    n: int


@dataclass(frozen=True)
class Params:
    k: int
    r: int
    variant: str
    mode: str
    levels: tuple[Level, ...]
    toy_f: tuple[int, ...] = ()
    toy_p: tuple[int, ...] = ()

    def n(self, t: Optional[int] = None) -> int:
        return self.levels[self.r if t is None else t].n

    def level(self, t: int) -> Level:
        if not 1 <= t <= self.r:
            raise ValueError(f"level {t} outside [1, {self.r}]")
        return self.levels[t]

    @property
    def halves(self) -> int:
        return 2 if self.variant == "mis" else 1

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "r": self.r,
            "variant": self.variant,
            "mode": self.mode,
            "toy_f": list(self.toy_f),
            "toy_p": list(self.toy_p),
            "levels": [vars(lv) for lv in self.levels],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Params":
        toy = (tuple(d["toy_f"]), tuple(d["toy_p"])) if d.get("mode") == "toy" else None
        return make_params(d["k"], d["r"], toy=toy, variant=d["variant"])


def _per_level(values: int | Sequence[int], r: int, what: str) -> tuple[int, ...]:
    vals = (values,) if isinstance(values, int) else tuple(values)
    if len(vals) == 1:
        vals = vals * r
    if len(vals) != r:
        raise ConfigError(f"{what} needs 1 or {r} values, got {len(vals)}")
    if any(v < 1 for v in vals):
        raise ConfigError(f"{what} overrides must be positive, got {vals}")
    return tuple(int(v) for v in vals)


def make_params(
    k: int,
    r: int,
    toy: Optional[tuple[int | Sequence[int], int | Sequence[int]]] = None,
    variant: str = "mis",
) -> Params:
    """Parameter schedule.  ``toy=(f_hat, p_hat)`` overrides the fooling/principal counts."""
    if k < 1 or r < 0:
        raise ConfigError(f"need k >= 1 and r >= 0, got k={k}, r={r}")
    if variant not in VARIANTS:
        raise ConfigError(f"variant must be one of {VARIANTS}, got {variant!r}")
    toy_f = toy_p = ()
    if toy is not None and r > 0:
        toy_f = _per_level(toy[0], r, "toy f_hat")
        toy_p = _per_level(toy[1], r, "toy p_hat")
    mode = "toy" if toy is not None else "full-scale"
    mult = 2 if variant == "mis" else 1
    levels = [Level(0, 0, 2 * k, 0, 0, 2 * k)]
    for t in range(1, r + 1):
        prev = levels[-1].n
        if mode == "toy":
            f_hat, p_hat = toy_f[t - 1], toy_p[t - 1]
        else:
            f_hat = k**6 * prev**3
            p_hat = k**6 * prev**3 * f_hat
        n_hat = (prev - 1) * f_hat + prev * p_hat
        lv = Level(f_hat, p_hat, n_hat, mult * f_hat, mult * p_hat, mult * n_hat)
        if max(lv.p, lv.n) > INT64_MAX:
            raise Overflow(
                f"level {t} counts exceed 64-bit integers (p_hat={p_hat}, n={lv.n}); use toy mode"
            )
        levels.append(lv)
    params = Params(k, r, variant, mode, tuple(levels), toy_f, toy_p)
    if mode == "full-scale" and k >= 2:
        # n_r <= k^(20^(r+1)), compared in the log domain
        if math.log2(params.n()) > 20 ** (r + 1) * math.log2(k) + 1e-9:
            raise AssertionError(f"size bound violated: n_{r} = {params.n()}")
    return params


def matching_size_bound(params: Params) -> Fraction:
    """Lower bound n_r/(2k) * (1 - sum_t f_t/p_t) on the maximum matching size."""
    ratio_sum = sum((Fraction(params.levels[t].f, params.levels[t].p) for t in range(1, params.r + 1)), Fraction(0))
    if params.mode == "full-scale" and params.r > 0:
        assert ratio_sum <= Fraction(1, 2), ratio_sum
    return Fraction(params.n(), 2 * params.k) * (1 - ratio_sum)


# --- randomness sources ------------------------------------------------------


class Chooser:
    def uniform(self, n: int) -> int:
        raise NotImplementedError

    def bit(self) -> int:
        return self.uniform(2)

    def permutation(self, n: int) -> tuple[int, ...]:
        items = list(range(n))
        for i in range(n - 1):
            j = i + self.uniform(n - i)
            items[i], items[j] = items[j], items[i]
        return tuple(items)


class RandomChooser(Chooser):
    def __init__(self, rng: np.random.Generator):
        self.rng = rng

    def uniform(self, n: int) -> int:
        return int(self.rng.integers(n)) if n > 1 else 0

    def permutation(self, n: int) -> tuple[int, ...]:
        return tuple(int(x) for x in self.rng.permutation(n))


class _ReplayChooser(Chooser):
    def __init__(self, prefix: list[tuple[int, int]]):
        self.prefix = prefix
        self.path: list[tuple[int, int]] = []

    def uniform(self, n: int) -> int:
        if n <= 1:
            return 0
        pos = len(self.path)
        c = self.prefix[pos][0] if pos < len(self.prefix) else 0
        self.path.append((c, n))
        return c


def enumerate_law(fn: Callable[[Chooser], Hashable], max_paths: int = 1 << 22) -> dict[Hashable, Fraction]:
    """Exact law of ``fn(chooser)`` by depth-first replay of every choice sequence."""
    law: dict[Hashable, Fraction] = defaultdict(Fraction)
    prefix: list[tuple[int, int]] = []
    paths = 0
    while True:
        ch = _ReplayChooser(prefix)
        result = fn(ch)
        law[result] += Fraction(1, math.prod(a for _, a in ch.path))
        paths += 1
        if paths > max_paths:
            raise TooLarge(f"more than {max_paths} choice paths")
        path = ch.path
        while path and path[-1][0] + 1 == path[-1][1]:
            path.pop()
        if not path:
            return dict(law)
        path[-1] = (path[-1][0] + 1, path[-1][1])
        prefix = path


# --- layout ------------------------------------------------------------------


@dataclass(frozen=True)
class PreLayout:
    """Block structure on pre-permutation labels."""

    principal: tuple[tuple[int, ...], ...]
    fooling: tuple[tuple[int, ...], ...]
    principal_side: tuple[int, ...]
    fooling_side: tuple[int, ...]
    n: int

    def fooling_of_side(self, side: int) -> tuple[int, ...]:
        return tuple(j for j, s in enumerate(self.fooling_side) if s == side)


@lru_cache(maxsize=256)
def pre_layout(params: Params, level: int, halves: Optional[int] = None) -> PreLayout:
    lv = params.level(level)
    m = params.n(level - 1)
    halves = params.halves if halves is None else halves
    principal, fooling, pside, fside = [], [], [], []
    for h in range(halves):
        off = h * lv.n_hat
        for b in range(lv.p_hat):
            principal.append(tuple(range(off + b * m, off + (b + 1) * m)))
            pside.append(h)
        base = off + lv.p_hat * m
        for j in range(lv.f_hat):
            fooling.append(tuple(range(base + j * (m - 1), base + (j + 1) * (m - 1))))
            fside.append(h)
    return PreLayout(tuple(principal), tuple(fooling), tuple(pside), tuple(fside), halves * lv.n_hat)


SIDE_NAMES = ("U", "V")


@dataclass(frozen=True)
class BlockLayout:
    """Public-label block structure of an instance.

    ``principal[i][a]`` is the public label of position ``a`` of principal block
    ``i``; ``fooling[j][x]`` likewise.  ``sigma[x]`` maps pre-permutation label
    ``x`` to its public label.
    """

    level: int
    principal: tuple[tuple[int, ...], ...]
    fooling: tuple[tuple[int, ...], ...]
    principal_side: tuple[int, ...]
    fooling_side: tuple[int, ...]
    sigma: tuple[int, ...]

    @cached_property
    def principal_vertices(self) -> tuple[int, ...]:
        return tuple(v for blk in self.principal for v in blk)

    @cached_property
    def fooling_vertices(self) -> tuple[int, ...]:
        return tuple(v for blk in self.fooling for v in blk)

    @cached_property
    def role(self) -> dict[int, tuple[str, int, int]]:
        """Public label -> ("P" or "F", block index, position)."""
        out = {}
        for i, blk in enumerate(self.principal):
            for a, v in enumerate(blk):
                out[v] = ("P", i, a)
        for j, blk in enumerate(self.fooling):
            for x, v in enumerate(blk):
                out[v] = ("F", j, x)
        return out

    def side_vertices(self, side: int) -> frozenset[int]:
        return frozenset(v for i, blk in enumerate(self.principal) if self.principal_side[i] == side for v in blk)

    def to_dict(self) -> dict[str, Any]:
        return {
            "level": self.level,
            "principal": [list(b) for b in self.principal],
            "fooling": [list(b) for b in self.fooling],
            "sigma": list(self.sigma),
            "side": [SIDE_NAMES[s] for s in self.principal_side + self.fooling_side],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "BlockLayout":
        sides = [SIDE_NAMES.index(s) for s in d["side"]]
        np_ = len(d["principal"])
        return cls(
            d["level"],
            tuple(tuple(b) for b in d["principal"]),
            tuple(tuple(b) for b in d["fooling"]),
            tuple(sides[:np_]),
            tuple(sides[np_:]),
            tuple(d["sigma"]),
        )


def layout_for(params: Params, level: int, sigma: Sequence[int], halves: Optional[int] = None) -> BlockLayout:
    pre = pre_layout(params, level, halves)
    return BlockLayout(
        level,
        tuple(tuple(sigma[x] for x in blk) for blk in pre.principal),
        tuple(tuple(sigma[x] for x in blk) for blk in pre.fooling),
        pre.principal_side,
        pre.fooling_side,
        tuple(sigma),
    )


def sigma_from_permutation(perm: Sequence[int], pre: PreLayout, mode: str) -> tuple[int, ...]:
    """Turn a uniform permutation into a sigma of the requested mode."""
    if mode == "identity":
        return tuple(range(pre.n))
    if mode == "full":
        return tuple(perm)
    if mode != "blocks":
        raise ConfigError(f"sigma mode must be one of {SIGMA_MODES}, got {mode!r}")
    sigma = [0] * pre.n
    for blk in pre.principal + pre.fooling:
        labels = sorted(perm[x] for x in blk)
        for x, lab in zip(blk, labels):
            sigma[x] = lab
    return tuple(sigma)


def count_sigma_atoms(pre: PreLayout, mode: str) -> int:
    if mode == "identity":
        return 1
    total = math.factorial(pre.n)
    if mode == "blocks":
        for blk in pre.principal + pre.fooling:
            total //= math.factorial(len(blk))
    return total


# --- components --------------------------------------------------------------


def base_edges(ch: Chooser, k: int, variant: str) -> tuple[Edge, ...]:
    """Level-0 instance on ``2k`` vertices."""
    if variant == "mis":
        return tuple((2 * i, 2 * i + 1) for i in range(k) if ch.bit())
    u = ch.uniform(k)
    v = k + ch.uniform(k)
    return ((u, v),)


def level_edges(ch: Chooser, params: Params, level: int) -> tuple[Edge, ...]:
    """Edge set of a full level-``level`` instance (inner permutations are uniform)."""
    if level == 0:
        return base_edges(ch, params.k, params.variant)
    _check_size(params, level)
    pre = pre_layout(params, level)
    blocks, stars = draw_components(ch, params, level)
    sigma = ch.permutation(pre.n)
    return assemble_edges(params, level, sigma, blocks, stars)


def fooling_star(ch: Chooser, params: Params, level: int) -> tuple[int, ...]:
    """Positions of a fooling block adjacent to one principal vertex.

    A level-``level-1`` instance is drawn on the block plus the principal vertex,
    which sits at a uniform position; the block fills the other positions in order.
    """
    m = params.n(level - 1)
    q = ch.uniform(m)
    edges = level_edges(ch, params, level - 1)
    hits = []
    for a, b in edges:
        if q in (a, b):
            other = b if a == q else a
            hits.append(other if other < q else other - 1)
    return tuple(sorted(hits))


def draw_components(ch: Chooser, params: Params, level: int, halves: Optional[int] = None):
    """Principal sub-instances and per-vertex fooling neighborhoods, in a fixed order.

    Returns ``(blocks, stars)`` where ``blocks[i]`` is a block-relative edge tuple
    and ``stars[i][a]`` is a sorted tuple of ``(fooling block, position)`` pairs.
    """
    pre = pre_layout(params, level, halves)
    m = params.n(level - 1)
    blocks = tuple(level_edges(ch, params, level - 1) for _ in pre.principal)
    stars = []
    for i in range(len(pre.principal)):
        same_side = pre.fooling_of_side(pre.principal_side[i])
        stars.append(
            tuple(
                tuple(sorted((j, x) for j in same_side for x in fooling_star(ch, params, level)))
                for _ in range(m)
            )
        )
    return blocks, tuple(stars)


def assemble_edges(
    params: Params,
    level: int,
    sigma: Sequence[int],
    blocks: Sequence[Sequence[Edge]],
    stars: Sequence[Sequence[Sequence[tuple[int, int]]]],
    halves: Optional[int] = None,
) -> tuple[Edge, ...]:
    pre = pre_layout(params, level, halves)
    edges = []
    for i, blk in enumerate(pre.principal):
        for a, b in blocks[i]:
            edges.append(canonical_edge(sigma[blk[a]], sigma[blk[b]]))
        for a, nbrs in enumerate(stars[i]):
            for j, x in nbrs:
                edges.append(canonical_edge(sigma[blk[a]], sigma[pre.fooling[j][x]]))
    if (params.halves if halves is None else halves) == 2:
        left = [sigma[x] for j in pre.fooling_of_side(0) for x in pre.fooling[j]]
        right = [sigma[x] for j in pre.fooling_of_side(1) for x in pre.fooling[j]]
        edges.extend(canonical_edge(u, v) for u in left for v in right)
    return tuple(sorted(edges))


def _check_size(params: Params, level: int) -> None:
    n = params.n(level)
    if n > MATERIALIZE_LIMIT:
        lv = params.levels[level]
        raise Overflow(
            f"level {level} instance has n={n} vertices (p_hat={lv.p_hat}, f_hat={lv.f_hat}), "
            f"beyond the materialization cap {MATERIALIZE_LIMIT}; use toy mode"
        )


# --- instances ---------------------------------------------------------------


@dataclass(frozen=True)
class Instance:
    graph: Graph
    layout: BlockLayout
    params: Params
    kind: str
    blocks: tuple = ()
    stars: tuple = ()

    def principal_edges(self, i: int) -> tuple[Edge, ...]:
        """B_i in public labels."""
        blk = self.layout.principal[i]
        return tuple(sorted(canonical_edge(blk[a], blk[b]) for a, b in self.blocks[i]))

    def fooling_edges(self, i: int) -> tuple[Edge, ...]:
        """T_i in public labels."""
        blk = self.layout.principal[i]
        return tuple(
            sorted(
                canonical_edge(blk[a], self.layout.fooling[j][x])
                for a, nbrs in enumerate(self.stars[i])
                for j, x in nbrs
            )
        )

    def to_dict(self) -> dict[str, Any]:
        d = self.graph.to_dict()
        d["layout"] = self.layout.to_dict()
        d["kind"] = self.kind
        d["params"] = self.params.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "Instance":
        params = Params.from_dict(d["params"])
        return cls(Graph.from_dict(d), BlockLayout.from_dict(d["layout"]), params, d["kind"])


def _base_instance(k: int, seed: int, variant: str, kind: str) -> Instance:
    if k < 1:
        raise ConfigError(f"k must be positive, got {k}")
    ch = RandomChooser(np.random.default_rng(seed))
    edges = base_edges(ch, k, variant)
    params = make_params(k, 0, variant=variant)
    layout = BlockLayout(0, (), (), (), (), tuple(range(2 * k)))
    return Instance(Graph(2 * k, edges), layout, params, kind)


def sample_mis_hard0(k: int, seed: int = 0) -> Instance:
    return _base_instance(k, seed, "mis", "misHard0")


def sample_apx_hard0(k: int, seed: int = 0) -> Instance:
    return _base_instance(k, seed, "apx", "apxHard0")


def _recursive_instance(params: Params, level: int, seed: int, sigma_mode: str, halves: int, kind: str) -> Instance:
    if level < 1 or level > params.r:
        raise ConfigError(f"level must be in [1, {params.r}], got {level}")
    if sigma_mode not in SIGMA_MODES:
        raise ConfigError(f"sigma mode must be one of {SIGMA_MODES}, got {sigma_mode!r}")
    lv = params.levels[level]
    if halves * lv.n_hat > MATERIALIZE_LIMIT:
        _check_size(params, level)
    rng = np.random.default_rng(seed)
    ch = RandomChooser(rng)
    blocks, stars = draw_components(ch, params, level, halves)
    pre = pre_layout(params, level, halves)
    sigma = sigma_from_permutation(ch.permutation(pre.n), pre, sigma_mode)
    edges = assemble_edges(params, level, sigma, blocks, stars, halves)
    layout = layout_for(params, level, sigma, halves)
    return Instance(Graph(pre.n, edges), layout, params, kind, blocks, stars)


def sample_mis_half(params: Params, level: Optional[int] = None, seed: int = 0, sigma_mode: str = "identity") -> Instance:
    if params.variant != "mis":
        raise ConfigError("half instances belong to the MIS variant")
    level = params.r if level is None else level
    return _recursive_instance(params, level, seed, sigma_mode, 1, "misHalf")


def sample_mis_hard(params: Params, seed: int = 0, sigma_mode: str = "full") -> Instance:
    if params.variant != "mis":
        raise ConfigError("sample_mis_hard needs MIS-variant params")
    if params.r == 0:
        return sample_mis_hard0(params.k, seed)
    return _recursive_instance(params, params.r, seed, sigma_mode, 2, "misHard")


def sample_apx_hard(params: Params, seed: int = 0, sigma_mode: str = "full") -> Instance:
    if params.variant != "apx":
        raise ConfigError("sample_apx_hard needs apx-variant params")
    if params.r == 0:
        return sample_apx_hard0(params.k, seed)
    return _recursive_instance(params, params.r, seed, sigma_mode, 1, "apxHard")


def sample(params: Params, seed: int = 0, sigma_mode: str = "full") -> Instance:
    return (sample_mis_hard if params.variant == "mis" else sample_apx_hard)(params, seed, sigma_mode)


# --- structural verifiers ----------------------------------------------------


def is_mis_within(graph: Graph, vertices: frozenset[int], s: frozenset[int]) -> bool:
    """Whether ``s`` restricted to ``vertices`` is an MIS of the induced subgraph."""
    inside = s & vertices
    adj = graph.adjacency
    if not is_independent(graph, inside):
        return False
    return all(v in inside or any(w in inside for w in adj[v]) for v in vertices)


def verify_solve_half(instance: Instance, s) -> str:
    s = frozenset(s)
    u_ok = is_mis_within(instance.graph, instance.layout.side_vertices(0), s)
    v_ok = is_mis_within(instance.graph, instance.layout.side_vertices(1), s)
    return {(True, True): "both", (True, False): "U_holds", (False, True): "V_holds"}.get((u_ok, v_ok), "neither")


def level_law(params: Params, level: int) -> dict[tuple[Edge, ...], Fraction]:
    """Exact law of a level-``level`` instance's edge set."""
    return enumerate_law(lambda ch: level_edges(ch, params, level))


def star_law(params: Params, level: int) -> dict[tuple[int, ...], Fraction]:
    return enumerate_law(lambda ch: fooling_star(ch, params, level))
