"""Brute-force ground truth for MIS and matching questions on small graphs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import networkx as nx

from .errors import NotDisjoint, OutOfRange, TooLarge
from .model import Graph, Matching, canonical_edge

EXHAUSTIVE_LIMIT = 24


@dataclass(frozen=True)
class MatchingScore:
    valid_edges: int
    total_pairs: int


def _masks(graph: Graph) -> list[int]:
    masks = [0] * graph.n
    for u, v in graph.edges:
        masks[u] |= 1 << v
        masks[v] |= 1 << u
    return masks


def is_independent(graph: Graph, s: Iterable[int]) -> bool:
    chosen = set(s)
    return not any(u in chosen and v in chosen for u, v in graph.edges)


def is_mis(graph: Graph, s: Iterable[int]) -> bool:
    chosen = set(s)
    for v in chosen:
        if not 0 <= v < graph.n:
            raise OutOfRange(f"vertex {v} outside [0, {graph.n})")
    if not is_independent(graph, chosen):
        return False
    adj = graph.adjacency
    return all(v in chosen or any(w in chosen for w in adj[v]) for v in range(graph.n))


def enumerate_all_mis(graph: Graph) -> list[frozenset[int]]:
    """Every maximal independent set, sorted by (size, sorted members)."""
    n = graph.n
    if n > EXHAUSTIVE_LIMIT:
        raise TooLarge(f"exhaustive MIS enumeration is capped at n={EXHAUSTIVE_LIMIT}, got {n}")
    nbr = _masks(graph)
    full = (1 << n) - 1
    found: list[int] = []

    # Branch on the lowest undecided vertex; `blocked` holds vertices adjacent to the set.
    def extend(v: int, chosen: int, blocked: int) -> None:
        if v == n:
            if (chosen | blocked) == full:
                found.append(chosen)
            return
        bit = 1 << v
        if not blocked & bit:
            extend(v + 1, chosen | bit, blocked | nbr[v])
        # Excluding v is only sound if v can still be dominated later or already is.
        if blocked & bit or nbr[v] & ~blocked & ~((1 << (v + 1)) - 1):
            extend(v + 1, chosen, blocked)

    extend(0, 0, 0)
    sets = [frozenset(i for i in range(n) if m >> i & 1) for m in found]
    return sorted(sets, key=lambda s: (len(s), sorted(s)))


def max_matching_size(graph: Graph) -> int:
    """Maximum matching size; bitmask recursion up to the exhaustive cap, blossom beyond."""
    if graph.n > EXHAUSTIVE_LIMIT:
        return max_matching_size_blossom(graph)
    nbr = tuple(_masks(graph))
    return _mm(nbr, (1 << graph.n) - 1)


@lru_cache(maxsize=1 << 16)
def _mm(nbr: tuple[int, ...], alive: int) -> int:
    while alive:
        v = (alive & -alive).bit_length() - 1
        cand = nbr[v] & alive
        if cand:
            break
        alive &= ~(1 << v)
    else:
        return 0
    rest = alive & ~(1 << v)
    best = _mm(nbr, rest)
    while cand:
        w = (cand & -cand).bit_length() - 1
        cand &= cand - 1
        best = max(best, 1 + _mm(nbr, rest & ~(1 << w)))
    return best


def max_matching_size_blossom(graph: Graph) -> int:
    g = nx.Graph()
    g.add_nodes_from(range(graph.n))
    g.add_edges_from(graph.edges)
    return len(nx.max_weight_matching(g, maxcardinality=True))


def bipartite_matching_size(graph: Graph, left: Iterable[int]) -> int:
    """Kuhn's augmenting paths; every edge must cross between ``left`` and its complement."""
    left_set = set(left)
    adj = graph.adjacency
    match_of: dict[int, int] = {}

    def augment(u: int, seen: set[int]) -> bool:
        for w in adj[u]:
            if w in left_set:
                raise ValueError(f"edge ({u}, {w}) does not cross the bipartition")
            if w in seen:
                continue
            seen.add(w)
            if w not in match_of or augment(match_of[w], seen):
                match_of[w] = u
                return True
        return False

    return sum(1 for u in sorted(left_set) if augment(u, set()))


def matching_score(graph: Graph, out: Matching | Iterable[tuple[int, int]]) -> MatchingScore:
    pairs = out.pairs if isinstance(out, Matching) else tuple(out)
    used: set[int] = set()
    for u, v in pairs:
        if u == v or u in used or v in used:
            raise NotDisjoint(f"pair ({u}, {v}) is not disjoint from the others")
        used.update((u, v))
    valid = sum(1 for u, v in pairs if canonical_edge(u, v) in graph.edge_set)
    return MatchingScore(valid, len(pairs))


def decode_dropped_edges(k: int, s: Iterable[int]) -> frozenset[tuple[int, int]]:
    """Pairs of the fixed perfect matching on ``2k`` vertices with both endpoints in ``s``."""
    chosen = set(s)
    return frozenset((2 * i, 2 * i + 1) for i in range(k) if 2 * i in chosen and 2 * i + 1 in chosen)
