"""Concrete blackboard protocols.

Protocols are selected by a spec string ``NAME[:ARGS]`` where ``ARGS`` is a
comma separated list of positional values or ``key=value`` pairs:

``silent[:R]``
    ``R`` rounds (default 1) of empty messages.
``zero``
    0 rounds; the referee outputs every vertex (MIS) or the cross pairs
    ``(i, n/2 + i)`` (matching).
``full-broadcast[:R]``
    every vertex posts its adjacency row in round 1; the referee solves exactly.
``greedy-matching``
    every vertex posts its smallest neighbor; the referee matches greedily.
``luby[:PHASES]``
    Luby-style MIS with public random priorities, 2 bits per round.
``xor:VARIANT[,target=I][,rounds=R]``
    parity protocols that read block roles from an attached layout.
``bipartite:INNER``
    random-cut wrapper around another protocol.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import networkx as nx

from .distributions import BlockLayout, base_edges, enumerate_law
from .errors import ConfigError, LayoutRequired, TooLarge
from .model import (
    MIS,
    Board,
    Coins,
    Graph,
    Matching,
    Protocol,
    VertexView,
    canonical_edge,
)
from .oracles import is_mis

KINDS = ("mis", "apx")
XOR_VARIANTS = ("directed_round1", "fooling_xor", "symmetric_xor")


# --- helpers -----------------------------------------------------------------


def _board_n(board: Board, n: Optional[int]) -> int:
    if n is not None:
        return n
    if board:
        return len(board[0])
    raise ConfigError("a 0-round referee needs the vertex count bound at build time")


def greedy_mis(graph: Graph) -> frozenset[int]:
    chosen: set[int] = set()
    blocked: set[int] = set()
    for v in range(graph.n):
        if v not in blocked:
            chosen.add(v)
            blocked.update(graph.adjacency[v])
    return frozenset(chosen)


def max_matching_pairs(graph: Graph) -> tuple[tuple[int, int], ...]:
    g = nx.Graph()
    g.add_nodes_from(range(graph.n))
    g.add_edges_from(graph.edges)
    return tuple(sorted(canonical_edge(u, v) for u, v in nx.max_weight_matching(g, maxcardinality=True)))


def _fallback_output(n: int, kind: str):
    if kind == "mis":
        return MIS(frozenset(range(n)))
    half = n // 2
    return Matching(tuple((i, half + i) for i in range(half)))


def _bits(value: int, width: int) -> str:
    return format(value, f"0{width}b") if width else ""


# --- baselines ---------------------------------------------------------------


def silent(rounds: int = 1, n: Optional[int] = None, kind: str = "mis") -> Protocol:
    def message(view: VertexView, t: int, board: Board, coins: Coins) -> str:
        return ""

    def referee(board: Board, coins: Coins):
        return _fallback_output(_board_n(board, n), kind)

    return Protocol(f"silent:{rounds}", rounds, 0, message, referee)


def zero_round(n: int, kind: str = "mis") -> Protocol:
    """0-round protocol whose referee plays the optimal base-case guess."""

    def referee(board: Board, coins: Coins):
        return _fallback_output(n, kind)

    return Protocol("zero", 0, 0, lambda *a: "", referee)


def full_broadcast(n: int, rounds: int = 1, kind: str = "mis") -> Protocol:
    def message(view: VertexView, t: int, board: Board, coins: Coins) -> str:
        if t > 1:
            return ""
        row = ["0"] * view.n
        for w in view.neighbors:
            row[w] = "1"
        return "".join(row)

    def referee(board: Board, coins: Coins):
        if not board:
            return _fallback_output(n, kind)
        rows = board[0]
        graph = Graph(len(rows), tuple((u, w) for u, row in enumerate(rows) for w, b in enumerate(row) if b == "1"))
        if kind == "mis":
            return MIS(greedy_mis(graph))
        return Matching(max_matching_pairs(graph))

    return Protocol(f"full-broadcast:{rounds}", rounds, n, message, referee)


def greedy_matching(n: int) -> Protocol:
    width = max(1, math.ceil(math.log2(n + 1)))

    def message(view: VertexView, t: int, board: Board, coins: Coins) -> str:
        return _bits(view.neighbors[0] + 1 if view.neighbors else 0, width)

    def referee(board: Board, coins: Coins):
        used: set[int] = set()
        pairs = []
        for v, msg in enumerate(board[0]):
            w = int(msg, 2) - 1
            if w >= 0 and v not in used and w not in used:
                pairs.append((v, w))
                used.update((v, w))
        return Matching(tuple(pairs))

    return Protocol("greedy-matching", 1, width, message, referee)


# --- Luby --------------------------------------------------------------------

JOIN, RETIRE, WAIT = "10", "01", "00"


def _status(board: Board, v: int) -> tuple[str, int]:
    """("joined" | "retired" | "active", round of the deciding message)."""
    for t, rnd in enumerate(board, start=1):
        m = rnd[v]
        if m == JOIN:
            return "joined", t
        if m == RETIRE:
            return "retired", t
    return "active", 0


def luby_blackboard(max_phases: int) -> Protocol:
    """One phase per round.

    An active vertex posts ``10`` when it joins, ``01`` when a neighbor joined in
    the previous round, ``00`` otherwise; finished vertices post nothing.  A
    vertex joins when its public priority is below that of every neighbor not
    yet known to be finished.
    """
    if max_phases < 1:
        raise ConfigError("max_phases must be at least 1")

    def message(view: VertexView, t: int, board: Board, coins: Coins) -> str:
        v = view.self_id
        if _status(board, v)[0] != "active":
            return ""
        if board and any(board[-1][w] == JOIN for w in view.neighbors):
            return RETIRE
        prio = coins.public_permutation(t, view.n, "luby")
        mine = prio[v]
        for w in view.neighbors:
            if _status(board, w)[0] == "active" and prio[w] < mine:
                return WAIT
        return JOIN

    def referee(board: Board, coins: Coins):
        if not board:
            raise ConfigError("luby needs at least one round")
        n = len(board[0])
        joined = frozenset(v for v in range(n) if _status(board, v)[0] == "joined")
        flags = set()
        if any(_status(board, v)[0] == "active" for v in range(n)):
            flags.add("phase_budget_exceeded")
        return MIS(joined, frozenset(flags))

    return Protocol(f"luby:{max_phases}", max_phases, 2, message, referee)


def luby_quiescence(board: Board) -> Optional[int]:
    """First round after which every vertex has joined or retired; None if never."""
    if not board:
        return None
    worst = 0
    for v in range(len(board[0])):
        state, t = _status(board, v)
        if state == "active":
            return None
        worst = max(worst, t)
    return worst


# --- parity protocols --------------------------------------------------------


def _pair_index(u: int, v: int, n: int) -> int:
    u, v = canonical_edge(u, v)
    return u * n - u * (u + 1) // 2 + (v - u - 1)


def xor_protocol(
    variant: str,
    layout: Optional[BlockLayout],
    n: int,
    target: int = 0,
    rounds: int = 1,
    kind: str = "mis",
) -> Protocol:
    """Parity protocols; later rounds post the parity of neighbors' previous messages."""
    if variant not in XOR_VARIANTS:
        raise ConfigError(f"unknown xor variant {variant!r}; choose from {XOR_VARIANTS}")
    if layout is None:
        raise LayoutRequired(f"xor:{variant} reads block roles from an instance layout")
    role = layout.role
    if variant == "directed_round1" and not 0 <= target < len(layout.principal):
        raise ConfigError(f"target block {target} outside [0, {len(layout.principal)})")
    target_set = frozenset(layout.principal[target]) if layout.principal else frozenset()

    def first_round(view: VertexView, coins: Coins) -> int:
        v = view.self_id
        is_principal = role.get(v, ("F",))[0] == "P"
        if variant == "directed_round1":
            orient = coins.public_bits(1, view.n * (view.n - 1) // 2, "orient")

            def out_of(a: int, b: int) -> bool:
                # orientation bit 1 points from the smaller label to the larger
                bit = orient[_pair_index(a, b, view.n)]
                return (a < b) == bool(bit)

            if is_principal:
                return sum(out_of(v, w) for w in view.neighbors) & 1
            return sum(1 for w in view.neighbors if w in target_set and out_of(w, v)) & 1
        if variant == "fooling_xor":
            if is_principal:
                return 0
            return sum(1 for w in view.neighbors if role.get(w, ("F",))[0] == "P") & 1
        # symmetric_xor
        want = "F" if is_principal else "P"
        return sum(1 for w in view.neighbors if role.get(w, ("X",))[0] == want) & 1

    def message(view: VertexView, t: int, board: Board, coins: Coins) -> str:
        if t == 1:
            return str(first_round(view, coins))
        if variant == "symmetric_xor":
            return str(first_round(view, coins) ^ (sum(board[-1][w] == "1" for w in view.neighbors) & 1))
        return str(sum(board[-1][w] == "1" for w in view.neighbors) & 1)

    def referee(board: Board, coins: Coins):
        if kind == "mis":
            if not board:
                return MIS(frozenset(range(n)))
            return MIS(frozenset(v for v, m in enumerate(board[-1]) if m == "1"))
        pairs = []
        for blk in layout.principal:
            pairs.extend((blk[a], blk[a + 1]) for a in range(0, len(blk) - 1, 2))
        return Matching(tuple(pairs))

    name = f"xor:{variant},target={target},rounds={rounds}"
    return Protocol(name, rounds, 1, message, referee, {"target": target})


# --- bipartite reduction -----------------------------------------------------

CUT_KEY = "bipartite-cut"


def cut_bits(seed: int, n: int) -> tuple[int, ...]:
    return Coins(seed).public_bits(0, n, CUT_KEY)


def cut_subgraph(graph: Graph, z: tuple[int, ...]) -> Graph:
    return Graph(graph.n, tuple(e for e in graph.edges if z[e[0]] != z[e[1]]))


def bipartite_wrapper(inner: Protocol) -> Protocol:
    """Run ``inner`` on the subgraph of edges crossing a public random cut."""

    def message(view: VertexView, t: int, board: Board, coins: Coins) -> str:
        z = coins.public_bits(0, view.n, CUT_KEY)
        side = z[view.self_id]
        kept = tuple(w for w in view.neighbors if z[w] != side)
        return inner.message_fn(VertexView(view.self_id, view.n, kept), t, board, coins)

    return Protocol(f"bipartite:{inner.name}", inner.rounds, inner.bandwidth, message, inner.referee_fn)


# --- optimal zero-round referees ---------------------------------------------


def best_zero_round_referee_mis(k: int) -> tuple[MIS, Fraction]:
    """Vertex set maximizing the chance of being an MIS of a level-0 MIS instance."""
    if not 1 <= k <= 4:
        raise TooLarge(f"exhaustive referee search supports 1 <= k <= 4, got {k}")
    n = 2 * k
    law = enumerate_law(lambda ch: base_edges(ch, k, "mis"))
    graphs = [(Graph(n, edges), p) for edges, p in law.items()]
    best, best_p = None, Fraction(-1)
    for mask in range((1 << n) - 1, -1, -1):
        s = frozenset(v for v in range(n) if mask >> v & 1)
        p = sum((q for g, q in graphs if is_mis(g, s)), Fraction(0))
        if p > best_p:
            best, best_p = s, p
    return MIS(best), best_p


def all_pair_families(n: int):
    """Every set of pairwise disjoint pairs on ``range(n)``."""

    def rec(free: tuple[int, ...]):
        if not free:
            yield ()
            return
        v, rest = free[0], free[1:]
        yield from rec(rest)
        for idx, w in enumerate(rest):
            for tail in rec(rest[:idx] + rest[idx + 1 :]):
                yield ((v, w),) + tail

    yield from rec(tuple(range(n)))


def best_zero_round_referee_apx(k: int) -> tuple[Matching, Fraction]:
    """Pair family maximizing expected valid edges on a level-0 matching instance."""
    if not 1 <= k <= 6:
        raise TooLarge(f"exhaustive referee search supports 1 <= k <= 6, got {k}")
    law = enumerate_law(lambda ch: base_edges(ch, k, "apx"))
    edge_prob: dict[tuple[int, int], Fraction] = {}
    for edges, p in law.items():
        for e in edges:
            edge_prob[e] = edge_prob.get(e, Fraction(0)) + p
    best, best_v = (), Fraction(-1)
    for fam in all_pair_families(2 * k):
        v = sum((edge_prob.get(canonical_edge(a, b), Fraction(0)) for a, b in fam), Fraction(0))
        if v > best_v:
            best, best_v = fam, v
    return Matching(best), best_v


# --- spec strings ------------------------------------------------------------


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    args: tuple = ()
    options: tuple[tuple[str, str], ...] = ()

    @classmethod
    def parse(cls, text: str) -> "ProtocolSpec":
        name, _, rest = text.partition(":")
        if name == "bipartite":
            if not rest:
                raise ConfigError("bipartite needs an inner protocol, e.g. bipartite:greedy-matching")
            cls.parse(rest)
            return cls(name, (rest,))
        if name not in NAMES:
            raise ConfigError(f"unknown protocol {name!r}; known: {sorted(NAMES)}")
        args, opts = [], []
        for tok in filter(None, rest.split(",")):
            if "=" in tok:
                key, _, val = tok.partition("=")
                opts.append((key, val))
            else:
                args.append(tok)
        return cls(name, tuple(args), tuple(opts))

    def __str__(self) -> str:
        tail = list(self.args) + [f"{k}={v}" for k, v in self.options]
        return self.name + (":" + ",".join(tail) if tail else "")

    def _int_arg(self, pos: int, key: str, default: int) -> int:
        opts = dict(self.options)
        raw = opts.get(key, self.args[pos] if len(self.args) > pos else None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{self}: {key} must be an integer, got {raw!r}") from exc

    @property
    def needs_layout(self) -> bool:
        return self.name == "xor" or (self.name == "bipartite" and ProtocolSpec.parse(self.args[0]).needs_layout)

    def build(self, n: int, layout: Optional[BlockLayout] = None, kind: str = "mis", rounds: Optional[int] = None) -> Protocol:
        """Instantiate for an ``n``-vertex input; ``rounds`` overrides the default round count."""
        if kind not in KINDS:
            raise ConfigError(f"output kind must be one of {KINDS}")
        name = self.name
        if name == "silent":
            return silent(rounds if rounds is not None else self._int_arg(0, "rounds", 1), n, kind)
        if name == "zero":
            return zero_round(n, kind)
        if name == "full-broadcast":
            return full_broadcast(n, rounds if rounds is not None else self._int_arg(0, "rounds", 1), kind)
        if name == "greedy-matching":
            return greedy_matching(n)
        if name == "luby":
            default = max(1, math.ceil(8 * math.log2(max(n, 2))))
            return luby_blackboard(rounds if rounds is not None else self._int_arg(0, "phases", default))
        if name == "xor":
            if not self.args:
                raise ConfigError(f"xor needs a variant, one of {XOR_VARIANTS}")
            r = rounds if rounds is not None else self._int_arg(99, "rounds", 1)
            return xor_protocol(self.args[0], layout, n, self._int_arg(1, "target", 0), r, kind)
        if name == "bipartite":
            return bipartite_wrapper(ProtocolSpec.parse(self.args[0]).build(n, layout, kind, rounds))
        raise ConfigError(f"unknown protocol {name!r}")


NAMES = ("silent", "zero", "full-broadcast", "greedy-matching", "luby", "xor", "bipartite")


def build_protocol(text: str, n: int, layout: Optional[BlockLayout] = None, kind: str = "mis", rounds: Optional[int] = None) -> Protocol:
    return ProtocolSpec.parse(text).build(n, layout, kind, rounds)
