"""Shared-blackboard execution model with vertex-partitioned graph inputs.

Every vertex is a player that sees ``n``, its own label and its neighbor
labels.  In each synchronous round all players post a bit string of at most
``bandwidth`` bits, computed from their view and the blackboard of earlier
rounds.  After the last round a referee maps the blackboard to an output.

Randomness
----------
All coins derive from one 64-bit seed.  A stream is identified by
``(role, round, key)`` where ``role`` is ``0`` for public coins and ``v + 1``
for the private coins of vertex ``v``; the stream is
``numpy.random.default_rng(SeedSequence(seed, spawn_key=(role, round, crc32(key))))``.
Public streams are visible to every player and the referee, so two vertices
asking for the same public stream receive identical bits.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Any, Callable, Iterable, NamedTuple, Optional, Sequence, Union

import numpy as np

from .errors import BandwidthExceeded, NotDisjoint, OutOfRange

Edge = tuple[int, int]
Board = tuple[tuple[str, ...], ...]


def canonical_edge(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices ``0..n-1`` with a canonical edge list."""

    n: int
    edges: tuple[Edge, ...] = ()

    def __post_init__(self) -> None:
        if self.n < 0:
            raise OutOfRange(f"vertex count must be nonnegative, got {self.n}")
        canon = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise OutOfRange(f"edge ({u}, {v}) outside [0, {self.n})")
            canon.add(canonical_edge(u, v))
        object.__setattr__(self, "edges", tuple(sorted(canon)))

    @cached_property
    def edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        return tuple(tuple(sorted(a)) for a in adj)

    def neighbors(self, v: int) -> tuple[int, ...]:
        if not 0 <= v < self.n:
            raise OutOfRange(f"vertex {v} outside [0, {self.n})")
        return self.adjacency[v]

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edge_set

    def induced(self, vertices: Iterable[int]) -> "Graph":
        """Subgraph induced on ``vertices``, keeping the original labels."""
        keep = set(vertices)
        return Graph(self.n, tuple(e for e in self.edges if e[0] in keep and e[1] in keep))

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "edges": [list(e) for e in self.edges]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Graph":
        return cls(int(data["n"]), tuple(tuple(e) for e in data["edges"]))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Graph":
        return cls.from_dict(json.loads(text))


def complete_graph(n: int) -> Graph:
    return Graph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n)))


def random_graph(n: int, p: float, rng: np.random.Generator) -> Graph:
    """Erdos-Renyi G(n, p)."""
    mask = rng.random((n, n)) < p
    return Graph(n, tuple((u, v) for u in range(n) for v in range(u + 1, n) if mask[u, v]))


@dataclass(frozen=True)
class VertexView:
    self_id: int
    n: int
    neighbors: tuple[int, ...]


def vertex_view(graph: Graph, v: int) -> VertexView:
    return VertexView(v, graph.n, graph.neighbors(v))


# --- outputs -----------------------------------------------------------------


@dataclass(frozen=True)
class MIS:
    """Candidate independent set announced by a referee."""

    vertices: frozenset[int]
    flags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "vertices", frozenset(int(v) for v in self.vertices))
        object.__setattr__(self, "flags", frozenset(self.flags))

    def restrict(self, block: Iterable[int]) -> "MIS":
        return MIS(self.vertices & frozenset(block), self.flags)


@dataclass(frozen=True)
class Matching:
    """Pairwise vertex-disjoint pairs; pairs need not be edges of the input."""

    pairs: tuple[Edge, ...] = ()
    flags: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        seen: set[int] = set()
        canon = []
        for u, v in self.pairs:
            u, v = int(u), int(v)
            if u == v:
                raise NotDisjoint(f"pair ({u}, {u}) repeats a vertex")
            if u in seen or v in seen:
                raise NotDisjoint(f"pair ({u}, {v}) shares a vertex with another pair")
            seen.update((u, v))
            canon.append(canonical_edge(u, v))
        object.__setattr__(self, "pairs", tuple(sorted(canon)))
        object.__setattr__(self, "flags", frozenset(self.flags))

    def restrict(self, block: Iterable[int]) -> "Matching":
        keep = frozenset(block)
        return Matching(tuple(p for p in self.pairs if p[0] in keep and p[1] in keep), self.flags)


Output = Union[MIS, Matching]


def output_to_dict(out: Output) -> dict[str, Any]:
    if isinstance(out, MIS):
        return {"kind": "mis", "vertices": sorted(out.vertices), "flags": sorted(out.flags)}
    return {"kind": "matching", "pairs": [list(p) for p in out.pairs], "flags": sorted(out.flags)}


# --- randomness --------------------------------------------------------------


def _key_code(key: str) -> int:
    return zlib.crc32(key.encode())


def _stream(seed: int, role: int, t: int, key: str) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(role, int(t), _key_code(key)))
    return np.random.default_rng(ss)


@lru_cache(maxsize=8192)
def _public_bits(seed: int, t: int, key: str, size: int) -> tuple[int, ...]:
    return tuple(int(b) for b in _stream(seed, 0, t, key).integers(0, 2, size=size))


@lru_cache(maxsize=8192)
def _public_permutation(seed: int, t: int, key: str, n: int) -> tuple[int, ...]:
    return tuple(int(x) for x in _stream(seed, 0, t, key).permutation(n))


@dataclass(frozen=True)
class Coins:
    """Randomness handle given to a player (``vertex`` set) or the referee."""

    seed: int
    vertex: Optional[int] = None

    def public(self, t: int, key: str = "") -> np.random.Generator:
        return _stream(self.seed, 0, t, key)

    def private(self, t: int, key: str = "") -> np.random.Generator:
        if self.vertex is None:
            raise ValueError("the referee has no private coins in this model")
        return _stream(self.seed, self.vertex + 1, t, key)

    def public_bits(self, t: int, size: int, key: str = "") -> tuple[int, ...]:
        return _public_bits(int(self.seed), int(t), key, int(size))

    def public_permutation(self, t: int, n: int, key: str = "") -> tuple[int, ...]:
        return _public_permutation(int(self.seed), int(t), key, int(n))


# --- protocols and transcripts -----------------------------------------------

MessageFn = Callable[[VertexView, int, Board, Coins], str]
RefereeFn = Callable[[Board, Coins], Output]


@dataclass(frozen=True, eq=False)
class Protocol:
    """An ``rounds``-round protocol whose players send at most ``bandwidth`` bits."""

    name: str
    rounds: int
    bandwidth: int
    message_fn: MessageFn
    referee_fn: RefereeFn
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.rounds < 0 or self.bandwidth < 0:
            raise ValueError("rounds and bandwidth must be nonnegative")


@dataclass(frozen=True)
class Transcript:
    rounds: Board
    layout: Any = None
    violations: tuple[tuple[int, int, int], ...] = ()

    @property
    def n_rounds(self) -> int:
        return len(self.rounds)

    def round(self, t: int) -> tuple[str, ...]:
        """Messages of round ``t`` (1-based), indexed by vertex."""
        return self.rounds[t - 1]

    def prefix(self, t: int) -> Board:
        """Blackboard content at the start of round ``t``."""
        return self.rounds[: t - 1]

    @property
    def max_bits(self) -> int:
        return max((len(m) for rnd in self.rounds for m in rnd), default=0)

    def principal(self, t: int, i: int) -> tuple[str, ...]:
        if self.layout is None:
            raise ValueError("transcript has no block layout attached")
        rnd = self.round(t)
        return tuple(rnd[v] for v in self.layout.principal[i])

    def fooling(self, t: int) -> tuple[str, ...]:
        if self.layout is None:
            raise ValueError("transcript has no block layout attached")
        rnd = self.round(t)
        return tuple(rnd[v] for v in self.layout.fooling_vertices)

    def to_dict(self) -> dict[str, Any]:
        return {"rounds": [{"messages": list(r)} for r in self.rounds]}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Transcript":
        return cls(tuple(tuple(r["messages"]) for r in data["rounds"]))


class RunResult(NamedTuple):
    transcript: Transcript
    output: Output
    max_bits: int


def _check_bits(msg: str, v: int, t: int) -> None:
    if not isinstance(msg, str) or msg.strip("01"):
        raise ValueError(f"vertex {v} round {t}: message must be a bit string, got {msg!r}")


def run_protocol(
    graph: Graph,
    protocol: Protocol,
    seed: int = 0,
    *,
    layout: Any = None,
    strict: bool = True,
) -> RunResult:
    """Execute ``protocol`` on ``graph``.

    With ``strict=False`` over-long messages are recorded in
    ``transcript.violations`` as ``(round, vertex, length)`` instead of raising.
    """
    if graph.n < 1:
        raise OutOfRange("graph must have at least one vertex")
    views = [vertex_view(graph, v) for v in range(graph.n)]
    coins = [Coins(seed, v) for v in range(graph.n)]
    board: list[tuple[str, ...]] = []
    violations = []
    for t in range(1, protocol.rounds + 1):
        prefix = tuple(board)
        msgs = tuple(protocol.message_fn(views[v], t, prefix, coins[v]) for v in range(graph.n))
        for v, m in enumerate(msgs):
            _check_bits(m, v, t)
            if len(m) > protocol.bandwidth:
                if strict:
                    raise BandwidthExceeded(
                        f"{protocol.name}: vertex {v} sent {len(m)} bits in round {t} "
                        f"(bandwidth {protocol.bandwidth})"
                    )
                violations.append((t, v, len(m)))
        board.append(msgs)
    transcript = Transcript(tuple(board), layout, tuple(violations))
    output = protocol.referee_fn(transcript.rounds, Coins(seed))
    return RunResult(transcript, output, transcript.max_bits)


def vertex_message(
    protocol: Protocol, view: VertexView, t: int, board: Board, seed: int
) -> str:
    """Message of a single player, exactly as :func:`run_protocol` would compute it."""
    return protocol.message_fn(view, t, board, Coins(seed, view.self_id))


def board_from_rows(rows: Sequence[Sequence[str]]) -> Board:
    return tuple(tuple(r) for r in rows)
