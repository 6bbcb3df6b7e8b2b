"""Exact finite joint distributions over named variables.

Probabilities are stored as nonnegative integer weights over a common total,
so every marginal, conditional and total-variation value is an exact rational.
Logarithms (base 2) are taken only when an entropic quantity is reported.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from fractions import Fraction
from functools import reduce
from operator import itemgetter
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence, Union

import numpy as np

from .errors import SupportMismatch, UnknownVariable, ZeroProbabilityEvent

Names = Union[str, Sequence[str]]


def _names(x: Names) -> tuple[str, ...]:
    return (x,) if isinstance(x, str) else tuple(x)


def _getter(positions: Sequence[int]) -> Callable[[tuple], tuple]:
    if not positions:
        return lambda atom: ()
    if len(positions) == 1:
        p = positions[0]
        return lambda atom: (atom[p],)
    return itemgetter(*positions)


class DiscreteDist:
    """Joint law of ``variables``; ``weights`` maps full value tuples to integer weights."""

    __slots__ = ("variables", "weights", "total", "_index")

    def __init__(self, variables: Sequence[str], weights: Mapping[tuple, int]):
        self.variables = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise ValueError(f"duplicate variable names in {self.variables}")
        clean: dict[tuple, int] = {}
        for key, w in weights.items():
            if w < 0:
                raise ValueError("weights must be nonnegative")
            if len(key) != len(self.variables):
                raise ValueError(f"atom {key!r} does not assign all of {self.variables}")
            if w:
                clean[key] = clean.get(key, 0) + int(w)
        if not clean:
            raise ValueError("distribution has no mass")
        g = reduce(math.gcd, clean.values())
        self.weights = {k: w // g for k, w in clean.items()}
        self.total = sum(self.weights.values())
        self._index = {v: i for i, v in enumerate(self.variables)}

    # --- construction -------------------------------------------------------

    @classmethod
    def from_probs(cls, variables: Sequence[str], probs: Mapping[tuple, Any]) -> "DiscreteDist":
        fr = {k: Fraction(p) for k, p in probs.items()}
        if sum(fr.values()) != 1:
            raise ValueError("probabilities must sum to exactly 1")
        den = reduce(math.lcm, (f.denominator for f in fr.values()), 1)
        return cls(variables, {k: f.numerator * (den // f.denominator) for k, f in fr.items()})

    @classmethod
    def uniform(cls, name: str, values: Iterable[Hashable]) -> "DiscreteDist":
        return cls((name,), {(v,): 1 for v in values})

    # --- accessors ----------------------------------------------------------

    def positions(self, names: Names) -> tuple[int, ...]:
        out = []
        for name in _names(names):
            if name not in self._index:
                raise UnknownVariable(name)
            out.append(self._index[name])
        return tuple(out)

    def getter(self, names: Names) -> Callable[[tuple], tuple]:
        return _getter(self.positions(names))

    def domain(self, name: str) -> tuple:
        pos = self.positions(name)[0]
        vals = {atom[pos] for atom in self.weights}
        try:
            return tuple(sorted(vals))
        except TypeError:
            return tuple(sorted(vals, key=repr))

    def items(self) -> Iterable[tuple[tuple, Fraction]]:
        for atom, w in self.weights.items():
            yield atom, Fraction(w, self.total)

    def prob(self, assignment: Mapping[str, Any] | tuple) -> Fraction:
        if isinstance(assignment, tuple):
            return Fraction(self.weights.get(assignment, 0), self.total)
        names = tuple(assignment)
        get = self.getter(names)
        target = tuple(assignment[n] for n in names)
        return Fraction(sum(w for a, w in self.weights.items() if get(a) == target), self.total)

    def support(self) -> frozenset[tuple]:
        return frozenset(self.weights)

    def __len__(self) -> int:
        return len(self.weights)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteDist):
            return NotImplemented
        if set(self.variables) != set(other.variables):
            return False
        o = other.reorder(self.variables)
        return self.weights == o.weights

    def __hash__(self) -> int:
        return hash((self.variables, frozenset(self.weights.items())))

    def __repr__(self) -> str:
        return f"DiscreteDist({self.variables}, atoms={len(self.weights)})"

    # --- transformations ----------------------------------------------------

    def reorder(self, names: Sequence[str]) -> "DiscreteDist":
        if sorted(names) != sorted(self.variables):
            raise UnknownVariable(f"{names} is not a permutation of {self.variables}")
        get = self.getter(names)
        return DiscreteDist(names, {get(a): w for a, w in self.weights.items()})

    def marginal(self, names: Names) -> "DiscreteDist":
        names = _names(names)
        get = self.getter(names)
        acc: dict[tuple, int] = defaultdict(int)
        for a, w in self.weights.items():
            acc[get(a)] += w
        if not names:
            return DiscreteDist((), {(): 1})
        return DiscreteDist(names, acc)

    def condition(self, assignment: Mapping[str, Any]) -> "DiscreteDist":
        names = tuple(assignment)
        get = self.getter(names)
        target = tuple(assignment[n] for n in names)
        rest = tuple(v for v in self.variables if v not in assignment)
        rget = self.getter(rest)
        acc: dict[tuple, int] = defaultdict(int)
        for a, w in self.weights.items():
            if get(a) == target:
                acc[rget(a)] += w
        if not acc:
            raise ZeroProbabilityEvent(f"event {dict(assignment)!r} has probability 0")
        if not rest:
            return DiscreteDist((), {(): 1})
        return DiscreteDist(rest, acc)

    def derive(self, name: str, fn: Callable[..., Hashable], inputs: Names) -> "DiscreteDist":
        """Add variable ``name = fn(*inputs)``."""
        if name in self._index:
            raise ValueError(f"variable {name} already exists")
        get = self.getter(inputs)
        return DiscreteDist(
            self.variables + (name,), {a + (fn(*get(a)),): w for a, w in self.weights.items()}
        )

    def conditional_table(self, target: Names, given: Names) -> dict[tuple, list[tuple[tuple, Fraction]]]:
        """``given value -> [(target value, probability), ...]`` for every supported conditioning."""
        gt, gg = self.getter(target), self.getter(given)
        joint: dict[tuple, dict[tuple, int]] = defaultdict(lambda: defaultdict(int))
        for a, w in self.weights.items():
            joint[gg(a)][gt(a)] += w
        table = {}
        for g, row in joint.items():
            tot = sum(row.values())
            table[g] = sorted(((t, Fraction(w, tot)) for t, w in row.items()), key=lambda x: repr(x[0]))
        return table

    # --- serialization ------------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        atoms = sorted(self.weights.items(), key=lambda kv: repr(kv[0]))
        return {
            "variables": list(self.variables),
            "domains": {v: [_jsonable(x) for x in self.domain(v)] for v in self.variables},
            "atoms": [
                {"values": [_jsonable(x) for x in a], "p": _frac_str(Fraction(w, self.total))}
                for a, w in atoms
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DiscreteDist":
        probs = {
            tuple(_hashable(x) for x in atom["values"]): Fraction(atom["p"]) for atom in data["atoms"]
        }
        return cls.from_probs(data["variables"], probs)

    @classmethod
    def from_json(cls, text: str) -> "DiscreteDist":
        return cls.from_dict(json.loads(text))


def _frac_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _jsonable(x: Any) -> Any:
    if isinstance(x, (tuple, list, frozenset)):
        return [_jsonable(y) for y in x]
    return x


def _hashable(x: Any) -> Any:
    if isinstance(x, list):
        return tuple(_hashable(y) for y in x)
    return x


def product(*dists: DiscreteDist) -> DiscreteDist:
    """Independent product of distributions over disjoint variable sets."""
    out = DiscreteDist((), {(): 1})
    for d in dists:
        if set(out.variables) & set(d.variables):
            raise ValueError("product requires disjoint variable sets")
        out = DiscreteDist(
            out.variables + d.variables,
            {a + b: wa * wb for a, wa in out.weights.items() for b, wb in d.weights.items()},
        )
    return out


# --- information measures ----------------------------------------------------


def entropy(d: DiscreteDist, x: Names, given: Names = ()) -> float:
    """H(X | Z) in bits."""
    gx, gz = d.getter(x), d.getter(given)
    wxz: dict[tuple, int] = defaultdict(int)
    wz: dict[tuple, int] = defaultdict(int)
    for a, w in d.weights.items():
        z = gz(a)
        wxz[(gx(a), z)] += w
        wz[z] += w
    tot = d.total
    return math.fsum(w / tot * (math.log2(wz[z]) - math.log2(w)) for (_, z), w in wxz.items())


def mutual_info(d: DiscreteDist, x: Names, y: Names, given: Names = ()) -> float:
    """I(X; Y | Z) in bits; exactly 0.0 when X and Y are conditionally independent."""
    gx, gy, gz = d.getter(x), d.getter(y), d.getter(given)
    wxyz: dict[tuple, int] = defaultdict(int)
    wxz: dict[tuple, int] = defaultdict(int)
    wyz: dict[tuple, int] = defaultdict(int)
    wz: dict[tuple, int] = defaultdict(int)
    for a, w in d.weights.items():
        xv, yv, zv = gx(a), gy(a), gz(a)
        wxyz[(xv, yv, zv)] += w
        wxz[(xv, zv)] += w
        wyz[(yv, zv)] += w
        wz[zv] += w
    tot = d.total
    terms = []
    for (xv, yv, zv), w in wxyz.items():
        num = w * wz[zv]
        den = wxz[(xv, zv)] * wyz[(yv, zv)]
        if num != den:
            terms.append(w / tot * (math.log2(num) - math.log2(den)))
    return math.fsum(terms) if terms else 0.0


def _aligned(p: DiscreteDist, q: DiscreteDist) -> DiscreteDist:
    if set(p.variables) != set(q.variables):
        raise SupportMismatch(f"variable sets differ: {p.variables} vs {q.variables}")
    return q if q.variables == p.variables else q.reorder(p.variables)


def kl(p: DiscreteDist, q: DiscreteDist) -> float:
    """KL(p || q) in bits; requires supp(p) within supp(q)."""
    q = _aligned(p, q)
    terms = []
    for a, wp in p.weights.items():
        wq = q.weights.get(a)
        if not wq:
            raise SupportMismatch(f"atom {a!r} has mass under p but not under q")
        num, den = wp * q.total, wq * p.total
        if num != den:
            terms.append(wp / p.total * (math.log2(num) - math.log2(den)))
    return math.fsum(terms) if terms else 0.0


def tvd(p: DiscreteDist, q: DiscreteDist) -> Fraction:
    """Exact total variation distance."""
    q = _aligned(p, q)
    s = 0
    for a in p.weights.keys() | q.weights.keys():
        s += abs(p.weights.get(a, 0) * q.total - q.weights.get(a, 0) * p.total)
    return Fraction(s, 2 * p.total * q.total)


def tvd_maps(p: Mapping[Any, Fraction], q: Mapping[Any, Fraction]) -> Fraction:
    """Total variation between two probability maps with arbitrary keys."""
    return sum((abs(p.get(a, 0) - q.get(a, 0)) for a in p.keys() | q.keys()), Fraction(0)) / 2


# --- random test distributions -------------------------------------------------


def random_dist(
    rng: np.random.Generator,
    sizes: Mapping[str, int] | Sequence[int],
    *,
    max_weight: int = 12,
    zero_prob: float = 0.3,
) -> DiscreteDist:
    """Random joint law with small integer weights; some atoms are left at zero."""
    if not isinstance(sizes, Mapping):
        sizes = {chr(ord("A") + i): s for i, s in enumerate(sizes)}
    names = tuple(sizes)
    shape = tuple(sizes[n] for n in names)
    weights = {}
    for atom in np.ndindex(*shape):
        if rng.random() >= zero_prob:
            weights[tuple(int(v) for v in atom)] = int(rng.integers(1, max_weight + 1))
    if not weights:
        weights[tuple(0 for _ in names)] = 1
    return DiscreteDist(names, weights)


def product_gap(d: DiscreteDist, groups: Sequence[Names], given: Names = ()) -> Fraction:
    """E_z TV(D(groups | z), product of D(group | z)); exactly 0 iff the groups are
    mutually independent given ``given``."""
    getters = [d.getter(g) for g in groups]
    gz = d.getter(given)
    joint: dict[tuple, dict[tuple, int]] = defaultdict(lambda: defaultdict(int))
    margs: dict[tuple, list[dict[tuple, int]]] = {}
    wz: dict[tuple, int] = defaultdict(int)
    for a, w in d.weights.items():
        z = gz(a)
        parts = tuple(g(a) for g in getters)
        joint[z][parts] += w
        wz[z] += w
        if z not in margs:
            margs[z] = [defaultdict(int) for _ in getters]
        for m, part in zip(margs[z], parts):
            m[part] += w
    total = Fraction(0)
    for z, row in joint.items():
        wzz = wz[z]
        k = len(getters)
        # |w_joint / w_z - prod(w_g) / w_z^k| summed over the product support
        denom = wzz ** (k - 1)
        acc = 0
        covered = 0
        for parts, w in row.items():
            prod_w = math.prod(margs[z][g][parts[g]] for g in range(k))
            acc += abs(w * denom - prod_w)
            covered += prod_w
        acc += wzz**k - covered  # product mass outside the joint support
        total += Fraction(acc, denom)
    return total / (2 * d.total)
