"""Itineraries relative to the partition cut out by the critical point.

The d rays landing at the critical point have angles (theta_v + k)/d, where
theta_v is a ray landing at the critical value. They split the circle into d
open arcs. Reading off which arc each iterate of an angle falls in gives an
eventually periodic symbol sequence; for a dendrite Julia set two rational rays
land together exactly when these sequences agree (boundary hits act as
wildcards).

Nothing here checks the dendrite hypothesis. For other parameters the
equivalence is purely formal.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import lcm
from typing import Iterable, Sequence

from .angles import Angle, orbit, preimages

STAR = -1  # boundary hit; matches every symbol


@dataclass(frozen=True)
class CharacteristicAngle:
    theta_v: Angle
    d: int = 2

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("degree must be >= 2")


def partition_boundaries(ca: CharacteristicAngle) -> list[Angle]:
    """Preimages of theta_v, rotated so that arc 0 (from boundary 0 to boundary 1)
    contains theta_v.

    When theta_v is itself a boundary angle it is boundary 0.
    """
    bs = sorted(preimages(ca.theta_v, ca.d))
    # last boundary at or below theta_v, cyclically
    below = [i for i, b in enumerate(bs) if b <= ca.theta_v]
    start = below[-1] if below else len(bs) - 1
    return bs[start:] + bs[:start]


def _arc_index(x: Angle, bounds: Sequence[Angle]) -> int:
    d = len(bounds)
    if x in bounds:
        return STAR
    for k in range(d):
        lo, hi = bounds[k], bounds[(k + 1) % d]
        if lo < hi:
            if lo < x < hi:
                return k
        elif x > lo or x < hi:
            return k
    raise AssertionError("angle not in any arc")  # unreachable for d >= 2


@dataclass(frozen=True)
class Itinerary:
    """Eventually periodic symbol sequence in normal form (shortest period, then
    shortest preperiod). Symbols are 0..d-1, with ``STAR`` for boundary hits."""

    preperiod: tuple[int, ...]
    period: tuple[int, ...]

    @classmethod
    def normalized(cls, pre: Sequence[int], per: Sequence[int]) -> Itinerary:
        pre, per = list(pre), list(per)
        n = len(per)
        for p in range(1, n + 1):
            if n % p == 0 and per == per[:p] * (n // p):
                per = per[:p]
                break
        while pre and pre[-1] == per[-1]:
            per = [pre.pop()] + per[:-1]
        return cls(tuple(pre), tuple(per))

    def symbol(self, k: int) -> int:
        if k < len(self.preperiod):
            return self.preperiod[k]
        return self.period[(k - len(self.preperiod)) % len(self.period)]

    @property
    def has_star(self) -> bool:
        return STAR in self.preperiod or STAR in self.period

    def __str__(self) -> str:
        def fmt(s):
            return "*" if s == STAR else str(s)

        head = " ".join(fmt(s) for s in self.preperiod)
        tail = "(" + " ".join(fmt(s) for s in self.period) + ")∞"
        return f"{head} {tail}" if head else tail

    def to_json(self) -> dict:
        def js(s):
            return "*" if s == STAR else s

        return {"preperiod": [js(s) for s in self.preperiod], "period": [js(s) for s in self.period]}


def itinerary(phi: Angle, ca: CharacteristicAngle) -> Itinerary:
    info = orbit(phi, ca.d)
    bounds = partition_boundaries(ca)
    syms = [_arc_index(x, bounds) for x in info.orbit]
    return Itinerary.normalized(syms[: info.preperiod], syms[info.preperiod:])


def itineraries_match(i1: Itinerary, i2: Itinerary) -> bool:
    """Symbolwise comparison with STAR matching anything.

    Past max(preperiods) both sequences repeat with period lcm(periods), so a
    finite window decides equality of the infinite sequences.
    """
    n = max(len(i1.preperiod), len(i2.preperiod)) + lcm(len(i1.period), len(i2.period))
    for k in range(n):
        a, b = i1.symbol(k), i2.symbol(k)
        if a != b and a != STAR and b != STAR:
            return False
    return True


def angles_equivalent(phi1: Angle, phi2: Angle, ca: CharacteristicAngle) -> bool:
    if phi1 == phi2:
        return True
    return itineraries_match(itinerary(phi1, ca), itinerary(phi2, ca))


def landing_classes(angles: Iterable[Angle], ca: CharacteristicAngle) -> list[list[Angle]]:
    """Partition by the transitive closure of :func:`angles_equivalent`.

    Classes are sorted internally and ordered by their smallest angle.
    """
    items = sorted(set(angles))
    its = [itinerary(a, ca) for a in items]
    parent = list(range(len(items)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    # group wildcard-free itineraries by exact key first; only starred ones need pairwise checks
    by_key: dict[Itinerary, int] = {}
    starred = []
    for i, it in enumerate(its):
        if it.has_star:
            starred.append(i)
        elif it in by_key:
            parent[find(i)] = find(by_key[it])
        else:
            by_key[it] = i
    for i in starred:
        for j in range(len(items)):
            if j != i and find(i) != find(j) and itineraries_match(its[i], its[j]):
                parent[find(i)] = find(j)

    groups: dict[int, list[Angle]] = {}
    for i, a in enumerate(items):
        groups.setdefault(find(i), []).append(a)
    return sorted(groups.values(), key=lambda g: g[0])
