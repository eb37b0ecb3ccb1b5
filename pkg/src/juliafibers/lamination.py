"""Leaves and inscribed polygons on the circle, and their forward dynamics.

A leaf joins two external angles (a ray pair); a triangle joins three (three
rays with a common landing point). Side lengths are measured the short way
around R/Z, so they lie in (0, 1/2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np

from .angles import Angle, circ_dist, orbit, times_d


@dataclass(frozen=True)
class Leaf:
    a: Angle
    b: Angle

    def __post_init__(self):
        if self.a == self.b:
            raise ValueError(f"degenerate leaf at {self.a}")
        if self.b < self.a:
            a, b = self.b, self.a
            object.__setattr__(self, "a", a)
            object.__setattr__(self, "b", b)

    @classmethod
    def parse(cls, text: str) -> Leaf:
        parts = text.split("-")
        if len(parts) != 2:
            raise ValueError(f"cannot parse leaf {text!r}; expected 'a-b'")
        return cls(Angle.parse(parts[0]), Angle.parse(parts[1]))

    @property
    def length(self) -> Fraction:
        return circ_dist(self.a, self.b)

    @property
    def short_arc(self) -> tuple[Angle, Angle]:
        """The (start, end) pair of the shorter arc, traversed counterclockwise.

        Diameters (length exactly 1/2) use the arc from ``a`` to ``b``.
        """
        if self.b.value - self.a.value <= Fraction(1, 2):
            return self.a, self.b
        return self.b, self.a

    def __str__(self) -> str:
        return f"{self.a}-{self.b}"


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[Angle, ...]

    def __post_init__(self):
        vs = tuple(sorted(set(self.vertices)))
        if len(vs) != len(self.vertices):
            raise ValueError("polygon vertices must be distinct")
        if len(vs) < 3:
            raise ValueError("a polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", vs)

    @classmethod
    def parse(cls, text: str) -> Polygon:
        return cls(tuple(Angle.parse(p) for p in text.split(",")))

    @property
    def sides(self) -> list[Leaf]:
        vs = self.vertices
        return [Leaf(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.vertices)


def leaf_image(leaf: Leaf, d: int) -> Leaf | None:
    """Image of a leaf under times_d, or None for a critical leaf.

    A leaf is critical when d times its length is an integer, so both
    endpoints land on the same angle.
    """
    a, b = times_d(leaf.a, d), times_d(leaf.b, d)
    if a == b:
        return None
    return Leaf(a, b)


def image_length(s: Fraction, d: int) -> Fraction:
    """Length of the image of a side of length s < 1/d: min(ds, 1 - ds)."""
    ds = d * s
    return min(ds, 1 - ds)


def _strictly_inside(x: Angle, lo: Angle, hi: Angle) -> bool:
    """x lies in the open counterclockwise arc from lo to hi."""
    if lo < hi:
        return lo < x < hi
    return x > lo or x < hi


def leaves_cross(l1: Leaf, l2: Leaf) -> bool:
    """True iff the chords are linked. Leaves sharing an endpoint never cross."""
    if {l1.a, l1.b} & {l2.a, l2.b}:
        return False
    return _strictly_inside(l2.a, l1.a, l1.b) != _strictly_inside(l2.b, l1.a, l1.b)


def polygons_cross(p: Sequence[Angle], q: Sequence[Angle]) -> bool:
    """True if any side of the first vertex set crosses any side of the second."""
    def sides(vs):
        vs = sorted(vs)
        if len(vs) == 2:
            return [Leaf(vs[0], vs[1])]
        return [Leaf(vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs))]

    return any(leaves_cross(s, t) for s in sides(p) for t in sides(q))


def side_lengths(vertices: Sequence[Angle]) -> tuple[Fraction, ...]:
    """Lengths of the sides between cyclically adjacent vertices, sorted descending."""
    vs = sorted(vertices)
    n = len(vs)
    return tuple(sorted((circ_dist(vs[i], vs[(i + 1) % n]) for i in range(n)), reverse=True))


class OrbitExhausted(RuntimeError):
    """Raised when a step budget runs out before a rational triangle orbit repeats."""


@dataclass(frozen=True)
class TriangleOrbitReport:
    classification: str  # "periodic" | "preperiodic" | "critical-collapse"
    preperiod: int | None
    period: int | None
    collapse_step: int | None
    lengths: tuple[tuple[Fraction, Fraction, Fraction], ...]
    sets: tuple[tuple[Angle, ...], ...]


def _triangle_bound(vertices: Sequence[Angle], d: int) -> int:
    infos = [orbit(v, d) for v in vertices]
    return max(i.preperiod for i in infos) + math.lcm(*(i.period for i in infos))


def triangle_orbit(tri: Polygon, d: int, max_steps: int | None = None) -> TriangleOrbitReport:
    """Follow the vertex set of a triangle under times_d until it repeats or collapses.

    Periodicity is of the vertex *set*, so a triangle whose vertices are
    permuted by one step has period 1.
    """
    if len(tri.vertices) != 3:
        raise ValueError("triangle_orbit needs exactly three vertices")
    bound = _triangle_bound(tri.vertices, d)
    if max_steps is None:
        max_steps = bound
    if max_steps < 1:
        raise ValueError("max_steps must be >= 1")

    seen: dict[frozenset, int] = {}
    sets: list[tuple[Angle, ...]] = []
    lengths = []
    current = tuple(tri.vertices)
    for step in range(max_steps + 1):
        key = frozenset(current)
        if len(key) < 3:
            return TriangleOrbitReport("critical-collapse", None, None, step,
                                       tuple(lengths), tuple(sets))
        if key in seen:
            pre = seen[key]
            period = step - pre
            return TriangleOrbitReport("periodic" if pre == 0 else "preperiodic", pre, period,
                                       None, tuple(lengths), tuple(sets))
        seen[key] = step
        sets.append(tuple(sorted(current)))
        lengths.append(side_lengths(current))
        current = tuple(times_d(v, d) for v in current)
    raise OrbitExhausted(f"no repetition within {max_steps} steps (exact bound is {bound})")


@dataclass(frozen=True)
class WanderingStep:
    step: int
    lengths: tuple[Fraction, Fraction, Fraction]
    grew: tuple[bool, bool, bool]
    rule_ok: tuple[bool, bool, bool]

    def to_json(self) -> dict:
        return {
            "step": self.step,
            "lengths": [str(x) for x in self.lengths],
            "grew": list(self.grew),
        }


@dataclass(frozen=True)
class WanderingReport:
    steps: tuple[WanderingStep, ...]
    collapsed_at: int | None = None

    @property
    def rule_holds(self) -> bool:
        return all(all(s.rule_ok) for s in self.steps)


def growth_rule_ok(s: Fraction, t: Fraction, d: int) -> bool:
    """Check the side-length law for a side of length s mapping to length t.

    Below 1/(d+1) sides grow, above it they shrink, at it they are fixed. The law
    is only claimed for s < 1/d; longer sides are accepted without a check.
    """
    if s >= Fraction(1, d):
        return True
    pivot = Fraction(1, d + 1)
    if s < pivot:
        return t > s
    if s > pivot:
        return t < s
    return t == s


def wandering_report(tri: Polygon, d: int, steps: int) -> WanderingReport:
    """Side-length bookkeeping along the forward orbit of a triangle.

    Each record lists the sorted lengths (l >= l' >= l'') of the current triangle
    and, for each of them, whether that side gets longer under the next step.
    Stops early (``collapsed_at``) when two vertices land on the same angle.
    """
    if len(tri.vertices) != 3:
        raise ValueError("wandering_report needs exactly three vertices")
    verts = list(tri.vertices)
    out = []
    for step in range(steps):
        images = [times_d(v, d) for v in verts]
        if len(set(images)) < 3:
            return WanderingReport(tuple(out), collapsed_at=step + 1)
        sides = []
        for i, j in combinations(range(3), 2):
            s = circ_dist(verts[i], verts[j])
            t = circ_dist(images[i], images[j])
            sides.append((s, t))
        sides.sort(key=lambda st: st[0], reverse=True)
        out.append(WanderingStep(
            step,
            tuple(s for s, _ in sides),
            tuple(t > s for s, t in sides),
            tuple(growth_rule_ok(s, t, d) for s, t in sides),
        ))
        verts = images
    return WanderingReport(tuple(out))


@dataclass(frozen=True, eq=False)
class TriangleBatch:
    """Orbit data for many triangles with a common denominator.

    Row i is the triangle with vertices ``vertices[i] / den``. ``classification``
    holds 0 = periodic, 1 = preperiodic, 2 = critical-collapse; ``preperiod``
    and ``period`` are -1 for collapsing rows and ``collapse_step`` is -1 for
    the others. ``rule_holds`` is the side-length law over the whole orbit.
    """

    den: int
    d: int
    vertices: np.ndarray
    classification: np.ndarray
    preperiod: np.ndarray
    period: np.ndarray
    collapse_step: np.ndarray
    rule_holds: np.ndarray

    LABELS = ("periodic", "preperiodic", "critical-collapse")

    def label(self, i: int) -> str:
        return self.LABELS[int(self.classification[i])]


def _all_triples(den: int, primitive: bool) -> np.ndarray:
    tri = np.array(list(combinations(range(den), 3)), dtype=np.int64).reshape(-1, 3)
    if primitive and len(tri):
        g = np.gcd(np.gcd(np.gcd(tri[:, 0], tri[:, 1]), tri[:, 2]), den)
        tri = tri[g == 1]
    return tri


def _sort3(X: np.ndarray) -> np.ndarray:
    # sorting network; much faster than np.sort on short rows
    a, b, c = X[:, 0], X[:, 1], X[:, 2]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    mid = np.minimum(hi, c)
    return np.column_stack([np.minimum(lo, mid), np.maximum(lo, mid), np.maximum(hi, c)])


def _circ(x: np.ndarray, y: np.ndarray, den: int) -> np.ndarray:
    r = (x - y) % den
    return np.minimum(r, den - r)


def _rule_ok(s: np.ndarray, t: np.ndarray, den: int, d: int) -> np.ndarray:
    # integer form of growth_rule_ok for lengths s/den -> t/den
    pivot = (d + 1) * s - den
    ok = np.where(pivot < 0, t > s, np.where(pivot > 0, t < s, t == s))
    return ok | (d * s >= den)


def classify_triangles(den: int, d: int, vertices: np.ndarray | None = None,
                       primitive: bool = True) -> TriangleBatch:
    """Vectorized :func:`triangle_orbit` and :func:`wandering_report` check.

    By default takes every triangle with vertices in (1/den) Z / Z; with
    ``primitive`` only those not already counted at a smaller denominator.
    Exact integer arithmetic throughout. A vertex set becomes periodic exactly
    when all its vertices are periodic, which happens by step P (the preperiod
    of den); after that the map is a bijection on the cycle, so collapse can
    only occur at steps <= P and the set period divides the order L of d.
    """
    if d < 2 or den < 1:
        raise ValueError("need d >= 2 and den >= 1")
    X = _all_triples(den, primitive) if vertices is None else np.asarray(vertices, dtype=np.int64) % den
    n = len(X)
    pre_den = orbit(Angle.of(1, den), d)
    P, L = pre_den.preperiod, pre_den.period

    collapse = np.full(n, -1)
    rule = np.ones(n, dtype=bool)
    pairs = ((0, 1), (0, 2), (1, 2))
    states = []
    cur = _sort3(X)
    for k in range(P + L + 1):
        states.append(cur)
        dup = (cur[:, 0] == cur[:, 1]) | (cur[:, 1] == cur[:, 2])
        newly = dup & (collapse < 0)
        collapse[newly] = k
        nxt = (cur * d) % den
        if k < P + L:
            # the report stops before a step whose image collapses
            srt = _sort3(nxt)
            checked = (collapse < 0) & (srt[:, 0] != srt[:, 1]) & (srt[:, 1] != srt[:, 2])
            for i, j in pairs:
                s = _circ(cur[:, i], cur[:, j], den)
                t = _circ(nxt[:, i], nxt[:, j], den)
                rule &= _rule_ok(s, t, den, d) | ~checked
        cur = srt if k < P + L else _sort3(nxt)

    period = np.full(n, -1)
    base = states[P]
    for p in range(L, 0, -1):
        if L % p == 0:
            hit = np.all(_sort3(base * pow(d, p, den) % den) == base, axis=1)
            period[hit] = p
    alive = collapse < 0
    period[~alive] = -1

    preperiod = np.full(n, -1)
    powers = np.array([pow(d, p, den) for p in range(L + 1)], dtype=np.int64)
    mult = powers[np.maximum(period, 0)]
    for k in range(P, -1, -1):
        same = np.all(_sort3(states[k] * mult[:, None] % den) == states[k], axis=1)
        preperiod[same & alive] = k
    cls = np.where(~alive, 2, np.where(preperiod == 0, 0, 1))
    return TriangleBatch(den, d, X, cls, preperiod, period, collapse, rule)


def _triangle_area(gaps) -> np.ndarray:
    """Area of the triangle inscribed in the unit circle with the given arc gaps (turns)."""
    g = np.asarray(gaps, dtype=float)
    return 0.5 * np.sin(2 * np.pi * g).sum(axis=0)


def _check_eps(eps: float) -> None:
    if not 0 < eps <= 1 / 3 + 1e-15:
        raise ValueError(f"eps must lie in (0, 1/3], got {eps}")


def min_triangle_area(eps: float, grid: float = 1e-4, tol: float = 1e-12) -> float:
    """Smallest area of a triangle inscribed in the unit circle with all
    pairwise vertex distances (in turns, the short way) at least ``eps``.

    One arc gap is pinned to ``eps``; the second gap t ranges over
    [eps, 1 - 2 eps]. A grid scan brackets the minimum and golden-section
    search refines it.
    """
    _check_eps(eps)
    eps = min(float(eps), 1 / 3)
    lo, hi = eps, 1 - 2 * eps

    def area(t):
        return _triangle_area([np.full_like(t, eps), t, 1 - eps - t])

    if hi - lo < grid:
        ts = np.array([lo, hi])
    else:
        ts = np.linspace(lo, hi, int(math.ceil((hi - lo) / grid)) + 1)
    vals = area(ts)
    k = int(np.argmin(vals))
    a, b = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
    phi = (math.sqrt(5) - 1) / 2
    x1, x2 = b - phi * (b - a), a + phi * (b - a)
    f1, f2 = float(area(np.array(x1))), float(area(np.array(x2)))
    while b - a > tol:
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - phi * (b - a)
            f1 = float(area(np.array(x1)))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + phi * (b - a)
            f2 = float(area(np.array(x2)))
    return float(min(vals.min(), f1, f2, area(np.array([lo, hi])).min()))


def packing_bound(eps: float) -> int:
    """Upper bound on the number of disjoint inscribed triangles whose vertices
    are pairwise at least ``eps`` apart: total disk area over the minimal area."""
    return math.floor(math.pi / min_triangle_area(eps))
