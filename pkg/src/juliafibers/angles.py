"""Exact external angles on R/Z and the degree-d multiplication map."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache, total_ordering
from math import gcd
from typing import Iterator


@total_ordering
@dataclass(frozen=True, slots=True)
class Angle:
    """A rational point of the circle R/Z, measured in full turns.

    Always held in canonical form ``0 <= num < den`` with ``gcd(num, den) == 1``;
    use :meth:`of` to build one from arbitrary integers.
    """

    num: int
    den: int

    def __post_init__(self):
        if self.den <= 0 or not 0 <= self.num < self.den or gcd(self.num, self.den) != 1:
            raise ValueError(f"non-canonical angle {self.num}/{self.den}")

    @classmethod
    def of(cls, num: int, den: int = 1) -> Angle:
        if den == 0:
            raise ValueError("zero denominator")
        if den < 0:
            num, den = -num, -den
        num %= den
        g = gcd(num, den)
        return cls(num // g, den // g)

    @classmethod
    def from_fraction(cls, x: Fraction) -> Angle:
        return cls.of(x.numerator, x.denominator)

    @classmethod
    def parse(cls, text: str) -> Angle:
        """Parse ``"p/q"`` (or ``"0"``). The fraction must already lie in [0, 1)."""
        s = text.strip()
        try:
            if "/" in s:
                p, q = s.split("/")
                num, den = int(p), int(q)
            else:
                num, den = int(s), 1
        except ValueError:
            raise ValueError(f"cannot parse angle {text!r}") from None
        if den <= 0 or not 0 <= num < den:
            raise ValueError(f"angle {text!r} is not in [0, 1)")
        return cls.of(num, den)

    @property
    def value(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __float__(self) -> float:
        return self.num / self.den

    def __lt__(self, other: Angle) -> bool:
        if not isinstance(other, Angle):
            return NotImplemented
        return self.num * other.den < other.num * self.den

    def __str__(self) -> str:
        return "0" if self.num == 0 else f"{self.num}/{self.den}"

    def __repr__(self) -> str:
        return f"Angle({self})"


ZERO = Angle(0, 1)


def _check_degree(d: int) -> None:
    if d < 2:
        raise ValueError(f"degree must be >= 2, got {d}")


def times_d(a: Angle, d: int) -> Angle:
    _check_degree(d)
    return Angle.of(a.num * d, a.den)


def preimages(a: Angle, d: int) -> list[Angle]:
    """The d angles (a + k)/d, in increasing order."""
    _check_degree(d)
    return [Angle.of(a.num + k * a.den, a.den * d) for k in range(d)]


def circ_dist(a: Angle, b: Angle) -> Fraction:
    diff = abs(a.value - b.value)
    return min(diff, 1 - diff)


def base_d_digits(a: Angle, d: int, n: int) -> str:
    """First n base-d digits, read off the orbit: digit k is floor(d * (d^k a mod 1))."""
    _check_degree(d)
    if n < 0:
        raise ValueError("n must be non-negative")
    if d > 36:
        raise ValueError("digit strings are only defined for d <= 36")
    alphabet = "0123456789abcdefghijklmnopqrstuvwxyz"
    out = []
    x, q = a.num, a.den
    for _ in range(n):
        x *= d
        out.append(alphabet[x // q])
        x %= q
    return "".join(out)


def _factorize(n: int) -> dict[int, int]:
    fac: dict[int, int] = {}
    p = 2
    while p * p <= n:
        while n % p == 0:
            fac[p] = fac.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        fac[n] = fac.get(n, 0) + 1
    return fac


@lru_cache(maxsize=4096)
def multiplicative_order(d: int, n: int) -> int:
    """Order of d in (Z/nZ)^*; requires gcd(d, n) == 1. Returns 1 for n == 1."""
    if n == 1:
        return 1
    if gcd(d, n) != 1:
        raise ValueError(f"{d} is not a unit modulo {n}")
    phi = 1
    for p, e in _factorize(n).items():
        phi *= (p - 1) * p ** (e - 1)
    order = phi
    for p in _factorize(phi):
        while order % p == 0 and pow(d, order // p, n) == 1:
            order //= p
    return order


def _preperiod(den: int, d: int) -> tuple[int, int]:
    """Steps until the denominator is coprime to d, and that final denominator."""
    k = 0
    g = gcd(den, d)
    while g > 1:
        den //= g
        k += 1
        g = gcd(den, d)
    return k, den


@dataclass(frozen=True)
class OrbitInfo:
    """Eventually periodic forward orbit of a rational angle under times_d.

    ``orbit`` lists the preperiod + period distinct angles, starting at ``start``.
    """

    start: Angle
    d: int
    preperiod: int
    period: int

    @cached_property
    def orbit(self) -> tuple[Angle, ...]:
        return tuple(self.iterate())

    def iterate(self) -> Iterator[Angle]:
        a = self.start
        for _ in range(self.preperiod + self.period):
            yield a
            a = times_d(a, self.d)

    @property
    def cycle(self) -> tuple[Angle, ...]:
        return self.orbit[self.preperiod:]

    @property
    def is_periodic(self) -> bool:
        return self.preperiod == 0


def orbit(a: Angle, d: int) -> OrbitInfo:
    """Preperiod and period of ``a`` under multiplication by d.

    The preperiod is the number of steps needed to strip from the denominator
    every prime it shares with d; the period is the order of d modulo what remains.
    """
    _check_degree(d)
    pre, core = _preperiod(a.den, d)
    return OrbitInfo(a, d, pre, multiplicative_order(d % core, core) if core > 1 else 1)


def angles_with_denominator_at_most(n: int) -> list[Angle]:
    """All canonical angles with denominator <= n, sorted by value."""
    out = [Angle(p, q) for q in range(1, n + 1) for p in range(q) if gcd(p, q) == 1]
    out.sort()
    return out


def closure_under(angles, d: int) -> list[Angle]:
    """Smallest superset of ``angles`` closed under times_d, sorted."""
    seen: set[Angle] = set()
    stack = list(angles)
    while stack:
        a = stack.pop()
        if a in seen:
            continue
        seen.add(a)
        stack.append(times_d(a, d))
    return sorted(seen)
