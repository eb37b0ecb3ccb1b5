from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, strategies as st

from juliafibers.angles import (
    Angle, ZERO, angles_with_denominator_at_most, base_d_digits, circ_dist, closure_under,
    multiplicative_order, orbit, preimages, times_d,
)
from oracles import brute_orbit, functional_graph

A = Angle.parse


@st.composite
def angles(draw, max_den=400):
    q = draw(st.integers(1, max_den))
    p = draw(st.integers(0, q - 1))
    return Angle.of(p, q)


degrees = st.integers(2, 5)


class TestAngle:
    def test_canonical_form(self):
        assert Angle.of(2, 6) == Angle(1, 3)
        assert Angle.of(7, 6) == Angle(1, 6)
        assert Angle.of(-1, 3) == Angle(2, 3)
        assert Angle.of(0, 5) == ZERO

    @pytest.mark.parametrize("num,den", [(1, 1), (2, 4), (-1, 3), (1, 0)])
    def test_rejects_non_canonical(self, num, den):
        with pytest.raises(ValueError):
            Angle(num, den)

    def test_parse_and_print(self):
        assert A("1/7") == Angle(1, 7)
        assert A("0") == ZERO
        assert str(A("2/4")) == "1/2"
        assert str(ZERO) == "0"

    @pytest.mark.parametrize("text", ["5", "1/0", "7/7", "-1/3", "a/b", "1/2/3", ""])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            A(text)

    def test_ordering_is_numeric(self):
        xs = [A("2/3"), A("1/7"), ZERO, A("1/2")]
        assert sorted(xs) == [ZERO, A("1/7"), A("1/2"), A("2/3")]

    @given(angles())
    def test_string_round_trip(self, a):
        assert A(str(a)) == a


class TestTimesD:
    @pytest.mark.parametrize("a,d,expected", [("1/3", 2, "2/3"), ("2/3", 2, "1/3"), ("1/7", 3, "3/7")])
    def test_examples(self, a, d, expected):
        assert times_d(A(a), d) == A(expected)

    def test_degree_check(self):
        with pytest.raises(ValueError):
            times_d(A("1/3"), 1)

    @given(angles(), degrees)
    def test_matches_fraction_arithmetic(self, a, d):
        assert times_d(a, d).value == (d * a.value) % 1


class TestPreimages:
    @pytest.mark.parametrize("a,expected", [
        ("0", ["0", "1/2"]), ("1/3", ["1/6", "2/3"]), ("1/6", ["1/12", "7/12"]),
    ])
    def test_examples(self, a, expected):
        assert preimages(A(a), 2) == [A(x) for x in expected]

    @given(angles(), degrees)
    def test_each_maps_back(self, a, d):
        pre = preimages(a, d)
        assert len(set(pre)) == d
        assert [times_d(p, d) for p in pre] == [a] * d


class TestOrbit:
    @pytest.mark.parametrize("a,pre,per,orb", [
        ("1/7", 0, 3, ["1/7", "2/7", "4/7"]),
        ("1/6", 1, 2, ["1/6", "1/3", "2/3"]),
        ("1/2", 1, 1, ["1/2", "0"]),
    ])
    def test_examples(self, a, pre, per, orb):
        info = orbit(A(a), 2)
        assert (info.preperiod, info.period) == (pre, per)
        assert list(info.orbit) == [A(x) for x in orb]

    @given(angles(200), degrees)
    def test_against_brute_force(self, a, d):
        pre, per, seq = brute_orbit(a.num, a.den, d)
        info = orbit(a, d)
        assert (info.preperiod, info.period) == (pre, per)
        assert [x.value for x in info.orbit] == seq

    @given(angles(), degrees)
    def test_cycle_closes(self, a, d):
        info = orbit(a, d)
        start = info.orbit[info.preperiod]
        assert Angle.of(start.num * d ** info.period, start.den) == start
        assert len(set(info.orbit)) == len(info.orbit)

    @given(angles(), degrees)
    def test_preperiod_zero_iff_coprime(self, a, d):
        assert orbit(a, d).is_periodic == (gcd(a.den, d) == 1)

    def test_functional_graph_all_small(self):
        # every residue class, unreduced, against the graph walk
        for d in (2, 3, 6):
            for q in range(1, 80):
                pre, per = functional_graph(q, d)
                for p in range(q):
                    info = orbit(Angle.of(p, q), d)
                    assert (info.preperiod, info.period) == (pre[p], per[p]), (p, q, d)

    def test_multiplicative_order(self):
        assert multiplicative_order(2, 7) == 3
        assert multiplicative_order(2, 1) == 1
        assert multiplicative_order(10, 7) == 6
        with pytest.raises(ValueError):
            multiplicative_order(2, 6)


class TestCircDist:
    @pytest.mark.parametrize("a,b,expected", [("1/7", "2/7", Fraction(1, 7)), ("1/10", "9/10", Fraction(1, 5))])
    def test_examples(self, a, b, expected):
        assert circ_dist(A(a), A(b)) == expected

    @given(angles())
    def test_identity(self, a):
        assert circ_dist(a, a) == 0

    @given(angles(), angles(), angles())
    def test_metric(self, a, b, c):
        assert circ_dist(a, b) == circ_dist(b, a)
        assert 0 <= circ_dist(a, b) <= Fraction(1, 2)
        assert (circ_dist(a, b) == 0) == (a == b)
        assert circ_dist(a, c) <= circ_dist(a, b) + circ_dist(b, c)


class TestDigits:
    @pytest.mark.parametrize("a,n,expected", [("1/3", 4, "0101"), ("0", 3, "000"), ("1/7", 6, "001001")])
    def test_examples(self, a, n, expected):
        assert base_d_digits(A(a), 2, n) == expected

    @given(angles(), st.integers(2, 10), st.integers(0, 30))
    def test_digits_reconstruct_truncation(self, a, d, n):
        s = base_d_digits(a, d, n)
        assert len(s) == n
        approx = sum(Fraction(int(ch, 36), d ** (k + 1)) for k, ch in enumerate(s))
        assert 0 <= a.value - approx < Fraction(1, d ** n)

    def test_errors(self):
        with pytest.raises(ValueError):
            base_d_digits(A("1/3"), 2, -1)


def test_angles_with_denominator_at_most():
    got = angles_with_denominator_at_most(4)
    assert [str(a) for a in got] == ["0", "1/4", "1/3", "1/2", "2/3", "3/4"]


@given(st.lists(angles(60), min_size=1, max_size=5), degrees)
def test_closure_is_forward_invariant(xs, d):
    cl = closure_under(xs, d)
    assert set(xs) <= set(cl)
    assert {times_d(a, d) for a in cl} <= set(cl)
