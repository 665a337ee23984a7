from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from twistmoment.contfrac import (
    at_least_power,
    below_power,
    bracketing_pair,
    ceil_root_power,
    expand,
    floor_root_power,
    has_convergent_in,
)

rationals = st.integers(1, 10**12).flatmap(lambda q: st.tuples(st.integers(0, q - 1), st.just(q)))


@given(rationals)
def test_expansion_properties(aq):
    a, q = aq
    cf = expand(a, q)
    x = Fraction(a, q)
    assert cf.value == x
    assert cf.reconstruct() == x
    convs = cf.convergents
    assert convs[-1] == (x.numerator, x.denominator)
    for (h, k), (h2, k2) in zip(convs, convs[1:]):
        assert abs(h2 * k - h * k2) == 1
    for h, k in convs:
        assert abs(x - Fraction(h, k)) < Fraction(1, k * k) or Fraction(h, k) == x
    qs = cf.partial_quotients
    assert len(qs) == 1 or qs[-1] != 1


def test_known_expansion():
    cf = expand(13, 31)
    assert cf.partial_quotients == (0, 2, 2, 1, 1, 2)
    assert cf.convergents[-1] == (13, 31)
    assert expand(0, 7).partial_quotients == (0,)
    assert expand(45, 7).value == Fraction(3, 7)


def test_convergent_queries():
    cf = expand(13, 31)
    dens = [b for _, b in cf.convergents]
    assert has_convergent_in(cf, 3, 5)[1] in dens
    assert has_convergent_in(cf, 13, 30) is None
    lo, hi = bracketing_pair(cf, 6)
    assert lo[1] <= 6 < hi[1]
    with pytest.raises(ValueError):
        bracketing_pair(cf, 31)


@given(st.integers(0, 10**6), st.integers(0, 7), st.integers(1, 9))
def test_integer_powers(p, s, t):
    b = floor_root_power(p, s, t)
    assert b**t <= p**s < (b + 1) ** t
    c = ceil_root_power(p, s, t)
    assert c**t >= p**s and (c == 0 or (c - 1) ** t < p**s)
    assert at_least_power(c, p, s, t) and not below_power(c, p, s, t)
