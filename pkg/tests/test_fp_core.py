import cmath
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twistmoment.fp_core import (
    csum,
    divisors,
    e_frac,
    e_frac_array,
    eps,
    euler_phi,
    factorize,
    get_context,
    i_power,
    is_prime,
    jacobi,
    kronecker,
    legendre,
    mobius,
    primitive_root,
    sqrt_mod,
    theta_multiplier,
    tonelli_shanks,
)

PRIMES = [3, 5, 7, 11, 13, 17, 29, 101, 229]


def test_is_prime_small():
    assert [n for n in range(30) if is_prime(n)] == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]


@pytest.mark.parametrize("n", [1, 12, 360, 1009, 2**10, 9991])
def test_factorize_roundtrip(n):
    prod = 1
    for q, e in factorize(n).items():
        assert is_prime(q)
        prod *= q**e
    assert prod == n


def test_arithmetic_functions():
    assert [mobius(n) for n in range(1, 11)] == [1, -1, -1, 0, -1, 1, -1, 0, 0, 1]
    assert [euler_phi(n) for n in range(1, 11)] == [1, 1, 2, 2, 4, 2, 6, 4, 6, 4]
    assert divisors(12) == [1, 2, 3, 4, 6, 12]


@pytest.mark.parametrize("p", PRIMES)
def test_legendre_matches_squares(p):
    squares = {x * x % p for x in range(1, p)}
    for a in range(1, p):
        assert legendre(a, p) == (1 if a in squares else -1)
    assert legendre(0, p) == 0


@given(st.integers(-500, 500), st.integers(1, 400).map(lambda k: 2 * k + 1))
def test_jacobi_multiplicative_in_top(a, n):
    # (a/n) = prod over prime factors
    prod = 1
    for q, e in factorize(n).items():
        prod *= legendre(a, q) ** e
    assert jacobi(a, n) == prod


def test_kronecker_two_and_negative():
    assert kronecker(5, 2) == -1 and kronecker(1, 2) == 1 and kronecker(4, 2) == 0
    assert kronecker(-1, -1) == -1 and kronecker(1, -1) == 1
    assert kronecker(4, 5) == 1 and kronecker(8, 3) == -1


@pytest.mark.parametrize("p", PRIMES)
def test_primitive_root_and_context(p):
    g = primitive_root(p)
    assert len({pow(g, t, p) for t in range(p - 1)}) == p - 1
    ctx = get_context(p)
    for a in range(1, p):
        assert pow(ctx.g, int(ctx.dlog[a]), p) == a
        assert a * int(ctx.inv[a]) % p == 1


@pytest.mark.parametrize("p", PRIMES)
def test_square_roots(p):
    ctx = get_context(p)
    for a in range(p):
        roots = sqrt_mod(a, ctx)
        assert roots == {x for x in range(p) if x * x % p == a}
        r = tonelli_shanks(a, p)
        if r is None:
            assert legendre(a, p) == -1
        else:
            assert r * r % p == a


def test_tonelli_large_prime():
    p = 1_000_000_007
    for a in (2, 3, 5, 10**6):
        r = tonelli_shanks(a, p)
        if r is not None:
            assert r * r % p == a


def test_eps_and_i_power():
    assert eps(5).value == 1 and eps(7).value == 1j
    assert eps(7).power(-1) == -1j
    assert eps(13).power(-13) == 1
    assert i_power(2) == -1 and i_power(3) == -1j
    assert abs(i_power(6.5) - cmath.exp(1j * math.pi * 6.5 / 2)) < 1e-15
    with pytest.raises(ValueError):
        eps(4)


def test_e_frac_exact_axes():
    assert e_frac(1, 4) == 1j and e_frac(2, 4) == -1 and e_frac(-1, 4) == -1j
    arr = e_frac_array(np.arange(8), 8)
    assert arr[2] == 1j and arr[4] == -1 and arr[6] == -1j


def test_csum_order_independent():
    rng = np.random.default_rng(1)
    v = rng.normal(size=1000) * 1e10 + 1j * rng.normal(size=1000)
    assert csum(v) == csum(v[::-1])


def test_theta_multiplier():
    # identity-like matrix: c = 4, d = 1 gives eps_1^-1 (4/1) = 1
    assert theta_multiplier((1, 0, 4, 1)) == 1
    assert theta_multiplier((1, 1, 4, 5)) == kronecker(4, 5)
    assert theta_multiplier((3, 1, 8, 3)) == -1j * kronecker(8, 3)
    with pytest.raises(ValueError):
        theta_multiplier((1, 0, 2, 1))
    with pytest.raises(ValueError):
        theta_multiplier((1, 1, 4, 1))
