import cmath
import math

import numpy as np
import pytest

from twistmoment.characters import all_characters
from twistmoment.errors import IdentityViolation
from twistmoment.expsums import (
    NONRESIDUE,
    SalieValue,
    check_twisted_mult,
    kloosterman_4p_max,
    kloosterman_twisted,
    ramanujan_sum,
    salie_bound_scan,
    salie_closed,
    salie_closed_matrix,
    salie_direct,
    salie_matrix_direct,
    twisted_mult_factor,
    weyl_sum,
)
from twistmoment.fp_core import eps, get_context, kronecker, legendre


def _naive_salie(m, n, p):
    # oracle: plain complex exponentials, no shared helpers
    return sum(
        legendre(x, p) * cmath.exp(2j * math.pi * (m * x + n * pow(x, -1, p)) / p)
        for x in range(1, p)
    )


@pytest.mark.parametrize("p", [3, 5, 7, 11, 13, 23, 29, 31])
def test_closed_form_matches_naive(p):
    ctx = get_context(p)
    for m in range(1, p):
        for n in range(1, p):
            c = salie_closed(m, n, ctx)
            assert abs(c.value - _naive_salie(m, n, p)) < 1e-9
            if legendre(m * n, p) == -1:
                assert c.vanishing_reason == NONRESIDUE and c.value == 0


def test_closed_form_needs_units():
    with pytest.raises(ValueError):
        salie_closed(0, 1, get_context(7))


def test_salie_value_guard():
    with pytest.raises(ValueError):
        SalieValue(1.0, NONRESIDUE)


@pytest.mark.parametrize("p", [3, 17, 97, 211])
def test_matrix_routes_agree(p):
    D = salie_matrix_direct(p)
    C = salie_closed_matrix(get_context(p))
    mask = ~np.isnan(C.real)
    assert mask.sum() == (p - 1) ** 2
    assert np.max(np.abs(D[mask] - C[mask])) < 1e-9 * math.sqrt(p)


def test_salie_direct_composite_modulus():
    # multiplicativity check of the definitional sum at q = 15 against naive Jacobi
    q = 15
    naive = sum(
        kronecker(x, q) * cmath.exp(2j * math.pi * (2 * x + 7 * pow(x, -1, q)) / q)
        for x in range(1, q) if math.gcd(x, q) == 1
    )
    assert abs(salie_direct(2, 7, q) - naive) < 1e-12
    with pytest.raises(ValueError):
        salie_direct(1, 1, 8)


@pytest.mark.parametrize("p", [5, 13, 29])
def test_weil_type_bound(p):
    assert salie_bound_scan(get_context(p)) <= 2 + 1e-12


def test_kloosterman_twisted_definition():
    c = 12
    naive = 0
    for d in range(1, c):
        if math.gcd(d, c) == 1:
            naive += (eps(d).power(-3) * kronecker(c, d)
                      * cmath.exp(2j * math.pi * (2 * d + 5 * pow(d, -1, c)) / c))
    assert abs(kloosterman_twisted(3, None, 2, 5, c) - naive) < 1e-12
    with pytest.raises(ValueError):
        kloosterman_twisted(1, None, 1, 1, 6)
    with pytest.raises(ValueError):
        kloosterman_twisted(2, None, 1, 1, 8)


@pytest.mark.parametrize("p", [3, 5, 7, 13])
@pytest.mark.parametrize("kappa", [1, 13])
def test_twisted_multiplicativity_exhaustive(p, kappa):
    c = 4 * p
    for m in range(c):
        for n in range(c):
            if (m * n) % p:
                check_twisted_mult(kappa, m, n, p, 4)


def test_twisted_multiplicativity_with_character():
    ctx = get_context(5)
    chi = all_characters(ctx)[2]
    for m in range(1, 20):
        left, right = twisted_mult_factor(1, m, 3, 5, 4, None, chi)
        assert abs(left - right) < 1e-9


def test_twisted_multiplicativity_detects_wrong_kappa(monkeypatch):
    import twistmoment.expsums as ex
    real = ex.kloosterman_twisted
    monkeypatch.setattr(ex, "kloosterman_twisted",
                        lambda k, chi, m, n, c: real(k + 2, chi, m, n, c) if c > 4 else real(k, chi, m, n, c))
    with pytest.raises(IdentityViolation):
        ex.check_twisted_mult(1, 1, 2, 7, 4)


def test_kloosterman_4p_max_below_four():
    for p in (5, 13):
        assert kloosterman_4p_max(p) < 4


def test_ramanujan_sum():
    for c in range(1, 30):
        for n in range(0, 30):
            naive = sum(cmath.exp(2j * math.pi * a * n / c) for a in range(1, c + 1) if math.gcd(a, c) == 1)
            assert abs(ramanujan_sum(n, c) - naive) < 1e-9


def test_weyl_sum_matches_naive():
    from fractions import Fraction
    a, b = Fraction(3, 17), Fraction(1, 5)
    naive = sum(cmath.exp(2j * math.pi * (2 * a * k * k + b)) for k in range(1, 40))
    assert abs(weyl_sum(a, 2, 39, b) - naive) < 1e-10


def test_kloosterman_matrix_matches_scalar():
    from twistmoment.expsums import kloosterman_matrix
    Km = kloosterman_matrix(13, 20)
    for m, n in [(0, 1), (3, 7), (19, 19), (5, 10)]:
        assert abs(Km[m, n] - kloosterman_twisted(13, None, m, n, 20)) < 1e-12


@pytest.mark.parametrize("p", [3, 7, 13])
def test_twisted_mult_matrix_form(p):
    from twistmoment.expsums import twisted_mult_residual_4p
    assert twisted_mult_residual_4p(1, p) < 1e-10
    assert twisted_mult_residual_4p(13, p) < 1e-10
