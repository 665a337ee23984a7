import json
import math
from fractions import Fraction

import numpy as np
import pytest

from twistmoment.errors import FormValidationError, InsufficientDataError
from twistmoment.formdata import (
    FORM_FAULTS,
    VALIDATORS,
    check_coeff_relation,
    check_hecke,
    inject_fault_text,
    is_fundamental_discriminant,
    load_form,
    meansquare_envelope,
    meansquare_profile,
    parse_form,
    resolve_path,
    run_validator,
    validate_form,
    wilton_profile,
)

TAU = {1: 1, 2: -24, 3: 252, 4: -1472, 5: 4830, 7: -16744, 11: 534612, 13: -577738}


def _sigma3(m):
    return sum(d**3 for d in range(1, m + 1) if m % d == 0)


def _naive_b(n):
    # double loop over s and m, no shared code with the generator
    total = 0
    for s in range(-math.isqrt(n), math.isqrt(n) + 1):
        rest = n - s * s
        if rest % 4:
            continue
        m = rest // 4
        total += Fraction(s * s, 2) if m == 0 else (120 * s * s - 60 * m) * _sigma3(m)
    return total


TINY = """k 13/2
j 3
eps_sign 1
precision_bits 0
normalization b(1)=1
1 1
2 0
3 0
4 -56
5 120
lambda 3 252
"""


def test_parse_tiny():
    f = parse_form(TINY, "tiny")
    assert f.k == Fraction(13, 2) and f.j == 3 and f.n_max == 5
    assert f.b[4] == -56 and f.b[2] == 0
    assert f.a[4] == pytest.approx(-56 / 4 ** (11 / 4))
    assert np.array_equal(f.a_dual, f.a)
    with pytest.raises(InsufficientDataError):
        f.require(6)


@pytest.mark.parametrize("bad", [
    TINY.replace("k 13/2\n", ""),
    TINY.replace("j 3", "j 2"),
    TINY.replace("3 0\n", ""),
    TINY.replace("eps_sign 1", "eps_sign 0"),
    TINY + "lambda 3 252\n",
    TINY.replace("5 120", "5 120+1j"),
    TINY + "5 121\n",
])
def test_parse_rejects(bad):
    with pytest.raises(FormValidationError):
        parse_form(bad)


def test_decimal_is_exact():
    assert parse_form(TINY.replace("5 120", "5 1.5")).b[5] == Fraction(3, 2)


def test_resolve_path_env(tmp_path, monkeypatch):
    (tmp_path / "f.txt").write_text(TINY)
    monkeypatch.setenv("TWISTMOMENT_FORM_DIR", str(tmp_path))
    assert resolve_path("f.txt") == tmp_path / "f.txt"
    assert load_form("f.txt", validate=False).b[5] == 120


def test_fundamental_discriminants():
    fund = [d for d in range(1, 30) if is_fundamental_discriminant(d)]
    assert fund == [1, 5, 8, 12, 13, 17, 21, 24, 28, 29]


def test_generated_coefficients(form):
    for n in list(range(1, 200)) + [1001, 4096, 9999]:
        assert form.b[n] == _naive_b(n)
    assert form.b[16] == -704


def test_eigenvalues_are_tau(form):
    for p in (3, 5, 7, 11, 13):
        assert form.lam[p] == TAU[p]
    for n, t in TAU.items():
        assert form.shimura_c[n] == t


def test_all_validators_pass(form):
    rep = validate_form(form)
    assert rep.ok, rep.to_json()
    assert [c.name for c in rep.checks] == list(VALIDATORS)
    json.loads(rep.to_json())


@pytest.mark.parametrize("p", [3, 5, 7, 11])
def test_hecke_each_prime(form, p):
    assert check_hecke(form, p).passed
    assert check_hecke(form, p, dual=True).passed


@pytest.mark.parametrize("d,delta", [(1, 2), (1, 4), (5, 3), (8, 2), (13, 6)])
def test_coefficient_relation(form, d, delta):
    assert check_coeff_relation(form, d, delta).passed


def test_dual_is_not_a_multiple(form):
    # the form is not a W4 eigenform: the dual differs from +-b
    a, g = form.a[1:200], form.a_dual[1:200]
    assert np.max(np.abs(g - a)) > 1e-3 and np.max(np.abs(g + a)) > 1e-3


@pytest.fixture
def small_text(small_form_text):
    return small_form_text


def test_small_text_validates(small_text):
    assert validate_form(parse_form(small_text)).ok


@pytest.mark.parametrize("fault", FORM_FAULTS)
def test_fault_caught_by_its_validator(small_text, fault):
    bad = inject_fault_text(small_text, fault)
    if fault in ("schema", "real"):
        with pytest.raises(FormValidationError) as ei:
            parse_form(bad)
        assert ei.value.check == fault
        return
    f = parse_form(bad)
    assert not run_validator(f, fault).passed
    assert not validate_form(f).ok


def test_unknown_fault_and_validator(small_text):
    with pytest.raises(ValueError):
        inject_fault_text(small_text, "bogus")
    with pytest.raises(ValueError):
        run_validator(parse_form(small_text), "bogus")


def test_raise_on_failure(small_text):
    f = parse_form(inject_fault_text(small_text, "hecke"))
    with pytest.raises(FormValidationError):
        validate_form(f, raise_on_failure=True)


def test_meansquare_profile(form):
    prof = meansquare_profile(form, [10, 100, 1000, 10000, 50000])
    assert prof.passed
    assert all(b >= a for a, b in zip(prof.partial_sums, prof.partial_sums[1:]))
    K = meansquare_envelope(form)
    cum = np.cumsum(form.a**2)
    X = np.arange(3, form.n_max + 1)
    assert np.all(cum[3:] <= K * X * np.log(X))


def test_wilton_profile(form):
    prof = wilton_profile(form, [Fraction(1, 3), Fraction(2, 7), 0.1234], 20000)
    assert prof.passed and prof.max_constant < 1
