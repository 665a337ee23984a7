import math
from dataclasses import dataclass

import mpmath
import numpy as np
import pytest

from twistmoment.characters import all_characters, principal_character, quadratic_character
from twistmoment.errors import ParameterError
from twistmoment.fp_core import get_context
from twistmoment.lfunc import (
    PairTable,
    V_closed,
    W_bessel,
    WeightFunction,
    _envelope_single,
    afe_truncation,
    eps_star,
    gauss_ratio,
    l_half,
    l_product_afe,
    main_term_fit,
    moment_decompose,
    tail_bound,
    tail_estimate,
    truncation_point,
    weight_eval,
)

K = 6.5


@pytest.mark.parametrize("x", [1e-3, 0.05, 0.3, 1.0, 2.5])
def test_V_against_mpmath(x):
    want = float(mpmath.gammainc(K / 2, 2 * mpmath.pi * x, mpmath.inf, regularized=True))
    assert V_closed(K, x) == pytest.approx(want, rel=1e-12)


@pytest.mark.parametrize("x", [1e-3, 0.05, 0.3, 1.0, 2.5])
def test_W_against_mpmath(x):
    f = lambda v: v ** (K - 1) * mpmath.besselk(0, 2 * v)
    want = 4 / mpmath.gamma(K / 2) ** 2 * mpmath.quad(f, [2 * mpmath.pi * mpmath.sqrt(x), 10, mpmath.inf])
    assert W_bessel(K, x) == pytest.approx(float(want), rel=1e-10, abs=1e-16)


@pytest.mark.parametrize("kind", ["V", "W"])
@pytest.mark.parametrize("x", [0.002, 0.08, 0.5, 3.0])
def test_contour_route_matches_closed(kind, x):
    a = weight_eval(kind, K, x)
    b = weight_eval(kind, K, x, method="contour")
    assert abs(a - b) < 1e-10


def test_contour_sigma_choice_irrelevant():
    # shifting past the pole at 0 adds exactly its residue
    a = weight_eval("V", K, 0.5, method="contour", sigma=3.0)
    b = weight_eval("V", K, 0.5, method="contour", sigma=-0.25)
    assert abs(a - b) < 1e-10


def test_weight_limits_and_errors():
    assert V_closed(K, 1e-9) == pytest.approx(1.0)
    assert W_bessel(K, 1e-9) == pytest.approx(1.0, rel=1e-6)
    assert V_closed(K, 20.0) < 1e-40
    with pytest.raises(ValueError):
        weight_eval("U", K, 1.0)
    with pytest.raises(ValueError):
        weight_eval("V", K, -1.0)
    with pytest.raises(ValueError):
        W_bessel(K, 0.0)


def test_weight_function_warm():
    wf = WeightFunction("W", K).warm()
    assert wf.route_gap < 1e-9
    assert wf(np.array([0.5]))[0] == pytest.approx(W_bessel(K, 0.5))


def test_tail_bound_small():
    assert tail_bound("V", K, 1.0) < 1e-10


def test_truncation_monotone():
    env = _envelope_single(1.0)
    V = lambda x: V_closed(K, x)
    ests = [tail_estimate(V, 26, n0, env) for n0 in (50, 100, 200)]
    assert ests[0] > ests[1] > ests[2]
    n0, est = truncation_point(V, 26, env, 1e-8)
    assert est < 1e-8 and tail_estimate(V, 26, max(8, n0 // 2), env) > 1e-8


def test_parameter_errors(form):
    ctx = get_context(13)
    with pytest.raises(ParameterError):
        l_half(form, all_characters(get_context(19))[1], 19)
    with pytest.raises(ParameterError):
        l_half(form, principal_character(ctx), 13)
    with pytest.raises(ParameterError):
        l_half(form, quadratic_character(ctx), 13)
    with pytest.raises(ParameterError):
        moment_decompose(form, 7)


def test_eps_star_and_gauss_ratio_are_units(form):
    for chi in all_characters(get_context(13))[1:]:
        assert abs(abs(eps_star(form, chi, 13)) - 1) < 1e-12
        if not chi.is_quadratic:
            assert abs(abs(gauss_ratio(chi)) - 1) < 1e-12


@pytest.mark.parametrize("p", [5, 13])
def test_l_half_independent_of_X(form, p):
    chi = [c for c in all_characters(get_context(p)) if not c.is_principal and not c.is_quadratic][0]
    vals = [l_half(form, chi, p, X=X, truncation=afe_truncation(form, p, X)) for X in (0.5, 1.0, 2.0)]
    assert max(abs(v - vals[1]) for v in vals) < 1e-8 * max(1.0, abs(vals[1]))


def test_l_half_psi_independent_of_X(form):
    psi = quadratic_character(get_context(13))
    vals = [l_half(form, psi, 13, X=X, truncation=afe_truncation(form, 13, X), allow_psi=True) for X in (0.7, 1.4)]
    assert abs(vals[0] - vals[1]) < 1e-8 * max(1.0, abs(vals[0]))


def test_conjugate_character_gives_conjugate_value(form):
    # real coefficients: L(f x chibar) = conj L(f x chi)
    chi = all_characters(get_context(13))[1]
    a = l_half(form, chi, 13)
    b = l_half(form, chi.conj(), 13)
    assert abs(b - np.conj(a)) < 1e-9 * max(1.0, abs(a))


def test_product_route_matches_square(form):
    p = 13
    table = PairTable.build(form, p)
    for chi in all_characters(get_context(p)):
        if chi.is_principal or chi.is_quadratic:
            continue
        sq = abs(l_half(form, chi, p)) ** 2
        prod = l_product_afe(form, chi, p, table)
        assert abs(prod - sq) <= 1e-5 * max(sq, 1e-3)


def test_moment_decomposition_p13(form):
    rep = moment_decompose(form, 13)
    assert rep.ok, rep.checks
    assert rep.characters == 10
    assert rep.residual < 1e-5
    assert rep.diagonal_literal / rep.diagonal == pytest.approx(12 / 11)
    assert rep.psi_term is not None and rep.psi_term >= 0
    d = rep.to_dict()
    assert d["p"] == 13 and len(d["values"]) == 10


@dataclass
class _Fake:
    p: int
    moment: float


def test_main_term_fit_linear():
    reps = [_Fake(p, (p - 2) * (3 * math.log(p) + 1)) for p in (13, 17, 29, 37)]
    fit = main_term_fit(reps)
    assert fit.c1_hat == pytest.approx(3) and fit.c2_hat == pytest.approx(1)
    assert fit.dof == 2 and set(fit.jackknife) == {13, 17, 29, 37}
    assert max(abs(v) for v in fit.jackknife.values()) < 1e-9
    with pytest.raises(ParameterError):
        main_term_fit(reps[:1])
    two = main_term_fit(reps[:2])
    assert two.dof == 0 and two.jackknife == {}
