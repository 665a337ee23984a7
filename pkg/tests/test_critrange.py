from fractions import Fraction

import numpy as np
import pytest

from twistmoment.contfrac import expand
from twistmoment.critrange import (
    FAULTS,
    REFERENCE_DELTA,
    CritRangeParams,
    a_ell,
    a_vector,
    alpha_beta,
    classify_ell,
    least_nonresidue,
    lhs_bruteforce,
    lhs_definitional,
    progression_embed,
    algebraic_set,
    r_direct,
    root_count,
    rhs_bound,
    run_report,
    s_ell_set,
    s_pairs_by_ell,
    v_ell,
    v_ell_and_gap,
    verify_classification,
)
from twistmoment.errors import ParameterError
from twistmoment.fp_core import legendre

WIDE_DELTA = (Fraction(1, 2), Fraction(1, 5), Fraction(2, 5), Fraction(3, 5), Fraction(1, 4), Fraction(1, 10))


@pytest.fixture(scope="module")
def small():
    return CritRangeParams(101, 1, 7, 7)


@pytest.fixture(scope="module")
def wide():
    return CritRangeParams(229, 1, 20, 20, delta=WIDE_DELTA)


def test_params_validation():
    with pytest.raises(ParameterError):
        CritRangeParams(103, 1, 7, 7)  # 103 = 3 mod 4
    with pytest.raises(ParameterError):
        CritRangeParams(101, 101, 7, 7)
    with pytest.raises(ParameterError):
        CritRangeParams(101, 1, 7, 100)
    with pytest.raises(ParameterError):
        CritRangeParams(101, 1, 7, 7, delta=(Fraction(1, 2),) * 6)
    # the size condition is only enforced in strict mode
    p = CritRangeParams(101, 1, 7, 7)
    assert not all(p.size_conditions().values())
    with pytest.raises(ParameterError):
        CritRangeParams(101, 1, 7, 7, strict=True)


def test_windows_and_classes():
    p = CritRangeParams(101, 1, 7, 7, n_mod4=1, m_mod4=3)
    assert list(p.n_window()) == [9, 13]
    assert list(p.m_window()) == [7, 11]


def test_lhs_routes_agree(small):
    assert lhs_bruteforce(small) == pytest.approx(lhs_definitional(small), rel=1e-10)


def test_lhs_is_p_times_r(small):
    assert lhs_bruteforce(small) == pytest.approx(small.p * r_direct(small)["r"], rel=1e-10)
    assert r_direct(small)["cross_max"] == 0.0


def test_a_vector_matches_direct(wide):
    for j in (1, least_nonresidue(wide.ctx)):
        A = a_vector(wide, j)
        for ell in (0, 1, 5, 77, 228):
            assert A[ell] == pytest.approx(a_ell(ell, wide, j).real, abs=1e-9)
        assert np.sum(A**2) == pytest.approx(wide.p * root_count(wide, j), rel=1e-10)


def test_least_nonresidue():
    from twistmoment.fp_core import get_context
    for p in (5, 13, 17, 41, 73):
        j = least_nonresidue(get_context(p))
        assert legendre(j, p) == -1 and all(legendre(a, p) == 1 for a in range(1, j))


def test_pair_sets(wide):
    p = wide.p
    pairs = s_pairs_by_ell(wide)
    for ell in (3, 50):
        want = {(u, v) for u, v, _, _ in pairs.get(ell, [])}
        assert s_ell_set(ell, wide) == want
        for u, v in want:
            assert (u + v) % p == ell
            assert wide.N <= u * u % p <= 2 * wide.N


def test_alpha_beta(wide):
    a, b = alpha_beta(7, wide, 1)
    assert a * 49 % wide.p == 1 and b == 49


def test_classification_independent(wide):
    A = np.abs(a_vector(wide))
    L = [ell for ell in range(1, wide.p) if A[ell] >= wide.M * wide.p ** (-0.5)]
    seen = set()
    for ell in L:
        cl = classify_ell(ell, wide)
        assert verify_classification(cl, wide)
        seen.add(cl.cls)
    assert seen == {"H1", "H2", "H3"}


def test_classification_h2_witness(wide):
    for ell in range(1, 60):
        cl = classify_ell(ell, wide)
        if cl.cls == "H2":
            cf = expand(cl.witness_h * cl.alpha_num, wide.p)
            i = cf.convergents.index(cl.witness_convergent)
            assert cf.convergents[i - 1] == cl.lower_convergent
            return
    pytest.fail("no H2 example")


def test_cluster_and_gap(wide):
    for ell in range(1, wide.p):
        V = v_ell(ell, wide)
        if len(V) >= 3:
            gd = v_ell_and_gap(ell, wide, V=V)
            assert gd.d in {b - a for a, b in zip(V, V[1:])}
            assert gd.rigorous_bound_holds
            break


def test_progression_embedding_congruence(wide):
    for ell in range(1, wide.p):
        cl = classify_ell(ell, wide)
        V = v_ell(ell, wide)
        if cl.cls != "H3" or len(V) < 2:
            continue
        gd = v_ell_and_gap(ell, wide, V=V)
        count = 0
        for n, A, B in algebraic_set(ell, wide, gd.d):
            if (A - B) % wide.p:
                emb = progression_embed(ell, wide, (n, A, B), gd.d, cl, len(V))
                assert emb.t - emb.g == wide.p * emb.r
                count += 1
        if count:
            return
    pytest.fail("no H3 embedding found")


@pytest.mark.parametrize("case", [(101, 1, 7, 7), (229, 1, 10, 10), (401, 3, 14, 16)])
def test_report_reference_delta(case):
    rep = run_report(CritRangeParams(*case, delta=REFERENCE_DELTA))
    assert rep.ok, rep.failed()
    assert rep.r == pytest.approx(rep.r1 + rep.rm1, rel=1e-10)
    assert 0 < rep.ratio < float("inf")
    d = rep.to_dict()
    assert d["ok"] and d["params"]["p"] == case[0]


@pytest.mark.parametrize("fault", FAULTS)
def test_fault_detected(fault, wide):
    rep = run_report(wide, fault=fault)
    assert not rep.ok


def test_unknown_fault(small):
    with pytest.raises(ValueError):
        run_report(small, fault="nope")


def test_rhs_bound_monotone():
    assert rhs_bound(101, 7, 7) < rhs_bound(101, 8, 7) < rhs_bound(101, 8, 9)
