import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistmoment.equidist import (
    SequenceSpec,
    cluster_members,
    csv_rows,
    discrepancy,
    discrepancy_residues,
    erdos_turan_bound,
    rows_to_csv,
    spacing_stats,
    spec_discrepancy,
)


def _brute_discrepancy(points):
    # star discrepancy sup over [0, t) evaluated at all breakpoints
    pts = sorted(Fraction(x) for x in points)
    N = len(pts)
    best = Fraction(0)
    for t in set(pts) | {Fraction(1)}:
        below = sum(1 for x in pts if x < t)
        upto = sum(1 for x in pts if x <= t)
        best = max(best, abs(Fraction(below, N) - t), abs(Fraction(upto, N) - t))
    return best


@given(st.lists(st.integers(0, 96), min_size=1, max_size=40))
def test_discrepancy_matches_brute(rs):
    exact = discrepancy_residues(rs, 97)
    assert exact == _brute_discrepancy([Fraction(r, 97) for r in rs])
    assert discrepancy([Fraction(r, 97) for r in rs]) == pytest.approx(float(exact))
    assert discrepancy([r / 97 for r in rs]) == pytest.approx(float(exact), abs=1e-12)


def test_discrepancy_rejects_bad_points():
    with pytest.raises(ValueError):
        discrepancy([Fraction(1)])
    with pytest.raises(ValueError):
        discrepancy([])


def test_residues_exact():
    spec = SequenceSpec(Fraction(3, 7), Fraction(1, 2), 10)
    assert spec.q == 14
    for n, r in zip(range(1, 11), spec.residues()):
        assert Fraction(int(r), 14) == (Fraction(3, 7) * n * n + Fraction(1, 2)) % 1


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([101, 229, 1009]), st.integers(1, 1000), st.integers(1, 400), st.integers(1, 40))
def test_erdos_turan_dominates(p, a, N, H):
    spec = SequenceSpec(Fraction(a % p or 1, p), Fraction(1, 3), N)
    assert spec_discrepancy(spec) <= erdos_turan_bound(spec, H) + 1e-12


def test_cluster_members_brute():
    spec = SequenceSpec(Fraction(5, 101), Fraction(7, 101), 60)
    eps = Fraction(3, 101)
    brute = []
    for n in range(0, 61):
        x = (Fraction(5, 101) * n * n + Fraction(7, 101)) % 1
        if min(x, 1 - x) <= eps:
            brute.append(n)
    assert cluster_members(spec, eps) == brute
    with pytest.raises(ValueError):
        cluster_members(spec, Fraction(2, 3))


def test_spacing_stats_mean_gap_is_one():
    st_ = spacing_stats(SequenceSpec(Fraction(1, math.isqrt(10**6) + 3), 0, 200))
    assert st_.mean_gap == pytest.approx(1.0)
    assert st_.histogram.sum() == 200
    assert np.all(np.diff(st_.pair_correlation) >= 0)


def test_csv_roundtrip():
    rows = csv_rows([SequenceSpec(Fraction(2, 13), 0, 20), SequenceSpec(Fraction(2, 13), 0, 1)], 5, Fraction(1, 10))
    text = rows_to_csv(rows)
    assert text.splitlines()[0].startswith("alpha,beta,N,H")
    assert len(text.splitlines()) == 3
