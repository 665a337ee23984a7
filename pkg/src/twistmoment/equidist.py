"""Discrepancy, clustering and spacing of quadratic sequences alpha n^2 + beta mod 1.

Points are kept as integer residues r over a common denominator q, so every
comparison that matters (discrepancy extremes, distance to the nearest
integer) is exact.  Floats only appear in reported statistics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .fp_core import csum, e_frac_array

_INT64_SAFE = 3_000_000_000


@dataclass(frozen=True)
class SequenceSpec:
    alpha: Fraction
    beta: Fraction
    N: int
    degree: int = 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        object.__setattr__(self, "beta", Fraction(self.beta))
        if self.degree != 2:
            raise ValueError("only quadratic sequences are supported")
        if self.N < 1:
            raise ValueError("N must be >= 1")

    @property
    def q(self) -> int:
        """Common denominator of alpha and beta."""
        a, b = self.alpha.denominator, self.beta.denominator
        return a * b // math.gcd(a, b)

    def residues(self, start: int = 1) -> np.ndarray:
        """r_n with (alpha n^2 + beta) mod 1 = r_n / q, for n = start..N."""
        return quad_residues(self.alpha, self.beta, self.N, start)

    def points(self, start: int = 1) -> list[Fraction]:
        q = self.q
        return [Fraction(int(r), q) for r in self.residues(start)]


def quad_residues(alpha, beta, N: int, start: int = 1, h: int = 1) -> np.ndarray:
    """(h alpha n^2 + beta) mod 1 as residues over the common denominator."""
    alpha, beta = Fraction(alpha), Fraction(beta)
    q = alpha.denominator * beta.denominator // math.gcd(alpha.denominator, beta.denominator)
    a = (alpha.numerator * (q // alpha.denominator) * h) % q
    b = (beta.numerator * (q // beta.denominator)) % q
    if q < _INT64_SAFE:
        n = np.arange(start, N + 1, dtype=np.int64)
        sq = (n % q) * (n % q) % q
        return (sq * a + b) % q
    return np.array([(a * k * k + b) % q for k in range(start, N + 1)], dtype=object)


def _weyl_from_residues(r, q) -> complex:
    if q < _INT64_SAFE:
        return csum(e_frac_array(r, q))
    # huge denominators: reduce each phase exactly, then complexify
    theta = [2 * math.pi * float(Fraction(int(x), q)) for x in r]
    return csum([complex(math.cos(t), math.sin(t)) for t in theta])


def weyl_sum_spec(spec: SequenceSpec, h: int) -> complex:
    """sum_{1<=n<=N} e(h alpha n^2); independent of beta in absolute value."""
    r = quad_residues(spec.alpha, 0, spec.N, 1, h)
    return _weyl_from_residues(r, _den(spec.alpha))


def _den(x: Fraction) -> int:
    return Fraction(x).denominator


def discrepancy(points) -> float:
    """Star discrepancy of points in [0, 1).

    Exact when the points are Fractions or integers, float otherwise.
    """
    pts = list(points)
    if not pts:
        raise ValueError("discrepancy needs at least one point")
    exact = all(isinstance(x, (Fraction, int)) for x in pts)
    if exact:
        pts = sorted(Fraction(x) for x in pts)
    else:
        pts = sorted(float(x) for x in pts)
    if pts[0] < 0 or pts[-1] >= 1:
        raise ValueError("points must lie in [0, 1)")
    N = len(pts)
    if exact:
        return float(_discrepancy_exact(pts))
    x = np.asarray(pts)
    i = np.arange(1, N + 1)
    return float(max(np.max(i / N - x), np.max(x - (i - 1) / N)))


def _discrepancy_exact(sorted_pts) -> Fraction:
    N = len(sorted_pts)
    best = Fraction(0)
    for i, x in enumerate(sorted_pts, start=1):
        best = max(best, Fraction(i, N) - x, x - Fraction(i - 1, N))
    return best


def discrepancy_residues(r, q: int) -> Fraction:
    """Exact star discrepancy of the points r_i / q."""
    r = sorted(int(x) for x in r)
    N = len(r)
    if N == 0:
        raise ValueError("discrepancy needs at least one point")
    # i/N - r/q = (i q - r N) / (N q)
    best = 0
    for i, x in enumerate(r, start=1):
        best = max(best, i * q - x * N, x * N - (i - 1) * q)
    return Fraction(best, N * q)


def spec_discrepancy(spec: SequenceSpec) -> float:
    return float(discrepancy_residues(spec.residues(), spec.q))


def erdos_turan_bound(spec: SequenceSpec, H: int) -> float:
    """3 (1/(H+1) + sum_{h<=H} |E_h| / (h N)) with E_h the Weyl sums of h alpha."""
    if H < 1:
        raise ValueError("H must be >= 1")
    qa = _den(spec.alpha)
    tail = math.fsum(
        abs(_weyl_from_residues(quad_residues(spec.alpha, 0, spec.N, 1, h), qa)) / (h * spec.N)
        for h in range(1, H + 1)
    )
    return 3.0 * (1.0 / (H + 1) + tail)


def _within(r, q: int, epsilon: Fraction):
    epsilon = Fraction(epsilon)
    if q < _INT64_SAFE and epsilon.denominator < _INT64_SAFE:
        r = np.asarray(r, dtype=np.int64)
        dist = np.minimum(r, q - r)
        # dist/q <= num/den with exact integers; dist*den may exceed int64 so use object
        lhs = dist.astype(object) * epsilon.denominator
        return np.array(lhs <= epsilon.numerator * q, dtype=bool)
    return np.array(
        [min(int(x), q - int(x)) * epsilon.denominator <= epsilon.numerator * q for x in r],
        dtype=bool,
    )


def cluster_members(spec: SequenceSpec, epsilon) -> list[int]:
    """All 0 <= n <= N with ||alpha n^2 + beta|| <= epsilon, increasing."""
    epsilon = Fraction(epsilon)
    if not 0 <= epsilon <= Fraction(1, 2):
        raise ValueError("epsilon must lie in [0, 1/2]")
    r = spec.residues(start=0)
    mask = _within(r, spec.q, epsilon)
    return [int(n) for n in np.nonzero(mask)[0]]


def cluster_count(spec: SequenceSpec, epsilon) -> int:
    return len(cluster_members(spec, epsilon))


@dataclass
class SpacingStats:
    scaled_gaps: np.ndarray
    histogram: np.ndarray
    bin_edges: np.ndarray
    s_grid: np.ndarray
    pair_correlation: np.ndarray

    @property
    def mean_gap(self) -> float:
        return math.fsum(self.scaled_gaps) / len(self.scaled_gaps)


def spacing_stats(spec: SequenceSpec, bins: int = 20, s_max: float = 3.0, s_steps: int = 30):
    """Circular scaled gaps and the pair-correlation count R2(s).

    Reporting only; no Poisson limit is asserted.
    """
    N = spec.N
    if N < 2:
        raise ValueError("spacing_stats needs N >= 2")
    q = spec.q
    r = np.sort(np.asarray(spec.residues(), dtype=np.int64))
    gaps = np.diff(np.concatenate([r, [r[0] + q]]))
    scaled = gaps.astype(float) * N / q
    hist, edges = np.histogram(scaled, bins=bins, range=(0.0, max(4.0, float(scaled.max()))))
    x = r.astype(float) / q
    diff = np.abs(x[:, None] - x[None, :])
    circ = np.minimum(diff, 1.0 - diff)
    np.fill_diagonal(circ, np.inf)
    s_grid = np.linspace(s_max / s_steps, s_max, s_steps)
    flat = np.sort(circ.ravel())
    counts = np.searchsorted(flat, s_grid / N, side="right")
    return SpacingStats(scaled, hist, edges, s_grid, counts / N)


def weyl_shape(N: int, p: int, delta2: Fraction, delta3: Fraction) -> float:
    """N (p^-delta2 + 1/N + p^delta3 / N^2)^(1/2), the Weyl-inequality shape at epsilon = 0."""
    return N * math.sqrt(p ** (-float(delta2)) + 1.0 / N + p ** float(delta3) / N**2)


CSV_FIELDS = [
    "alpha", "beta", "N", "H", "discrepancy", "et_bound", "epsilon", "cluster_count",
    "mean_scaled_gap", "histogram",
]


def csv_rows(specs, H: int, epsilon) -> list[dict]:
    rows = []
    for spec in specs:
        row = {
            "alpha": str(spec.alpha),
            "beta": str(spec.beta),
            "N": spec.N,
            "H": H,
            "discrepancy": spec_discrepancy(spec),
            "et_bound": erdos_turan_bound(spec, H),
            "epsilon": str(Fraction(epsilon)),
            "cluster_count": cluster_count(spec, epsilon),
            "mean_scaled_gap": "",
            "histogram": "",
        }
        if spec.N >= 2:
            st = spacing_stats(spec)
            row["mean_scaled_gap"] = st.mean_gap
            row["histogram"] = " ".join(str(int(c)) for c in st.histogram)
        rows.append(row)
    return rows


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_FIELDS)
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()
