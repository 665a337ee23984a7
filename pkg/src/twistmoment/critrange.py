"""Short sums of products of Salie sums in the critical range.

Computes the left side by brute force, re-expresses it through the
coefficients A_{l,c} and the pair sets S_l, classifies the large-A residues
by the continued fractions of h * conj(l)^2 / p, and checks every identity
and inequality along the way.

Conventions:

* ``j = 1`` is the quadratic-residue branch, ``j`` = least non-residue the
  other one.  For the branch j the cluster sequence is
  alpha n^2 + beta with alpha = conj(j) conj(l)^2 / p, beta = j l^2 / p and n
  the integer difference of the two window elements.
* Thresholds p^delta with delta = s/t are compared as b^t against p^s.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .contfrac import expand
from .equidist import SequenceSpec, cluster_members
from .errors import IdentityViolation, ParameterError
from .fp_core import PrimeContext, e_frac_array, get_context, is_prime, rsum
from .expsums import salie_closed_array, salie_direct

REFERENCE_DELTA = (
    Fraction(11, 288),
    Fraction(11, 48),
    Fraction(25, 36),
    Fraction(407, 432),
    Fraction(11, 96),
    Fraction(11, 96),
)

FAULTS = (
    "salie_sign",
    "drop_root",
    "parseval_shift",
    "triangle",
    "misclassify",
    "diophantine",
    "injectivity",
)


def _ge_pow(b: int, p: int, delta: Fraction) -> bool:
    """b >= p^delta, exactly (b >= 0)."""
    return b**delta.denominator >= p**delta.numerator


def _le_pow(b: int, p: int, delta: Fraction) -> bool:
    return b**delta.denominator <= p**delta.numerator


def _lt_pow(b: int, p: int, delta: Fraction) -> bool:
    return not _ge_pow(b, p, delta)


def _floor_pow(p: int, delta: Fraction) -> int:
    """Largest integer h with h <= p^delta."""
    h = max(1, int(p ** float(delta)))
    while not _le_pow(h, p, delta):
        h -= 1
    while _le_pow(h + 1, p, delta):
        h += 1
    return h


@dataclass
class CritRangeParams:
    p: int
    c: int
    M: int
    N: int
    delta: tuple = REFERENCE_DELTA
    n_mod4: Optional[int] = None
    m_mod4: Optional[int] = None
    strict: bool = False

    def __post_init__(self):
        self.delta = tuple(Fraction(d) for d in self.delta)
        failures = self.structural_failures()
        if self.strict:
            failures += [k for k, ok in self.size_conditions().items() if not ok]
        if failures:
            raise ParameterError(failures)

    @property
    def ctx(self) -> PrimeContext:
        return get_context(self.p)

    def structural_failures(self) -> list[str]:
        p, N, M = self.p, self.N, self.M
        out = []
        if not (is_prime(p) and p % 4 == 1):
            out.append(f"p = {p} must be a prime with p = 1 mod 4")
        if self.c % p == 0:
            out.append("c must be a unit mod p")
        if not (1 <= M and 2 * M <= p):
            out.append(f"need 1 <= M <= p/2, got M = {M}")
        if not (N**5 >= p**2 and N**5 <= p**3):
            out.append(f"need p^(2/5) <= N <= p^(3/5), got N = {N}")
        if len(self.delta) != 6:
            out.append("delta must have 6 entries")
            return out
        for i, d in enumerate(self.delta, start=1):
            if not 0 < d < 1:
                out.append(f"delta{i} = {d} not in (0, 1)")
        d1, d2, d3, d4, d5, d6 = self.delta
        if not (d2 < d3 < d4):
            out.append("condition (cond): need delta2 < delta3 < delta4")
        if _le_pow(N, p, d6):
            out.append("condition (cond): need p^delta6 < N")
        for name, cls in (("n_mod4", self.n_mod4), ("m_mod4", self.m_mod4)):
            if cls is not None and cls not in range(4):
                out.append(f"{name} must be in 0..3")
        return out

    def size_conditions(self) -> dict:
        """16 N p^(delta2 + delta5) < p/2, reported rather than enforced by default."""
        s = self.delta[1] + self.delta[4]
        # 32 N p^(s) < p  <=>  (32 N)^t p^num < p^t
        ok = (32 * self.N) ** s.denominator * self.p**s.numerator < self.p**s.denominator
        return {"condition (cond): 16 N p^(delta2+delta5) < p/2": ok}

    def m_window(self) -> np.ndarray:
        ms = np.arange(self.M, 2 * self.M + 1, dtype=np.int64)
        if self.m_mod4 is not None:
            ms = ms[ms % 4 == self.m_mod4]
        return ms

    def n_window(self) -> np.ndarray:
        ns = np.arange(self.N, 2 * self.N + 1, dtype=np.int64)
        if self.n_mod4 is not None:
            ns = ns[ns % 4 == self.n_mod4]
        return ns

    def echo(self) -> dict:
        return {
            "p": self.p,
            "c": self.c,
            "M": self.M,
            "N": self.N,
            "delta": [str(d) for d in self.delta],
            "n_mod4": self.n_mod4,
            "m_mod4": self.m_mod4,
            "strict": self.strict,
        }


def least_nonresidue(ctx: PrimeContext) -> int:
    for a in range(2, ctx.p):
        if ctx.dlog[a] % 2:
            return a
    raise ValueError("no non-residue")


# left side and its direct root-sum form


def lhs_bruteforce(params: CritRangeParams, fault: Optional[str] = None) -> float:
    """sum_{n1,n2} |sum_m S(m, c n1, p) conj(S(m, c n2, p))| via the closed form."""
    ctx = params.ctx
    ms, ns = params.m_window(), params.n_window()
    S = salie_closed_array(ms[:, None], (params.c * ns)[None, :], ctx)
    if fault == "salie_sign":
        S = S.copy()
        i, k = np.argwhere(np.abs(S) > 1e-9)[0]
        S[i, k] = -S[i, k] + 1.0
    G = S.T @ S.conj()
    return rsum(np.abs(G))


def lhs_definitional(params: CritRangeParams) -> float:
    """Same sum from term-by-term Salie sums; oracle for tiny parameters."""
    p = params.p
    ms, ns = params.m_window(), params.n_window()
    S = np.array(
        [[salie_direct(int(m), int(params.c * n), p) for n in ns] for m in ms]
    )
    return rsum(np.abs(S.T @ S.conj()))


def root_matrix(params: CritRangeParams) -> np.ndarray:
    """T[m, n] = sum_{x^2 = c m n} e(2x/p) (real since -1 is a square)."""
    ctx = params.ctx
    p = params.p
    ms, ns = params.m_window(), params.n_window()
    mn = (params.c * ms[:, None] % p) * (ns[None, :] % p) % p
    roots = ctx.sqrt_table[mn]
    vals = 2.0 * e_frac_array(2 * np.where(roots > 0, roots, 0), p).real
    return np.where(roots > 0, vals, 0.0)


def r_direct(params: CritRangeParams) -> dict:
    """R and its split by the residue class of n1, n2 computed from T."""
    T = root_matrix(params)
    G = np.abs(T.T @ T)
    ns = params.n_window()
    qr = params.ctx.residue_mask[ns % params.p]
    same_qr = np.outer(qr, qr)
    same_nr = np.outer(~qr, ~qr)
    cross = ~(same_qr | same_nr)
    return {
        "r": rsum(G),
        "r1": rsum(G[same_qr]),
        "rm1": rsum(G[same_nr]),
        "cross": rsum(G[cross]),
        "cross_max": float(G[cross].max()) if cross.any() else 0.0,
    }


# A coefficients and pair sets


def a_vector(params: CritRangeParams, j: int = 1) -> np.ndarray:
    """A_{l, c j} for l = 0..p-1."""
    p = params.p
    ctx = params.ctx
    ms = params.m_window()
    cm = (params.c * j % p) * (ms % p) % p
    roots = ctx.sqrt_table[cm]
    roots = roots[roots > 0]
    ell = np.arange(p, dtype=np.int64)
    if roots.size == 0:
        return np.zeros(p)
    # t and -t together give 2 cos(4 pi t l / p)
    phases = (2 * roots[:, None] % p) * ell[None, :] % p
    return 2.0 * np.array([rsum(col) for col in e_frac_array(phases, p).real.T])


def a_ell(ell: int, params: CritRangeParams, j: int = 1) -> complex:
    """A_{l, c j} by direct summation over m and both roots t."""
    p = params.p
    terms = []
    for m in params.m_window():
        cm = params.c * j * int(m) % p
        r = int(params.ctx.sqrt_table[cm])
        if r <= 0:
            continue
        for t in (r, p - r):
            terms.append(e_frac_array(np.array([2 * t * ell]), p)[0])
    return complex(sum(terms)) if terms else 0j


def root_count(params: CritRangeParams, j: int = 1) -> int:
    """#{(m, t): t^2 = c j m, m in the window}."""
    ctx = params.ctx
    cm = (params.c * j % params.p) * (params.m_window() % params.p) % params.p
    return 2 * int(np.count_nonzero(ctx.sqrt_table[cm] > 0))


def _window_roots(params: CritRangeParams, j: int) -> list[tuple[int, int]]:
    """(u, X) with j u^2 = X (mod p), X in the n window."""
    p = params.p
    ctx = params.ctx
    jbar = int(ctx.inv[j % p])
    out = []
    for X in params.n_window():
        X = int(X)
        r = int(ctx.sqrt_table[jbar * X % p])
        if r > 0:
            out.append((r, X))
            out.append((p - r, X))
    return out


def s_ell_set(ell: int, params: CritRangeParams, j: int = 1) -> set[tuple[int, int]]:
    """All (u, v) with (j u^2, j v^2) mod p in the window and u + v = l."""
    p = params.p
    us = _window_roots(params, j)
    ell %= p
    table = {u: X for u, X in us}
    return {(u, (ell - u) % p) for u, _ in us if (ell - u) % p in table}


def s_pairs_by_ell(params: CritRangeParams, j: int = 1) -> dict[int, list]:
    """l -> list of (u, v, X, Y) for every pair in S_l."""
    p = params.p
    us = _window_roots(params, j)
    out: dict[int, list] = defaultdict(list)
    for u, X in us:
        for v, Y in us:
            out[(u + v) % p].append((u, v, X, Y))
    return out


def r_branch(params: CritRangeParams, A: np.ndarray, j: int = 1, fault=None) -> float:
    """R_{+1} (j = 1) or R_{-1} (j non-residue) through A_{u+v}.

    Each pair of square roots is reached from both t and -t, so the sum over
    (t, u, v) is twice the restricted part of R; the factor 1/2 undoes that.
    """
    p = params.p
    by_X = defaultdict(list)
    for u, X in _window_roots(params, j):
        by_X[X].append(u)
    Xs = sorted(by_X)
    if not Xs:
        return 0.0
    U = np.array([by_X[X] for X in Xs], dtype=np.int64)
    if fault == "drop_root":
        U = U[:, :1]
    idx = (U[:, :, None, None] + U[None, None, :, :]) % p
    inner = A[idx].sum(axis=(1, 3))
    return 0.5 * rsum(np.abs(inner))


# continued fraction classification


@dataclass
class EllClassification:
    ell: int
    cls: str
    witness_h: Optional[int] = None
    witness_convergent: Optional[tuple] = None
    lower_convergent: Optional[tuple] = None
    alpha_num: int = 0

    def to_dict(self):
        return asdict(self)


def alpha_beta(ell: int, params: CritRangeParams, j: int = 1) -> tuple[int, int]:
    """Numerators of alpha = conj(j) conj(l)^2 / p and beta = j l^2 / p."""
    p = params.p
    inv = params.ctx.inv
    lb = int(inv[ell % p])
    jb = int(inv[j % p])
    return jb * lb * lb % p, j * ell * ell % p


def _h_range(params: CritRangeParams) -> range:
    return range(1, _floor_pow(params.p, params.delta[4]) + 1)


def _has_conv_between(cf, p, lo: Fraction, hi: Fraction, hi_open=False):
    for a, b in cf.convergents:
        if _ge_pow(b, p, lo) and (_lt_pow(b, p, hi) if hi_open else _le_pow(b, p, hi)):
            return (a, b)
    return None


def classify_ell(ell: int, params: CritRangeParams, j: int = 1) -> EllClassification:
    p = params.p
    d2, d3, d4 = params.delta[1], params.delta[2], params.delta[3]
    a_num, _ = alpha_beta(ell, params, j)
    first_h1_fail = None
    for h in _h_range(params):
        cf = expand(h * a_num, p)
        if _has_conv_between(cf, p, d2, d4) is None:
            # denominators can repeat at the start (1, 1), so take the last index
            i = max(k for k, c in enumerate(cf.convergents) if _lt_pow(c[1], p, d2))
            lower, nxt = cf.convergents[i], cf.convergents[i + 1]
            return EllClassification(ell, "H2", h, nxt, lower, a_num)
        if first_h1_fail is None and _has_conv_between(cf, p, d2, d3) is None:
            first_h1_fail = h
    if first_h1_fail is None:
        return EllClassification(ell, "H1", None, None, None, a_num)
    h = first_h1_fail
    cf = expand(h * a_num, p)
    star = min(
        (c for c in cf.convergents if not _le_pow(c[1], p, d3) and _le_pow(c[1], p, d4)),
        key=lambda c: c[1],
    )
    lower = cf.convergents[cf.convergents.index(star) - 1]
    return EllClassification(ell, "H3", h, star, lower, a_num)


def verify_classification(cl: EllClassification, params: CritRangeParams, j: int = 1) -> bool:
    """Independent re-derivation of the class from the definitions."""
    p = params.p
    d2, d3, d4 = params.delta[1], params.delta[2], params.delta[3]
    a_num, _ = alpha_beta(cl.ell, params, j)
    dens = {h: [b for _, b in expand(h * a_num, p).convergents] for h in _h_range(params)}

    def any_in(h, lo, hi):
        return any(_ge_pow(b, p, lo) and _le_pow(b, p, hi) for b in dens[h])

    in_h1 = all(any_in(h, d2, d3) for h in dens)
    in_h2 = any(not any_in(h, d2, d4) for h in dens)
    expected = "H1" if in_h1 else ("H2" if in_h2 else "H3")
    if expected != cl.cls:
        return False
    if cl.cls == "H2":
        b, bs = cl.lower_convergent[1], cl.witness_convergent[1]
        return _lt_pow(b, p, d2) and not _le_pow(bs, p, d4)
    if cl.cls == "H3":
        bs = cl.witness_convergent[1]
        return (
            not _le_pow(bs, p, d3)
            and _le_pow(bs, p, d4)
            and not any_in(cl.witness_h, d2, d3)
        )
    return True


# clusters, gaps, algebraic sets


@dataclass
class GapData:
    V: list
    d: int
    multiplicity: int
    square_bound_holds: bool
    rigorous_bound_holds: bool


def v_ell(ell: int, params: CritRangeParams, j: int = 1) -> list[int]:
    a_num, b_num = alpha_beta(ell, params, j)
    spec = SequenceSpec(Fraction(a_num, params.p), Fraction(b_num, params.p), params.N)
    # 8N/p can exceed 1/2 at tiny p; then every n qualifies
    eps = min(Fraction(8 * params.N, params.p), Fraction(1, 2))
    return cluster_members(spec, eps)


def v_ell_and_gap(ell: int, params: CritRangeParams, j: int = 1, V=None) -> GapData:
    """Most frequent small consecutive gap of V_l and its multiplicity."""
    N = params.N
    if V is None:
        V = v_ell(ell, params, j)
    k = len(V)
    if k < 2:
        raise ValueError(f"|V_l| = {k} < 2: no gaps")
    gaps = [b - a for a, b in zip(V, V[1:])]
    small = Counter(g for g in gaps if g * k <= 2 * N)
    d, mult = min(small.items(), key=lambda kv: (-kv[1], kv[0]))
    return GapData(
        V,
        d,
        mult,
        square_bound_holds=4 * N * mult >= k * k,
        rigorous_bound_holds=4 * N * mult >= k * (k - 2),
    )


def _signed_reps(r: int, p: int, bound: int) -> list[int]:
    """Integers A = r mod p with |A| <= bound."""
    lo = -bound
    first = lo + ((r - lo) % p)
    return list(range(first, bound + 1, p))


def algebraic_set(ell: int, params: CritRangeParams, d: int, j: int = 1) -> list[tuple]:
    """(n, A, B) with n in [1, N], |A|, |B| <= 8N matching both congruences."""
    p, N = params.p, params.N
    a_num, b_num = alpha_beta(ell, params, j)
    out = []
    for n in range(1, N + 1):
        ra = (a_num * n * n + b_num) % p
        rb = (a_num * (n + d) * (n + d) + b_num) % p
        for A in _signed_reps(ra, p, 8 * N):
            for B in _signed_reps(rb, p, 8 * N):
                out.append((n, A, B))
    return out


@dataclass
class Embedding:
    t: int
    mu: int
    r: int
    g: int
    mu_bound_holds: bool
    r_bound_holds: bool
    g_bound_holds: bool

    @property
    def in_T(self) -> bool:
        return self.g != 0 and self.r_bound_holds and self.g_bound_holds


def progression_embed(
    ell: int, params: CritRangeParams, triple, d: int, cl: EllClassification, V: int, j: int = 1
) -> Embedding:
    p, N = params.p, params.N
    n, A, B = triple
    if (A - B) % p == 0:
        raise ValueError("A = B mod p: handled by the direct count")
    if cl.cls != "H3":
        raise ValueError("progression_embed needs an H3 classification")
    h = cl.witness_h
    b = cl.lower_convergent[1]
    U = cl.witness_convergent[1]
    mu = b * h * cl.alpha_num % p
    if 2 * mu > p:
        mu -= p
    t = mu * (2 * n * d + d * d)
    g = b * h * (B - A)
    if (t - g) % p:
        raise IdentityViolation("progression congruence", f"l={ell} n={n} t={t} g={g}")
    r = (t - g) // p
    s = params.delta[1] + params.delta[4]
    return Embedding(
        t=t,
        mu=mu,
        r=r,
        g=g,
        mu_bound_holds=abs(mu) * U <= p,
        r_bound_holds=(abs(r) - 1) * U * V <= 36 * N * N,
        g_bound_holds=abs(g) ** s.denominator <= (16 * N) ** s.denominator * p**s.numerator,
    )


def pair_checks(ell: int, pairs, params: CritRangeParams, j: int = 1, V=None) -> tuple[int, int]:
    """Violations of the defining relations / cluster property, and of injectivity.

    ``pairs`` holds (u, v, X, Y) with j u^2 = X, j v^2 = Y.  Each pair must
    satisfy u + v = l, the literal cluster inequality for
    alpha_{l,j} (u^2 - v^2)^2 + beta_{l,j} and |X - Y| in V_l.  Injectivity:
    the signed difference X - Y determines the pair.
    """
    p, N = params.p, params.N
    _, b_num = alpha_beta(ell, params, j)
    a_lit = j * pow(ell, -2, p) % p
    if V is None:
        V = v_ell(ell, params, j)
    Vset = set(V)
    window = set(int(n) for n in params.n_window())
    dio = 0
    seen = Counter()
    for u, v, X, Y in pairs:
        if (u + v - ell) % p or (j * u * u - X) % p or (j * v * v - Y) % p:
            dio += 1
        if X not in window or Y not in window:
            dio += 1
        w = (u * u - v * v) % p
        r = (a_lit * w * w + b_num) % p
        if min(r, p - r) > 8 * N:
            dio += 1
        if abs(X - Y) not in Vset:
            dio += 1
        seen[X - Y] += 1
    inj = int(any(k > 1 for k in seen.values()) or len(pairs) > 2 * len(V))
    return dio, inj


# report


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class BranchReport:
    j: int
    r: float
    a_s_sum: float
    trivial_zero: float
    moment_a: float
    root_count: int
    L_size: int
    chebyshev_rhs: float
    class_sums: dict
    class_sizes: dict
    classifications: list = field(default_factory=list)
    gap_stats: dict = field(default_factory=dict)
    fiber_max: int = 0
    embeddings: int = 0
    embeddings_in_T: int = 0


@dataclass
class CritRangeReport:
    params: dict
    lhs: float
    r: float
    r1: float
    rm1: float
    cross: float
    h1_sum: float
    h2_sum: float
    h3_sum: float
    moment_a: float
    sizes: dict
    rhs_bound: float
    ratio: float
    size_conditions: dict
    checks: list
    branches: list

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        d["size_conditions"] = {k: bool(v) for k, v in self.size_conditions.items()}
        return d


def rhs_bound(p: int, M: int, N: int) -> float:
    """Right side of the critical-range bound with constant 1 and epsilon = 0."""
    terms = [
        M * N**2 * p ** (26 / 27),
        M * N * p ** (79 / 54),
        N**2 * p ** (79 / 54),
        N * p ** (53 / 27),
        N**0.5 * p ** (239 / 108),
        p ** (133 / 54),
    ]
    return math.fsum(terms)


def _rel(a: float, b: float) -> float:
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


def _branch_report(params: CritRangeParams, j: int, checks: list, fault=None) -> BranchReport:
    p, M = params.p, params.M
    tag = "+1" if j == 1 else "-1"
    A = a_vector(params, j)
    absA = np.abs(A)
    if fault == "parseval_shift":
        A = A.copy()
        A[1] += 1.0
    pairs = s_pairs_by_ell(params, j)
    S_counts = np.zeros(p, dtype=np.int64)
    for ell, lst in pairs.items():
        S_counts[ell] = len(lst)
    if fault == "triangle":
        S_counts[:] = 0
    a_s = rsum(absA * S_counts)
    rb = r_branch(params, a_vector(params, j), j, fault=fault)
    checks.append(Check(f"triangle[{tag}]", 2 * rb <= a_s * (1 + 1e-12) + 1e-9,
                        f"2R={2 * rb:.6g} sum|A||S|={a_s:.6g}"))
    mom = rsum(np.abs(A) ** 2)
    rc = root_count(params, j)
    checks.append(Check(f"parseval[{tag}]", _rel(mom, p * rc) <= 1e-8,
                        f"sum|A|^2={mom:.12g} p*#(m,t)={p * rc}"))
    d1 = float(params.delta[0])
    thresh = M * p ** (-d1)
    L = [ell for ell in range(1, p) if absA[ell] >= thresh]
    cheb = rsum((absA * p**d1 / M) ** 2)
    checks.append(Check(f"chebyshev[{tag}]", len(L) <= cheb + 1e-9,
                        f"|L|={len(L)} bound={cheb:.6g}"))
    class_sums = {"H1": 0.0, "H2": 0.0, "H3": 0.0}
    class_terms = {"H1": [], "H2": [], "H3": []}
    sizes = {"H1": 0, "H2": 0, "H3": 0}
    cls_list = []
    dio_viol = inj_viol = 0
    target = min((ell for ell in pairs if ell), default=None)
    for ell in sorted(pairs):
        if ell == 0:
            continue
        lst = pairs[ell]
        if fault == "diophantine" and ell == target:
            u, v, X, Y = lst[0]
            lst = [(u, (v + 1) % p, X, Y)] + lst[1:]
        if fault == "injectivity" and ell == target:
            lst = lst + [lst[0]]
        d_v, i_v = pair_checks(ell, lst, params, j)
        dio_viol += d_v
        inj_viol += i_v
    reclass_viol = 0
    gap_square_fail = gap_rig_fail = 0
    fibers: dict[int, set] = defaultdict(set)
    n_embed = n_in_T = 0
    mu_fail = 0
    for ell in L:
        cl = classify_ell(ell, params, j)
        if fault == "misclassify" and ell == L[0]:
            cl.cls = {"H1": "H2", "H2": "H3", "H3": "H1"}[cl.cls]
        if not verify_classification(cl, params, j):
            reclass_viol += 1
        sizes[cl.cls] += 1
        class_terms[cl.cls].append(absA[ell] * S_counts[ell])
        cls_list.append(cl.to_dict())
        V = v_ell(ell, params, j)
        if cl.cls == "H3" and len(V) >= 2:
            gd = v_ell_and_gap(ell, params, j, V)
            gap_square_fail += not gd.square_bound_holds
            gap_rig_fail += not gd.rigorous_bound_holds
            for triple in algebraic_set(ell, params, gd.d, j):
                n, Aa, Bb = triple
                if (Aa - Bb) % p == 0:
                    continue
                emb = progression_embed(ell, params, triple, gd.d, cl, len(V), j)
                n_embed += 1
                n_in_T += emb.in_T
                mu_fail += not emb.mu_bound_holds
                fibers[emb.t].add((ell, n, Aa, Bb))
    for k in class_terms:
        class_sums[k] = rsum(class_terms[k])
    checks.append(Check(f"partition[{tag}]",
                        sum(sizes.values()) == len(L) and reclass_viol == 0,
                        f"sizes={sizes} |L|={len(L)} reclass_violations={reclass_viol}"))
    checks.append(Check(f"diophantine[{tag}]", dio_viol == 0, f"violations={dio_viol}"))
    checks.append(Check(f"injectivity[{tag}]", inj_viol == 0, f"violations={inj_viol}"))
    checks.append(Check(f"gap_pigeonhole[{tag}]", gap_rig_fail == 0,
                        f"rigorous_failures={gap_rig_fail} square_form_failures={gap_square_fail}"))
    checks.append(Check(f"mu_bound[{tag}]", mu_fail == 0, f"failures={mu_fail}"))
    return BranchReport(
        j=j,
        r=rb,
        a_s_sum=a_s,
        trivial_zero=float(absA[0] * S_counts[0]),
        moment_a=mom,
        root_count=rc,
        L_size=len(L),
        chebyshev_rhs=cheb,
        class_sums=class_sums,
        class_sizes=sizes,
        classifications=cls_list,
        gap_stats={"square_form_failures": gap_square_fail, "rigorous_failures": gap_rig_fail},
        fiber_max=max((len(v) for v in fibers.values()), default=0),
        embeddings=n_embed,
        embeddings_in_T=n_in_T,
    )


def run_report(params: CritRangeParams, fault: Optional[str] = None) -> CritRangeReport:
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {', '.join(FAULTS)}")
    p = params.p
    checks: list[Check] = []
    lhs = lhs_bruteforce(params, fault=fault)
    rd = r_direct(params)
    checks.append(Check("lhs_eq_pR", _rel(lhs, p * rd["r"]) <= 1e-8,
                        f"lhs={lhs:.12g} pR={p * rd['r']:.12g}"))
    checks.append(Check("cross_pairs_zero", rd["cross_max"] == 0.0,
                        f"max cross entry={rd['cross_max']}"))
    j = least_nonresidue(params.ctx)
    b1 = _branch_report(params, 1, checks, fault)
    bm = _branch_report(params, j, checks, fault)
    checks.append(Check("r_split", _rel(rd["r"], b1.r + bm.r) <= 1e-10,
                        f"R={rd['r']:.12g} R1+R-1={b1.r + bm.r:.12g}"))
    rhs = rhs_bound(p, params.M, params.N)
    return CritRangeReport(
        params=params.echo(),
        lhs=lhs,
        r=rd["r"],
        r1=b1.r,
        rm1=bm.r,
        cross=rd["cross"],
        h1_sum=b1.class_sums["H1"] + bm.class_sums["H1"],
        h2_sum=b1.class_sums["H2"] + bm.class_sums["H2"],
        h3_sum=b1.class_sums["H3"] + bm.class_sums["H3"],
        moment_a=b1.moment_a,
        sizes={
            "L": b1.L_size + bm.L_size,
            "H1": b1.class_sizes["H1"] + bm.class_sizes["H1"],
            "H2": b1.class_sizes["H2"] + bm.class_sizes["H2"],
            "H3": b1.class_sizes["H3"] + bm.class_sizes["H3"],
        },
        rhs_bound=rhs,
        ratio=lhs / rhs,
        size_conditions=params.size_conditions(),
        checks=checks,
        branches=[b1, bm],
    )
