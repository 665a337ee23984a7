"""Salie, twisted Kloosterman, Ramanujan and quadratic Weyl sums.

Characters are passed as plain callables ``int -> complex``; a
:class:`~twistmoment.characters.DirichletCharacter` or a
:class:`~twistmoment.characters.Mod4Character` both work.  ``None`` means the
principal character of the relevant modulus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import IdentityViolation
from .fp_core import (
    PrimeContext,
    csum,
    divisors,
    e_frac,
    e_frac_array,
    eps,
    jacobi,
    kronecker,
    mobius,
    tonelli_shanks,
)

Character = Optional[Callable[[int], complex]]

NONRESIDUE = "nonresidue"


@dataclass(frozen=True)
class SalieValue:
    value: complex
    vanishing_reason: Optional[str] = None

    def __post_init__(self):
        if self.vanishing_reason == NONRESIDUE and self.value != 0:
            raise ValueError("nonresidue vanishing requires value 0")

    def __complex__(self):
        return complex(self.value)


def _chi(psi: Character, x: int) -> complex:
    return 1.0 if psi is None else psi(x)


def salie_direct(m: int, n: int, q: int, psi: Character = None) -> complex:
    """S_psi(m, n; q) summed term by term over units x mod q."""
    if q % 2 == 0 or q < 1:
        raise ValueError(f"Salie sums need an odd modulus, got {q}")
    if q == 1:
        return 1 + 0j
    terms = []
    for x in range(1, q):
        if math.gcd(x, q) != 1:
            continue
        xbar = pow(x, -1, q)
        w = jacobi(x, q) * _chi(psi, x)
        if w == 0:
            continue
        terms.append(w * e_frac(m * x + n * xbar, q))
    return csum(terms)


def salie_closed(m: int, n: int, ctx: PrimeContext) -> SalieValue:
    """Closed-form Salie sum S(m, n; p) for p not dividing mn."""
    p = ctx.p
    if (m * n) % p == 0:
        raise ValueError("closed-form Salie sum needs (mn, p) = 1")
    mn = (m * n) % p
    if ctx.dlog[mn] % 2:
        return SalieValue(0j, NONRESIDUE)
    if ctx.sqrt_table is not None:
        root = int(ctx.sqrt_table[mn])
    else:
        root = tonelli_shanks(mn, p)
    # x and -x both solve x^2 = mn: e(2x/p) + e(-2x/p) = 2cos(4 pi x / p)
    s = 2.0 * e_frac(2 * root, p).real
    ln = 1 if ctx.dlog[n % p] % 2 == 0 else -1
    val = ln * complex(eps(p).value) * math.sqrt(p) * s
    return SalieValue(val, None)


def salie_closed_array(m, n, ctx: PrimeContext) -> np.ndarray:
    """Vectorised closed form over broadcastable integer arrays m, n.

    Entries with p | mn are returned as nan.
    """
    p = ctx.p
    m = np.asarray(m, dtype=np.int64) % p
    n = np.asarray(n, dtype=np.int64) % p
    mn = (m * n) % p
    if ctx.sqrt_table is None:
        raise ValueError("salie_closed_array needs a square-root table")
    roots = ctx.sqrt_table[mn]
    ln = np.where(ctx.dlog[n] % 2 == 0, 1.0, -1.0)
    twice_cos = 2.0 * e_frac_array(2 * np.where(roots > 0, roots, 0), p).real
    out = np.where(roots > 0, ln * twice_cos, 0.0) * math.sqrt(p)
    out = out.astype(complex) * complex(eps(p).value)
    out[mn == 0] = np.nan
    return out


def kloosterman_twisted(kappa: int, chi: Character, m: int, n: int, c: int) -> complex:
    """K_{kappa,chi}(m, n; c) over units d in [1, c)."""
    if c % 4:
        raise ValueError(f"twisted Kloosterman sums need 4 | c, got {c}")
    if kappa % 2 == 0:
        raise ValueError(f"kappa must be odd, got {kappa}")
    terms = []
    for d in range(1, c):
        if math.gcd(d, c) != 1:
            continue
        w = eps(d).power(-kappa) * kronecker(c, d) * _chi(chi, d)
        if w == 0:
            continue
        dbar = pow(d, -1, c)
        terms.append(w * e_frac(m * d + n * dbar, c))
    return csum(terms)


def twisted_mult_factor(
    kappa: int,
    m: int,
    n: int,
    q: int,
    r: int,
    psi_r: Character = None,
    psi_q: Character = None,
) -> tuple[complex, complex]:
    """Both sides of the twisted multiplicativity for c = q r.

    ``left`` is K_{kappa,psi}(m, n; qr) with psi = psi_r psi_q, ``right`` is
    K_{kappa-q+1,psi_r}(m qbar, n qbar; r) S_{psi_q}(m rbar, n rbar; q).
    Inverses are least nonnegative representatives.
    """
    if r % 4 or q % 2 == 0 or q < 1 or math.gcd(q, r) != 1:
        raise ValueError(f"need 4 | r, q odd, gcd(q, r) = 1; got q={q}, r={r}")
    c = q * r

    def psi(d):
        return _chi(psi_r, d) * _chi(psi_q, d)

    left = kloosterman_twisted(kappa, psi, m, n, c)
    qbar = pow(q, -1, r) if r > 1 else 0
    rbar = pow(r, -1, q) if q > 1 else 0
    k_part = kloosterman_twisted(kappa - q + 1, psi_r, m * qbar, n * qbar, r)
    s_part = salie_direct(m * rbar, n * rbar, q, psi_q)
    return left, k_part * s_part


def check_twisted_mult(kappa, m, n, q, r, psi_r=None, psi_q=None, tol=1e-9) -> float:
    left, right = twisted_mult_factor(kappa, m, n, q, r, psi_r, psi_q)
    err = abs(left - right)
    if err > tol:
        raise IdentityViolation(
            "twisted multiplicativity",
            f"kappa={kappa} m={m} n={n} q={q} r={r}: {left} vs {right}",
        )
    return err


def weyl_sum(alpha, h: int, N: int, beta=0) -> complex:
    """sum_{1<=n<=N} e(h alpha n^2 + beta) with alpha, beta rational."""
    if N < 1:
        raise ValueError("weyl_sum needs N >= 1")
    a = Fraction(alpha) * h
    b = Fraction(beta)
    num, den = a.numerator, a.denominator
    # common denominator so the phase stays an exact integer fraction
    q = den * b.denominator // math.gcd(den, b.denominator)
    sa = num * (q // den)
    sb = b.numerator * (q // b.denominator)
    phases = [(sa * k * k + sb) % q for k in range(1, N + 1)]
    return csum(e_frac_array(np.array(phases, dtype=np.int64), q))


def ramanujan_sum(n: int, c: int) -> int:
    """r(n; c) = sum_{d | (n, c)} d mu(c/d)."""
    if c < 1:
        raise ValueError("ramanujan_sum needs c >= 1")
    g = math.gcd(n, c)
    return sum(d * mobius(c // d) for d in divisors(g))


def salie_bound_scan(ctx: PrimeContext) -> float:
    """max |S(m, n; p)| / sqrt(p) over all p not dividing mn."""
    p = ctx.p
    idx = np.arange(1, p)
    vals = salie_closed_array(idx[:, None], idx[None, :], ctx)
    return float(np.abs(vals).max() / math.sqrt(p))


def kloosterman_4p_max(p: int, kappa: int = 1, upsilon: Character = None) -> float:
    """Exhaustive max |K_{kappa, upsilon 1_p}(m, n; 4p)| / sqrt(p) over m, n mod 4p.

    Uses the c = 4 * p factorisation (checked separately) to stay cheap.
    """
    c = 4 * p
    qbar = pow(p, -1, 4)
    rbar = pow(4, -1, p)
    best = 0.0
    for m in range(c):
        for n in range(c):
            if (m * n) % p == 0:
                continue
            k_part = kloosterman_twisted(kappa - p + 1, upsilon, m * qbar, n * qbar, 4)
            s_part = salie_direct(m * rbar, n * rbar, p)
            best = max(best, abs(k_part * s_part))
    return best / math.sqrt(p)



def salie_matrix_direct(p: int) -> np.ndarray:
    """S(m, n; p) for all 0 <= m, n < p from the defining sum, as E diag(chi) E'."""
    if p % 2 == 0 or p < 3:
        raise ValueError(f"need an odd prime, got {p}")
    x = np.arange(1, p)
    chi = np.array([jacobi(int(v), p) for v in x], dtype=float)
    xbar = np.array([pow(int(v), -1, p) for v in x])
    m = np.arange(p)
    left = e_frac_array(np.outer(m, x) % p, p)
    right = e_frac_array(np.outer(xbar, m) % p, p)
    return (left * chi[None, :]) @ right


def salie_closed_matrix(ctx: PrimeContext) -> np.ndarray:
    """Closed form on the same (m, n) grid; entries with p | mn are nan."""
    m = np.arange(ctx.p)
    return salie_closed_array(m[:, None], m[None, :], ctx)


def kloosterman_matrix(kappa: int, c: int) -> np.ndarray:
    """K_{kappa}(m, n; c) for all 0 <= m, n < c, from the defining sum as E diag(w) E'."""
    if c % 4 or kappa % 2 == 0:
        raise ValueError("need 4 | c and odd kappa")
    ds = [d for d in range(1, c) if math.gcd(d, c) == 1]
    w = np.array([complex(eps(d).power(-kappa)) * kronecker(c, d) for d in ds])
    dbar = np.array([pow(d, -1, c) for d in ds])
    m = np.arange(c)
    left = e_frac_array(np.outer(m, ds) % c, c)
    right = e_frac_array(np.outer(dbar, m) % c, c)
    return (left * w[None, :]) @ right


def twisted_mult_residual_4p(kappa: int, p: int) -> float:
    """max |K(m, n; 4p) - K'(m pbar, n pbar; 4) S(m 4bar, n 4bar; p)| over p not dividing mn.

    Exhaustive over (m, n) mod 4p; both sides built as matrices.
    """
    if p % 2 == 0 or p < 3:
        raise ValueError("need an odd prime")
    c = 4 * p
    left = kloosterman_matrix(kappa, c)
    K4 = kloosterman_matrix(kappa - p + 1, 4)
    S = salie_matrix_direct(p)
    qbar, rbar = pow(p, -1, 4), pow(4, -1, p)
    m = np.arange(c)
    right = K4[np.ix_(m * qbar % 4, m * qbar % 4)] * S[np.ix_(m * rbar % p, m * rbar % p)]
    mask = (m[:, None] * m[None, :]) % p != 0
    return float(np.max(np.abs(left - right)[mask]))
