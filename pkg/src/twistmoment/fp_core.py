"""Prime-field substrate: residue tables, quadratic symbols, square roots,
additive characters and the theta multiplier.

Every exponential sum in the package is built from :func:`e_frac` (exact
rational phase reduced before complexification) and accumulated with
:func:`csum`, which rounds real and imaginary parts with ``math.fsum``.
``fsum`` is exactly rounded, so the result does not depend on the order in
which terms are produced.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

SQRT_TABLE_THRESHOLD = 10**6

_TWO_PI = 2.0 * math.pi


def csum(values) -> complex:
    """Compensated sum of complex values (exactly rounded per component)."""
    arr = np.asarray(values)
    if arr.size == 0:
        return 0j
    arr = arr.ravel()
    if np.iscomplexobj(arr):
        return complex(math.fsum(arr.real), math.fsum(arr.imag))
    return complex(math.fsum(arr), 0.0)


def rsum(values) -> float:
    arr = np.asarray(values, dtype=float).ravel()
    return math.fsum(arr)


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def factorize(n: int) -> dict[int, int]:
    """Prime factorisation of ``|n|`` by trial division."""
    n = abs(n)
    out: dict[int, int] = {}
    d = 2
    while d * d <= n:
        while n % d == 0:
            out[d] = out.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def mobius(n: int) -> int:
    if n < 1:
        raise ValueError("mobius needs n >= 1")
    f = factorize(n)
    if any(e > 1 for e in f.values()):
        return 0
    return -1 if len(f) % 2 else 1


def euler_phi(n: int) -> int:
    if n < 1:
        raise ValueError("phi needs n >= 1")
    out = n
    for q in factorize(n):
        out = out // q * (q - 1)
    return out


def divisors(n: int) -> list[int]:
    n = abs(n)
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def _check_odd_prime_modulus(p: int) -> None:
    if p <= 1 or p % 2 == 0:
        raise ValueError(f"modulus must be an odd prime, got {p}")


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) by Euler's criterion."""
    _check_odd_prime_modulus(p)
    r = pow(a % p, (p - 1) // 2, p)
    if r == 0:
        return 0
    return 1 if r == 1 else -1


def jacobi(a: int, n: int) -> int:
    """Jacobi symbol (a/n) for odd positive n."""
    if n <= 0 or n % 2 == 0:
        raise ValueError("jacobi needs odd positive n")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for arbitrary integers a, n."""
    if n == 0:
        return 1 if abs(a) == 1 else 0
    result = 1
    if n < 0:
        n = -n
        if a < 0:
            result = -result
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    if v:
        if a % 2 == 0:
            return 0
        if v % 2 and a % 8 in (3, 5):
            result = -result
    if n == 1:
        return result
    return result * jacobi(a, n)


def primitive_root(p: int) -> int:
    """Smallest primitive root modulo the prime p."""
    if p == 2:
        return 1
    qs = list(factorize(p - 1))
    for g in range(2, p):
        if all(pow(g, (p - 1) // q, p) != 1 for q in qs):
            return g
    raise ValueError(f"{p} is not prime")


def tonelli_shanks(a: int, p: int) -> int | None:
    """One square root of a mod p, or None for a non-residue."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2 = 0, t
        while t2 != 1:
            t2 = t2 * t2 % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        m, c = i, b * b % p
        t, r = t * c % p, r * b % p
    return r


@dataclass(frozen=True, eq=False)
class PrimeContext:
    """Tables for arithmetic modulo an odd prime ``p``.

    ``dlog[a]`` is the exponent t with g^t = a (``dlog[0] = -1``),
    ``exp[t] = g^t``, ``inv[a]`` the inverse of a, and ``sqrt_table[a]`` the
    square root of a in ``[1, (p-1)/2]`` for residues, ``0`` for ``a = 0`` and
    ``-1`` for non-residues.  ``sqrt_table`` is only built below
    ``sqrt_threshold``; above it :func:`sqrt_mod` falls back to Tonelli-Shanks.
    """

    p: int
    g: int
    dlog: np.ndarray = field(repr=False)
    exp: np.ndarray = field(repr=False)
    inv: np.ndarray = field(repr=False)
    sqrt_table: np.ndarray | None = field(repr=False)
    sqrt_threshold: int = SQRT_TABLE_THRESHOLD

    @classmethod
    def build(cls, p: int, sqrt_threshold: int = SQRT_TABLE_THRESHOLD) -> "PrimeContext":
        if p < 3 or not is_prime(p):
            raise ValueError(f"PrimeContext needs an odd prime, got {p}")
        g = primitive_root(p)
        expt = np.empty(p - 1, dtype=np.int64)
        x = 1
        for t in range(p - 1):
            expt[t] = x
            x = x * g % p
        dlog = np.full(p, -1, dtype=np.int64)
        dlog[expt] = np.arange(p - 1, dtype=np.int64)
        inv = np.zeros(p, dtype=np.int64)
        # g^t * g^(p-1-t) = 1
        inv[expt] = expt[(-np.arange(p - 1)) % (p - 1)]
        sq = None
        if p < sqrt_threshold:
            sq = np.full(p, -1, dtype=np.int64)
            sq[0] = 0
            roots = np.arange(1, (p - 1) // 2 + 1, dtype=np.int64)
            sq[(roots * roots) % p] = roots
        for a in (sq, dlog, expt, inv):
            if a is not None:
                a.setflags(write=False)
        return cls(p, g, dlog, expt, inv, sq, sqrt_threshold)

    @property
    def residue_mask(self) -> np.ndarray:
        """Boolean mask over 0..p-1 marking nonzero quadratic residues."""
        return (self.dlog >= 0) & (self.dlog % 2 == 0)

    def legendre_array(self) -> np.ndarray:
        """(a/p) for a = 0..p-1 as an int array."""
        out = np.where(self.dlog % 2 == 0, 1, -1)
        out[0] = 0
        return out


@lru_cache(maxsize=64)
def get_context(p: int) -> PrimeContext:
    """Cached :class:`PrimeContext` for ``p``."""
    return PrimeContext.build(p)


def sqrt_mod(a: int, ctx: PrimeContext) -> frozenset[int]:
    """All solutions of x^2 = a (mod p)."""
    p = ctx.p
    a %= p
    if a == 0:
        return frozenset({0})
    if ctx.sqrt_table is not None:
        r = int(ctx.sqrt_table[a])
        if r < 0:
            return frozenset()
    else:
        r = tonelli_shanks(a, p)
        if r is None:
            return frozenset()
    return frozenset({r, p - r})


@dataclass(frozen=True)
class EpsFactor:
    d: int
    value: complex

    def __complex__(self):
        return self.value

    def power(self, kappa: int) -> complex:
        """eps_d ** kappa for any integer kappa (exact unit)."""
        if self.value == 1:
            return 1 + 0j
        return _I_POWERS[kappa % 4]


_I_POWERS = (1 + 0j, 1j, -1 + 0j, -1j)


def eps(d: int) -> EpsFactor:
    if d % 2 == 0:
        raise ValueError(f"eps_d needs odd d, got {d}")
    return EpsFactor(d, 1 + 0j if d % 4 == 1 else 1j)


def i_power(k: float) -> complex:
    """i**k on the principal branch, exp(i*pi*k/2); exact for integer k."""
    if float(k).is_integer():
        return _I_POWERS[int(k) % 4]
    return cmath.exp(0.5j * math.pi * k)


def _unit_from_residue(r: int, q: int) -> complex:
    # r in [0, q); exact values on the real and imaginary axes
    if r == 0:
        return 1 + 0j
    if 2 * r == q:
        return -1 + 0j
    if 4 * r == q:
        return 1j
    if 4 * r == 3 * q:
        return -1j
    if 2 * r > q:
        r -= q
    theta = _TWO_PI * r / q
    return complex(math.cos(theta), math.sin(theta))


def e_frac(a: int, q: int) -> complex:
    """exp(2*pi*i*a/q) with a reduced mod q first."""
    if q < 1:
        raise ValueError("e_frac needs q >= 1")
    return _unit_from_residue(a % q, q)


def e_frac_array(a, q: int) -> np.ndarray:
    """Vectorised :func:`e_frac` over an integer array of numerators."""
    if q < 1:
        raise ValueError("e_frac needs q >= 1")
    r = np.asarray(a, dtype=np.int64) % q
    signed = np.where(2 * r > q, r - q, r)
    theta = _TWO_PI * signed / q
    out = np.cos(theta) + 1j * np.sin(theta)
    out[r == 0] = 1.0
    if q % 2 == 0:
        out[2 * r == q] = -1.0
    if q % 4 == 0:
        out[4 * r == q] = 1j
        out[4 * r == 3 * q] = -1j
    return out


def unit_table(q: int) -> np.ndarray:
    """e(r/q) for r = 0..q-1, read-only."""
    t = e_frac_array(np.arange(q), q)
    t.setflags(write=False)
    return t


def unpack_matrix(gamma) -> tuple[int, int, int, int]:
    """Accept ``(a, b, c, d)`` or ``((a, b), (c, d))``."""
    flat = np.asarray(gamma).ravel().tolist()
    if len(flat) != 4:
        raise ValueError("expected a 2x2 integer matrix")
    a, b, c, d = (int(v) for v in flat)
    return a, b, c, d


def theta_multiplier(gamma) -> complex:
    """nu_theta(gamma) = eps_d^{-1} (c/d) for gamma in Gamma_0(4)."""
    a, b, c, d = unpack_matrix(gamma)
    if a * d - b * c != 1:
        raise ValueError("theta_multiplier needs determinant 1")
    if c % 4:
        raise ValueError("theta_multiplier needs 4 | c")
    return eps(d).power(-1) * kronecker(c, d)
