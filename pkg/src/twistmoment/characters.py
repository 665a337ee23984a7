"""Dirichlet characters modulo a prime and their Gauss sums."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import IdentityViolation
from .fp_core import PrimeContext, csum, e_frac_array, euler_phi, mobius, unit_table


@dataclass(frozen=True, eq=False)
class DirichletCharacter:
    """chi(g^t) = e(k t / (p-1)) for the context's primitive root g."""

    ctx: PrimeContext
    k: int

    def __post_init__(self):
        object.__setattr__(self, "k", self.k % (self.ctx.p - 1))

    def __eq__(self, other):
        return (
            isinstance(other, DirichletCharacter)
            and other.ctx.p == self.ctx.p
            and other.k == self.k
        )

    def __hash__(self):
        return hash((self.ctx.p, self.k))

    def __repr__(self):
        return f"DirichletCharacter(p={self.ctx.p}, k={self.k})"

    @property
    def p(self) -> int:
        return self.ctx.p

    @property
    def parity(self) -> int:
        """chi(-1) as +1 or -1."""
        return -1 if self.k % 2 else 1

    @property
    def is_principal(self) -> bool:
        return self.k == 0

    @property
    def is_quadratic(self) -> bool:
        return 2 * self.k == self.p - 1

    @property
    def is_primitive(self) -> bool:
        # prime modulus: every nonprincipal character is primitive
        return self.k != 0

    @cached_property
    def values(self) -> np.ndarray:
        """chi(a) for a = 0..p-1 (complex array, read-only)."""
        v = np.zeros(self.p, dtype=complex)
        v[1:] = e_frac_array(self.k * self.ctx.dlog[1:], self.p - 1)
        if self.is_quadratic:
            v = v.real.round() + 0j
        v.setflags(write=False)
        return v

    def __call__(self, a: int) -> complex:
        a %= self.p
        if a == 0:
            return 0j
        return self.values[a]

    def conj(self) -> "DirichletCharacter":
        return DirichletCharacter(self.ctx, -self.k)

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        if other.ctx.p != self.p:
            raise ValueError("characters have different moduli")
        return DirichletCharacter(self.ctx, self.k + other.k)


def all_characters(ctx: PrimeContext) -> list[DirichletCharacter]:
    return [DirichletCharacter(ctx, k) for k in range(ctx.p - 1)]


def quadratic_character(ctx: PrimeContext) -> DirichletCharacter:
    """psi_p = (. / p)."""
    return DirichletCharacter(ctx, (ctx.p - 1) // 2)


def principal_character(ctx: PrimeContext) -> DirichletCharacter:
    return DirichletCharacter(ctx, 0)


class Mod4Character:
    """The two characters modulo 4: principal and chi_{-4}."""

    def __init__(self, nontrivial: bool):
        self.nontrivial = nontrivial

    def __call__(self, d: int) -> int:
        if d % 2 == 0:
            return 0
        if not self.nontrivial:
            return 1
        return 1 if d % 4 == 1 else -1

    def __repr__(self):
        return f"Mod4Character(nontrivial={self.nontrivial})"


MOD4_CHARACTERS = (Mod4Character(False), Mod4Character(True))


def gauss_sum(chi: DirichletCharacter, n: int, c: int | None = None) -> complex:
    """G_chi(n; c) = sum over units d mod c of chi(d) e(nd/c).

    Only the prime modulus c = p is supported.
    """
    p = chi.p
    if c is None:
        c = p
    if c != p:
        raise ValueError(f"gauss_sum supports modulus c = p = {p}, got {c}")
    d = np.arange(1, p)
    return csum(chi.values[1:] * e_frac_array(n * d, p))


def gauss_sum_table(chi: DirichletCharacter) -> np.ndarray:
    """G_chi(n; p) for n = 0..p-1, each computed by direct summation."""
    p = chi.p
    units = unit_table(p)
    d = np.arange(1, p)
    return np.array(
        [csum(chi.values[1:] * units[(n * d) % p]) for n in range(p)], dtype=complex
    )


def _orthogonality_closed_form(m: int, n: int, ctx: PrimeContext) -> int:
    p = ctx.p
    total = 0
    for d in (1, p):
        if (m - n) % d == 0:
            total += euler_phi(d) * mobius(p // d)
    lm = 1 if ctx.dlog[m % p] % 2 == 0 else -1
    ln = 1 if ctx.dlog[n % p] % 2 == 0 else -1
    return total - lm * ln


def _orthogonality_enumerated(m: int, n: int, ctx: PrimeContext) -> complex:
    p = ctx.p
    half = (p - 1) // 2
    tm, tn = int(ctx.dlog[m % p]), int(ctx.dlog[n % p])
    ks = np.array([k for k in range(1, p - 1) if k != half], dtype=np.int64)
    return csum(e_frac_array(ks * (tn - tm), p - 1))


def char_orthogonality(m: int, n: int, ctx: PrimeContext, tol: float = 1e-9) -> int:
    """Sum of conj(chi)(m) chi(n) over primitive chi != psi_p.

    Computed by enumeration and by the divisor-sum closed form; the two must
    agree or :class:`IdentityViolation` is raised.
    """
    p = ctx.p
    if (m * n) % p == 0:
        raise ValueError("char_orthogonality needs (mn, p) = 1")
    closed = _orthogonality_closed_form(m, n, ctx)
    direct = _orthogonality_enumerated(m, n, ctx)
    if abs(direct - closed) > tol:
        raise IdentityViolation(
            "character orthogonality", f"m={m} n={n} p={p}: {direct} vs {closed}"
        )
    return closed

