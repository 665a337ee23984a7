"""Continued fractions of rationals and denominator-range queries.

Everything here is exact integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class ContinuedFraction:
    numerator: int
    denominator: int
    partial_quotients: tuple[int, ...]
    convergents: tuple[tuple[int, int], ...]

    @property
    def value(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def reconstruct(self) -> Fraction:
        qs = self.partial_quotients
        x = Fraction(qs[-1])
        for a in reversed(qs[:-1]):
            x = a + 1 / x
        return x


def expand(a: int, q: int) -> ContinuedFraction:
    """Canonical expansion of (a mod q)/q; never ends in a partial quotient 1."""
    if q < 1:
        raise ValueError("expand needs q >= 1")
    a %= q
    g = math.gcd(a, q)
    num, den = a // g, q // g
    quotients = []
    x, y = num, den
    while y:
        quotients.append(x // y)
        x, y = y, x % y
    if len(quotients) > 1 and quotients[-1] == 1:
        quotients.pop()
        quotients[-1] += 1
    convs = []
    h0, h1 = 1, 0
    k0, k1 = 0, 1
    for t in quotients:
        h0, h1 = t * h0 + h1, h0
        k0, k1 = t * k0 + k1, k0
        convs.append((h0, k0))
    return ContinuedFraction(num, den, tuple(quotients), tuple(convs))


def has_convergent_in(cf: ContinuedFraction, lo: int, hi: int):
    """Convergent with the smallest denominator in [lo, hi], or None."""
    if lo > hi:
        raise ValueError("need lo <= hi")
    for a, b in cf.convergents:
        if lo <= b <= hi:
            return (a, b)
    return None


def bracketing_pair(cf: ContinuedFraction, threshold: int):
    """Consecutive convergents (a, b), (a*, b*) with b <= threshold < b*."""
    if threshold < 1:
        raise ValueError("threshold must be >= 1")
    if threshold >= cf.denominator:
        raise ValueError(
            f"threshold {threshold} >= denominator {cf.denominator}: no next convergent"
        )
    convs = cf.convergents
    for i in range(len(convs) - 1):
        if convs[i][1] <= threshold < convs[i + 1][1]:
            return convs[i], convs[i + 1]
    raise AssertionError("unreachable: denominators run from 1 to q")


def floor_root_power(p: int, s: int, t: int) -> int:
    """Largest integer b with b**t <= p**s, i.e. floor(p^(s/t))."""
    if p < 0 or s < 0 or t < 1:
        raise ValueError("need p >= 0, s >= 0, t >= 1")
    target = p**s
    if target < 2:
        return target
    # integer Newton, started above the root
    b = 1 << (target.bit_length() // t + 1)
    while True:
        nb = ((t - 1) * b + target // b ** (t - 1)) // t
        if nb >= b:
            break
        b = nb
    while b**t > target:
        b -= 1
    while (b + 1) ** t <= target:
        b += 1
    return b


def ceil_root_power(p: int, s: int, t: int) -> int:
    """Smallest integer b with b**t >= p**s."""
    b = floor_root_power(p, s, t)
    return b if b**t == p**s else b + 1


def at_least_power(b: int, p: int, s: int, t: int) -> bool:
    """b >= p^(s/t) for b >= 0, exactly."""
    return b**t >= p**s


def below_power(b: int, p: int, s: int, t: int) -> bool:
    """b < p^(s/t) for b >= 0, exactly."""
    return b**t < p**s
