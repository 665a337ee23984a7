"""Half-integer order Bessel functions, a smooth bump test weight, the Hankel
transform V -> V-ring, and a numerical Voronoi summation check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InconclusiveError, InsufficientDataError
from .fp_core import csum, e_frac_array, i_power, theta_multiplier, unpack_matrix

_SQRT_2_PI = math.sqrt(2.0 / math.pi)


def _spherical_forward(r: int, x: np.ndarray) -> np.ndarray:
    s, c = np.sin(x), np.cos(x)
    j0 = s / x
    if r == 0:
        return j0
    j1 = (s / x - c) / x
    for n in range(1, r):
        j0, j1 = j1, (2 * n + 1) / x * j1 - j0
    return j1


def _spherical_backward(r: int, x: np.ndarray) -> np.ndarray:
    """Miller's algorithm normalised by j_0 = sin(x)/x."""
    start = r + 20 + int(math.sqrt(40 * (r + 1))) + int(np.max(x, initial=0.0))
    nxt = np.zeros_like(x)
    cur = np.full_like(x, 1e-300)
    want = np.zeros_like(x)
    for n in range(start, 0, -1):
        prev = (2 * n + 1) / x * cur - nxt
        nxt, cur = cur, prev
        if n - 1 == r:
            want = cur.copy()
        big = np.abs(cur) > 1e250
        if big.any():
            cur[big] *= 1e-250
            nxt[big] *= 1e-250
            want[big] *= 1e-250
    # cur now holds j_0 up to scale
    j0 = np.where(x < 1e-4, 1.0 - x * x / 6.0, np.sin(x) / np.where(x == 0, 1, x))
    return want * (j0 / cur)


def spherical_jn(r: int, x) -> np.ndarray:
    """Spherical Bessel j_r(x) for x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("spherical_jn needs x > 0")
    if r < 0:
        raise ValueError("order must be >= 0")
    flat = np.atleast_1d(x).ravel()
    out = np.empty_like(flat)
    if r == 0:
        out = np.sin(flat) / flat
    else:
        fwd = flat > r
        if fwd.any():
            out[fwd] = _spherical_forward(r, flat[fwd])
        if (~fwd).any():
            out[~fwd] = _spherical_backward(r, flat[~fwd])
    return out.reshape(x.shape) if x.shape else out[0]


def _half_order(order) -> int:
    o = Fraction(order).limit_denominator(2) if isinstance(order, float) else Fraction(order)
    r = o - Fraction(1, 2)
    if r.denominator != 1 or r < 0:
        raise ValueError(f"order must be r + 1/2 with integer r >= 0, got {order}")
    return int(r)


def bessel_j_halfint(order, x):
    """J_{r+1/2}(x) = sqrt(2x/pi) j_r(x) for x > 0."""
    r = _half_order(order)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("bessel_j_halfint needs x > 0")
    val = np.sqrt(x) * _SQRT_2_PI * spherical_jn(r, x)
    return float(val) if val.ndim == 0 else val


def recurrence_residual(order, x) -> np.ndarray:
    """|J_{nu-1} + J_{nu+1} - (2 nu / x) J_nu| relative to the largest term."""
    nu = Fraction(order)
    if nu < Fraction(3, 2):
        raise ValueError("need nu >= 3/2 so that nu - 1 is a half-integer >= 1/2")
    x = np.asarray(x, dtype=float)
    a = bessel_j_halfint(nu - 1, x)
    b = bessel_j_halfint(nu + 1, x)
    c = bessel_j_halfint(nu, x)
    mid = 2 * float(nu) / x * c
    scale = np.maximum.reduce([np.abs(a), np.abs(b), np.abs(mid)])
    return np.abs(a + b - mid) / np.where(scale > 0, scale, 1.0)


# test weight


@dataclass(frozen=True)
class TestWeight:
    """exp(-1/((x - lo)(hi - x))) on (lo, hi), scaled to peak 1, times ``scale``."""

    __test__ = False

    lo: float = 1.0
    hi: float = 2.0
    scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.lo < self.hi:
            raise ValueError("need 0 < lo < hi")

    @cached_property
    def _mid(self) -> float:
        return (self.lo + self.hi) / 2

    @cached_property
    def _q(self) -> Polynomial:
        # in u = x - mid: q = h^2 - u^2; centring avoids cancellation in P_n
        half = (self.hi - self.lo) / 2
        return Polynomial([half * half, 0.0, -1.0])

    @cached_property
    def _log_norm(self) -> float:
        half = (self.hi - self.lo) / 2
        return 1.0 / (half * half)

    def _polys(self, n: int) -> list[Polynomial]:
        q = self._q
        dq = q.deriv()
        P = [Polynomial([1.0])]
        for m in range(n):
            Pm = P[-1]
            P.append(Pm.deriv() * q * q - 2 * m * Pm * dq * q + Pm * dq)
        return P

    def derivative(self, n: int, x) -> np.ndarray:
        """n-th derivative, analytic: P_n(x) q^{-2n} f with q = (x-lo)(hi-x)."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x > self.lo) & (x < self.hi)
        if not inside.any():
            return out
        xi = x[inside] - self._mid
        qv = (xi + self._mid - self.lo) * (self.hi - self._mid - xi)
        Pn = self._polys(n)[n]
        logf = -1.0 / qv + self._log_norm - 2 * n * np.log(qv)
        out[inside] = self.scale * Pn(xi) * np.exp(logf)
        return out

    def __call__(self, x) -> np.ndarray:
        return self.derivative(0, x)

    def derivative_bound_profile(self, orders: int = 6, grid: int = 4001) -> list[float]:
        xs = np.linspace(self.lo, self.hi, grid)
        return [float(np.max(np.abs(self.derivative(n, xs)))) for n in range(orders + 1)]


class ZeroWeight(TestWeight):
    __test__ = False

    def derivative(self, n, x):
        return np.zeros_like(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class SumWeight:
    """Pointwise sum of test weights (for linearity checks)."""

    parts: tuple

    @property
    def lo(self):
        return min(w.lo for w in self.parts)

    @property
    def hi(self):
        return max(w.hi for w in self.parts)

    def derivative(self, n, x):
        return sum(w.derivative(n, x) for w in self.parts)

    def __call__(self, x):
        return self.derivative(0, x)


def _falling(s: float, m: int) -> float:
    out = 1.0
    for i in range(m):
        out *= s - i
    return out


def weighted_derivative(V, nu: float, j: int, x) -> np.ndarray:
    """d^j/dx^j [V(x) x^{-nu/2}] by Leibniz with exact power derivatives."""
    x = np.asarray(x, dtype=float)
    s = -nu / 2
    total = np.zeros_like(x)
    for i in range(j + 1):
        total = total + math.comb(j, i) * V.derivative(i, x) * _falling(s, j - i) * x ** (s - (j - i))
    return total


# Hankel transform


def _panels(lo: float, hi: float, y: float, per_panel: int, min_panels: int = 8):
    """Gauss-Legendre nodes in sqrt(x), panel count tied to the Bessel phase."""
    a, b = math.sqrt(lo), math.sqrt(hi)
    # phase 4 pi s sqrt(y) advances by pi every 1/(4 sqrt(y)) in s
    n_panels = max(min_panels, int(math.ceil((b - a) * 4 * math.sqrt(y) * 2)) + min_panels)
    t, w = np.polynomial.legendre.leggauss(per_panel)
    edges = np.linspace(a, b, n_panels + 1)
    half = (edges[1:] - edges[:-1]) / 2
    mid = (edges[1:] + edges[:-1]) / 2
    s = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    # x = s^2, dx = 2 s ds
    return s * s, ws * 2 * s


def _hankel_integral(V, y: float, nu: float, j: int, per_panel: int) -> float:
    x, w = _panels(V.lo, V.hi, y, per_panel)
    z = 4 * math.pi * np.sqrt(x * y)
    if j == 0:
        g = V(x)
        J = bessel_j_halfint(Fraction(nu).limit_denominator(4), z)
        return math.fsum(w * g * J)
    g = weighted_derivative(V, nu, j, x) * x ** ((nu + j) / 2)
    J = bessel_j_halfint(Fraction(nu).limit_denominator(4) + j, z)
    pref = (-1.0 / (2 * math.pi * math.sqrt(y))) ** j
    return pref * math.fsum(w * g * J)


@dataclass
class HankelResult:
    value: complex
    error_estimate: float
    method: str


def hankel_integral(V, y: float, k, j: int = 0, tol: float = 1e-12, max_nodes: int = 64):
    """int V(x) J_{k-1}(4 pi sqrt(xy)) dx, through the j-fold integrated form.

    Refines the per-panel Gauss order until two successive values agree.
    """
    if y <= 0:
        raise ValueError("hankel transform needs y > 0")
    nu = float(Fraction(k) - 1)
    prev = _hankel_integral(V, y, nu, j, 12)
    n = 12
    while True:
        n = min(2 * n, max_nodes)
        cur = _hankel_integral(V, y, nu, j, n)
        err = abs(cur - prev)
        if err <= tol * max(1.0, abs(cur)) or n >= max_nodes:
            return cur, err
        prev = cur


def crossover(V, k) -> float:
    """y where the Bessel argument at x = lo reaches twice the order."""
    nu = float(Fraction(k) - 1)
    return (2 * (nu + 2) / (4 * math.pi)) ** 2 / V.lo


def hankel_transform(V, y: float, k, method: str = "auto", j: Optional[int] = None,
                     tol: float = 1e-12) -> HankelResult:
    """V-ring(y) = 2 pi i^k int V(x) J_{k-1}(4 pi sqrt(xy)) dx."""
    if method == "auto":
        method = "bm2" if y > crossover(V, k) else "direct"
    if method == "direct":
        jj = 0
    elif method == "bm2":
        jj = 2 if j is None else j
    else:
        raise ValueError(f"unknown method {method!r}")
    val, err = hankel_integral(V, y, k, jj, tol)
    if err > 1e3 * tol * max(1.0, abs(val)):
        raise InconclusiveError(f"hankel quadrature at y={y}: error estimate {err:.3g}")
    pref = 2 * math.pi * i_power(float(Fraction(k)))
    return HankelResult(pref * val, 2 * math.pi * err, method)


def hankel_transform_array(V, ys, k, j: int = 2, per_panel: int = 24, chunk: int = 64) -> np.ndarray:
    """Vectorised V-ring over many y, using the j-fold form (j = 0 for direct)."""
    ys = np.asarray(ys, dtype=float)
    nu = Fraction(k) - 1
    out = np.empty(ys.shape, dtype=complex)
    pref = 2 * math.pi * i_power(float(Fraction(k)))
    order = np.argsort(ys)
    for start in range(0, len(ys), chunk):
        idx = order[start:start + chunk]
        ymax = float(ys[idx].max())
        x, w = _panels(V.lo, V.hi, ymax, per_panel)
        if j == 0:
            g = V(x)
        else:
            g = weighted_derivative(V, float(nu), j, x) * x ** ((float(nu) + j) / 2)
        z = 4 * math.pi * np.sqrt(x[None, :] * ys[idx, None])
        J = bessel_j_halfint(nu + j, z)
        vals = (J * (w * g)[None, :]).sum(axis=1)
        if j:
            vals = vals * (-1.0 / (2 * math.pi * np.sqrt(ys[idx]))) ** j
        out[idx] = pref * vals
    return out


def bm2_bound(V, y, k, j: int) -> np.ndarray:
    """|V-ring(y)| <= 2 pi (2 pi sqrt y)^-j int |d^j(V x^{-nu/2})| x^{(nu+j)/2} dx  (|J| <= 1)."""
    nu = float(Fraction(k) - 1)
    x = np.linspace(V.lo, V.hi, 4001)
    g = np.abs(weighted_derivative(V, nu, j, x)) * x ** ((nu + j) / 2)
    integral = float(np.trapezoid(g, x)) * 1.01
    y = np.asarray(y, dtype=float)
    return 2 * math.pi * integral * (2 * math.pi * np.sqrt(y)) ** (-j)


# Voronoi


@dataclass
class VoronoiResult:
    left: complex
    right: complex
    residual: float
    dual_terms: int
    truncation_estimate: float
    status: str = "ok"
    details: dict = field(default_factory=dict)


def _power_tail(C: float, s: float, n0: int, Y: float, K: float) -> float:
    """Bound sum_{n > n0} |a(n)| C (n/Y)^-s given sum_{n<=x}|a| <= x sqrt(K log x).

    Partial summation gives <= int_{n0}^inf E(x) (-w'(x)) dx with w = C (x/Y)^-s;
    sqrt(log x) is bounded by its tangent at n0.
    """
    if s <= 1:
        return math.inf
    L = math.log(max(n0, 3))
    inner = math.sqrt(L) / (s - 1) + 1 / (2 * math.sqrt(L) * (s - 1) ** 2)
    return s * C * Y**s * math.sqrt(K) * n0 ** (1 - s) * inner


def bm2_tail(V, k, Y: float, n0: int, K: float, orders=range(3, 13)) -> tuple:
    """Best rigorous tail over j of the integrated-by-parts bound |V-ring(y)| <= C_j y^{-j/2}."""
    best = (math.inf, None)
    for j in orders:
        C = float(bm2_bound(V, 1.0, k, j))
        t = _power_tail(C, j / 2, n0, Y, K)
        if t < best[0]:
            best = (t, j)
    return best


def empirical_tail(V, k, Y: float, n0: int, K: float, decay: float = 6.0, samples: int = 32) -> float:
    """Tail assuming |V-ring(y)| <= M (y0/y)^decay beyond y0 = n0/Y.

    The exponent is the one the 12-fold integrated form guarantees; the
    constant M is sampled on [y0, 2 y0] instead of taken from the derivative
    bound.  Reported as an estimate, not a bound.
    """
    y0 = n0 / Y
    ys = y0 * np.geomspace(1.0, 2.0, samples)
    vals = np.abs(hankel_transform_array(V, ys, k, j=0))
    M = float(np.max(vals * (ys / y0) ** decay))
    return _power_tail(M * y0**decay, decay, n0, Y, K)


def voronoi_check(a, gamma, V, X: float, k, meansquare_K: float, tol: float = 1e-9,
                  max_dual: Optional[int] = None, bm2_j: int = 2) -> VoronoiResult:
    """Compare both sides of the Voronoi summation for the coefficients ``a``.

    ``a`` is an array with a[n] the normalised coefficient (a[0] ignored).
    The dual sum is cut where the tail estimate drops below ``tol``: the
    rigorous integrated-by-parts bound when it gets there inside the data,
    otherwise a sampled envelope (flagged in ``details``).
    """
    A, B, c, d = unpack_matrix(gamma)
    if c <= 0 or c % 4:
        raise ValueError("voronoi_check needs 4 | c, c > 0")
    if b_is_degenerate(A, B, c, d):
        raise ValueError("gamma must have determinant 1")
    nu = theta_multiplier((A, B, c, d))
    a = np.asarray(a, dtype=float)
    nmax_avail = len(a) - 1
    n_left = int(math.floor(V.hi * X))
    if n_left > nmax_avail:
        raise InsufficientDataError(n_left, nmax_avail)
    ns = np.arange(1, n_left + 1)
    left = csum(a[ns] * e_frac_array(A * ns, c) * V(ns / X))
    Y = c * c / X
    limit = nmax_avail if max_dual is None else min(max_dual, nmax_avail)
    n_dual, est, method = None, math.inf, "bm2"
    n0 = 16
    while n0 <= limit:
        est, _ = bm2_tail(V, k, Y, n0, meansquare_K)
        if est < tol:
            n_dual = n0
            break
        n0 *= 2
    if n_dual is None:
        method = "sampled"
        n0 = 16
        while n0 <= limit:
            est = empirical_tail(V, k, Y, n0, meansquare_K)
            if est < tol:
                n_dual = n0
                break
            n0 *= 2
    status = "ok"
    if n_dual is None:
        n_dual = limit
        status = "inconclusive"
    ms = np.arange(1, n_dual + 1)
    ring = hankel_transform_array(V, ms / Y, k, j=bm2_j)
    right = (X / c) * nu * csum(a[ms] * e_frac_array(-d * ms, c) * ring)
    residual = abs(left - right) / (abs(left) + abs(right) + 1)
    return VoronoiResult(left, right, residual, n_dual, est, status,
                         {"multiplier": complex(nu), "Y": Y, "tail_method": method})


def b_is_degenerate(A, B, c, d) -> bool:
    return A * d - B * c != 1
