"""Weight functions, central values of twists, and the twisted second moment.

Everything is for a prime p = 1 mod 4 and characters chi mod p.  The dual
side of each functional equation uses the coefficients of the W4 image of the
form (``form.a_dual``), which is eps * a when the form is a W4 eigenform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate, special

from .characters import (
    DirichletCharacter,
    all_characters,
    gauss_sum,
    gauss_sum_table,
    quadratic_character,
)
from .errors import IdentityViolation, ParameterError
from .fp_core import csum, eps, get_context, is_prime, rsum

TRUNC_TOL = 1e-8


# weight functions


def _contour(x: float, k: float, kind: str, sigma: float, tol: float) -> float:
    """(1/2 pi i) int_(sigma) x^-z (2pi)^-mz G(z)^m / G(k/2)^m dz/z, m = 1 (V) or 2 (W)."""
    m = 1 if kind == "V" else 2
    lx = math.log(x) + m * math.log(2 * math.pi)
    norm = m * special.gammaln(k / 2)

    def f(t):
        z = complex(sigma, t)
        return (np.exp(-z * lx + m * special.loggamma(z + k / 2) - norm) / z).real

    T = _tail_cutoff(x, k, m, sigma, tol)
    val, err = integrate.quad(f, 0.0, T, limit=400, epsabs=tol / 10, epsrel=1e-13)
    return val / math.pi + (1.0 if sigma < 0 else 0.0)


def _stirling_majorant(t, x, k, m, sigma):
    # |G(s + it)| <= sqrt(2 pi) |s+it|^{s-1/2} e^{-pi |t| / 2} e^{1/(6|s+it|)} for s > 0
    s = sigma + k / 2
    mod = math.hypot(s, t)
    lg = 0.5 * math.log(2 * math.pi) + (s - 0.5) * math.log(mod) - math.pi * t / 2 + 1 / (6 * mod)
    lx = math.log(x) + m * math.log(2 * math.pi)
    return math.exp(-sigma * lx + m * lg - m * special.gammaln(k / 2)) / math.hypot(sigma, t)


def _tail_cutoff(x, k, m, sigma, tol) -> float:
    """T with (1/pi) int_T^inf majorant < tol."""
    T = 10.0
    while True:
        tail, _ = integrate.quad(lambda t: _stirling_majorant(t, x, k, m, sigma), T, np.inf)
        if tail / math.pi < tol or T > 2000:
            return T
        T *= 1.5


def tail_bound(kind, k, x, sigma=3.0, T=None) -> float:
    m = 1 if kind == "V" else 2
    if T is None:
        T = _tail_cutoff(x, float(k), m, sigma, 1e-12)
    tail, _ = integrate.quad(lambda t: _stirling_majorant(t, x, float(k), m, sigma), T, np.inf)
    return tail / math.pi


def V_closed(k, x):
    """Residue route: V(x) = Gamma(k/2, 2 pi x) / Gamma(k/2)."""
    return special.gammaincc(float(k) / 2, 2 * math.pi * np.asarray(x, dtype=float))


def W_bessel(k, x):
    """W(x) = 4/G(k/2)^2 int_{2 pi sqrt x}^inf v^{k-1} K_0(2v) dv, vectorised.

    Integrates between consecutive sorted endpoints with Gauss-Legendre
    panels and accumulates from the top, so many x cost one pass.
    """
    k = float(k)
    x = np.asarray(x, dtype=float)
    flat = x.ravel()
    if np.any(flat <= 0):
        raise ValueError("W needs x > 0")
    t = 2 * math.pi * np.sqrt(flat)
    top = 45.0
    grid = np.arange(0.0, top + 1e-9, 0.25)
    pts = np.unique(np.concatenate([grid, np.minimum(t, top)]))
    nodes, weights = np.polynomial.legendre.leggauss(12)
    a, b = pts[:-1], pts[1:]
    half = (b - a) / 2
    v = (a + b)[:, None] / 2 + half[:, None] * nodes[None, :]
    g = v ** (k - 1) * special.k0(2 * v)
    seg = (g * weights[None, :]).sum(axis=1) * half
    # integral from pts[i] to top
    upper = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
    idx = np.searchsorted(pts, np.minimum(t, top))
    out = 4.0 / special.gamma(k / 2) ** 2 * upper[idx]
    return out.reshape(x.shape) if x.shape else float(out[0])


def weight_eval(kind: str, k, x, method: str = "closed", sigma: Optional[float] = None,
                tol: float = 1e-12):
    """V(x) or W(x) at a single x > 0.

    method 'closed' uses the incomplete gamma (V) or the K-Bessel integral (W);
    'contour' integrates on Re z = sigma, adding the z = 0 residue when sigma < 0;
    by default sigma = 3, or -1/4 for x < 0.1 where x^{-3} would swamp the integral.
    """
    if kind not in ("V", "W"):
        raise ValueError("kind must be 'V' or 'W'")
    if x <= 0:
        raise ValueError("weight functions need x > 0")
    kf = float(Fraction(k))
    if method == "closed":
        return float(V_closed(kf, x)) if kind == "V" else float(W_bessel(kf, x))
    if method == "contour":
        if sigma is None:
            sigma = -0.25 if x < 0.1 else 3.0
        return _contour(float(x), kf, kind, sigma, tol)
    raise ValueError(f"unknown method {method!r}")


@dataclass
class WeightFunction:
    """Cached V or W on a log grid, with the two-route agreement recorded."""

    kind: str
    k: Fraction
    grid: np.ndarray = field(default_factory=lambda: np.logspace(-3, 1.2, 25))
    values: Optional[np.ndarray] = None
    route_gap: float = math.nan

    def warm(self, tol: float = 1e-9) -> "WeightFunction":
        closed = np.array([weight_eval(self.kind, self.k, x) for x in self.grid])
        contour = np.array([weight_eval(self.kind, self.k, x, "contour") for x in self.grid])
        self.values = closed
        self.route_gap = float(np.max(np.abs(closed - contour)))
        if self.route_gap > tol:
            raise IdentityViolation(f"{self.kind} routes", f"max gap {self.route_gap:.3g}")
        return self

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return V_closed(self.k, x) if self.kind == "V" else W_bessel(self.k, x)


# truncation


def _envelope_single(K):
    # sum_{n<=x} |a(n)| <= sqrt(x * K x log x)
    return lambda x: x * math.sqrt(K * math.log(max(x, 3.0)))


def _envelope_pairs(K):
    # sum_{mn<=x} |a(m) a(n)| <= sum_m a(m)^2 floor(x/m) <= K x (log x + log^2 x / 2)
    def E(x):
        lx = math.log(max(x, 3.0))
        return K * x * (lx + lx * lx / 2)
    return E


def tail_estimate(weight, scale: float, n0: int, envelope) -> float:
    """Bound for sum_{n>n0} c_n w(n) with w(x) = weight(x/scale)/sqrt(x) decreasing and
    sum_{n<=x} |c_n| <= envelope(x)."""

    def w(x):
        return float(weight(x / scale)) / math.sqrt(x)

    # -w' integrated against the envelope, by parts: w(n0) E(n0) + int w dE
    h = 1e-6
    def dE(x):
        return (envelope(x * (1 + h)) - envelope(x * (1 - h))) / (2 * h * x)

    val, _ = integrate.quad(lambda x: w(x) * dE(x), n0, np.inf, limit=200)
    return w(n0) * envelope(n0) + val


def truncation_point(weight, scale: float, envelope, tol: float = TRUNC_TOL, limit: int = 10**8) -> tuple:
    n0 = max(8, int(scale))
    while n0 < limit:
        est = tail_estimate(weight, scale, n0, envelope)
        if est < tol:
            return n0, est
        n0 = int(n0 * 1.25) + 1
    return limit, tail_estimate(weight, scale, limit, envelope)


# central values


def _check_prime(p: int):
    fails = []
    if not is_prime(p) or p % 4 != 1:
        fails.append(f"p = {p} must be a prime = 1 mod 4")
    if fails:
        raise ParameterError(fails)


def _check_char(chi: DirichletCharacter, p: int):
    if chi.p != p:
        raise ParameterError([f"character modulus {chi.p} != {p}"])
    if chi.is_principal:
        raise ParameterError(["chi must be primitive (nonprincipal)"])
    if chi.is_quadratic:
        raise ParameterError(["chi = psi_p is excluded: chi psi_p is principal"])


def eps_star(form, chi: DirichletCharacter, p: int) -> complex:
    """eps(f) eps_p^{-2k} chi(-4).

    For a form without W4 eigenvalue the sign lives in the dual coefficients,
    so eps(f) is taken as 1 here.
    """
    _check_prime(p)
    if chi.is_principal:
        raise ParameterError(["eps_star needs a nonprincipal character"])
    ef = form.eps_sign if form.eps_sign else 1
    two_k = int(2 * form.k)
    return ef * eps(p).power(-two_k) * chi(-4)


@lru_cache(maxsize=None)
def _meansquare_K(form) -> float:
    from .formdata import meansquare_envelope
    return meansquare_envelope(form)


def afe_truncation(form, p: int, X: float = 1.0, tol: float = TRUNC_TOL) -> int:
    """Largest index either sum of the first functional equation needs."""
    K = _meansquare_K(form)
    k = float(form.k)
    V = lambda x: V_closed(k, x)
    scale = 2 * p * max(X, 1 / X)
    n, _ = truncation_point(V, scale, _envelope_single(K), tol)
    return n


def l_half(form, chi: DirichletCharacter, p: int, truncation: Optional[int] = None,
           X: float = 1.0, allow_psi: bool = False) -> complex:
    """L(1/2, f x chi) from the smooth approximate functional equation.

    The dual sum carries G_{chi psi}(n; p) / G_{chibar}(1; p), which for
    primitive chi psi is chibar psi(n) times the Gauss-sum ratio.  With
    ``allow_psi`` the quadratic chi is accepted; then G is a Ramanujan sum.
    X balances the two sums; the value is independent of X, which is a check.
    """
    _check_prime(p)
    if not (allow_psi and chi.is_quadratic and chi.p == p):
        _check_char(chi, p)
    if truncation is None:
        truncation = afe_truncation(form, p, X)
    form.require(truncation, "coefficients for the approximate functional equation")
    k = float(form.k)
    n = np.arange(1, truncation + 1)
    r = n % p
    psi = quadratic_character(chi.ctx)
    first = csum(form.a[n] * chi.values[r] / np.sqrt(n) * V_closed(k, n / (2 * p * X)))
    if chi.is_quadratic:
        dual_weight = gauss_sum_table(chi * psi)[r] / gauss_sum(chi.conj(), 1)
    else:
        dual_weight = (chi.conj() * psi).values[r] * gauss_ratio(chi)
    second = csum(form.a_dual[n] * dual_weight / np.sqrt(n) * V_closed(k, n * X / (2 * p)))
    return first + eps_star(form, chi, p) * second


def gauss_ratio(chi: DirichletCharacter) -> complex:
    psi = quadratic_character(chi.ctx)
    return gauss_sum(chi * psi, 1) / gauss_sum(chi.conj(), 1)


# double sums over mn <= P


@dataclass
class PairTable:
    """All (m, n) with mn <= P, as flat index arrays, with W(mn / 4p^2)."""

    p: int
    P: int
    m: np.ndarray
    n: np.ndarray
    w: np.ndarray
    tail: float

    @classmethod
    def build(cls, form, p: int, tol: float = TRUNC_TOL, P: Optional[int] = None):
        k = float(form.k)
        T = 4 * p * p
        tail = math.nan
        if P is None:
            K = _meansquare_K(form)
            P, tail = truncation_point(lambda x: W_bessel(k, x), T, _envelope_pairs(K), tol)
        form.require(P, "coefficients for the second functional equation")
        ms, ns = [], []
        for m in range(1, P + 1):
            top = P // m
            ms.append(np.full(top, m, dtype=np.int64))
            ns.append(np.arange(1, top + 1, dtype=np.int64))
        m = np.concatenate(ms)
        n = np.concatenate(ns)
        prod = m * n
        wtab = np.zeros(P + 1)
        wtab[1:] = W_bessel(k, np.arange(1, P + 1) / T)
        return cls(p, P, m, n, wtab[prod], tail)

    @property
    def coprime(self) -> np.ndarray:
        return (self.m % self.p != 0) & (self.n % self.p != 0)


def l_product_afe(form, chi: DirichletCharacter, p: int, table: Optional[PairTable] = None) -> complex:
    """L(1/2, f x chi) L(1/2, f x chibar) from the second functional equation."""
    _check_prime(p)
    _check_char(chi, p)
    if table is None:
        table = PairTable.build(form, p)
    return _product_from_table(form, chi, table)


def _product_from_table(form, chi, t: PairTable) -> complex:
    p = t.p
    psi = quadratic_character(chi.ctx)
    A = form.a / np.sqrt(np.maximum(np.arange(len(form.a)), 1))
    G = form.a_dual / np.sqrt(np.maximum(np.arange(len(form.a_dual)), 1))
    cm, cn = chi.values[t.m % p], chi.values[t.n % p]
    pm, pn = psi.values[t.m % p].real, psi.values[t.n % p].real
    first = csum(A[t.m] * np.conj(cm) * A[t.n] * cn * t.w)
    second = csum(G[t.m] * np.conj(cm) * pm * G[t.n] * cn * pn * t.w)
    return first + second


# moment


@dataclass
class MomentReport:
    p: int
    characters: int
    values: dict
    moment: float
    D1: float
    D2: float
    E: float
    decomposition: float
    residual: float
    imag_leak: float
    diagonal: float
    diagonal_literal: float
    psi_term: Optional[float]
    truncation: dict
    checks: dict

    @property
    def psi(self) -> int:
        return self.p - 2

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        d = dict(self.__dict__)
        d["values"] = {str(k): [v.real, v.imag] for k, v in self.values.items()}
        return d


def _weighted(coef_m, coef_n, t: PairTable, mask) -> float:
    return rsum((coef_m[t.m] * coef_n[t.n] * t.w)[mask])


def moment_decompose(form, p: int, truncation: Optional[int] = None, tol: float = 1e-5,
                     P: Optional[int] = None) -> MomentReport:
    """Twisted second moment over primitive chi != psi_p, two ways.

    Direct: sum of |L(1/2, f x chi)|^2 from the first functional equation.
    Decomposed: D1 + D2 + E after orthogonality, sharing the W truncation.
    """
    _check_prime(p)
    ctx = get_context(p)
    psi = quadratic_character(ctx)
    chars = [c for c in all_characters(ctx) if not c.is_principal and not c.is_quadratic]
    if len(chars) != p - 3:
        raise IdentityViolation("character count", f"{len(chars)} != {p - 3}")
    if truncation is None:
        truncation = afe_truncation(form, p)
    values = {c.k: l_half(form, c, p, truncation) for c in chars}
    moment_c = sum(abs(v) ** 2 for v in values.values())
    moment = float(moment_c)

    t = PairTable.build(form, p, P=P)
    idx = np.arange(len(form.a))
    A = form.a / np.sqrt(np.maximum(idx, 1))
    G = form.a_dual / np.sqrt(np.maximum(idx, 1))
    ps = np.zeros(p)
    ps[1:] = psi.values[1:].real
    Apsi, Gpsi = A * ps[idx % p], G * ps[idx % p]
    cop = t.coprime
    same = cop & ((t.m - t.n) % p == 0)

    def D(coef):
        # sum_{d | p} phi(d) mu(p/d) sum_{m = n mod d, (mn, p) = 1}
        return -_weighted(coef, coef, t, cop) + (p - 1) * _weighted(coef, coef, t, same)

    D1 = D(A)
    D2 = D(Gpsi)
    E = -_weighted(Apsi, Apsi, t, cop) - _weighted(G, G, t, cop)
    decomp = D1 + D2 + E
    residual = abs(moment - decomp) / max(abs(moment), 1e-300)

    # product route per character, summed (checks the second AFE itself)
    prod_sum = csum([_product_from_table(form, c, t) for c in chars])

    diag_n = np.arange(1, math.isqrt(t.P) + 1)
    diag_n = diag_n[diag_n % p != 0]
    wdiag = W_bessel(float(form.k), diag_n.astype(float) ** 2 / (4 * p * p))
    sq = rsum((form.a[diag_n] ** 2 + form.a_dual[diag_n] ** 2) / diag_n * wdiag)
    diagonal = (p - 2) * sq
    diagonal_literal = (p - 1) * sq

    D2_literal = D(G * ps[idx % p])
    imag_leak = max(abs(moment_c.imag) if isinstance(moment_c, complex) else 0.0,
                    abs(prod_sum.imag))
    checks = {
        "decomposition": residual < tol,
        "product_route": abs(prod_sum.real - moment) / moment < tol,
        "character_count": len(chars) == p - 3,
        "real": imag_leak < 1e-8 * max(1.0, moment),
        "gauss_ratio_unit": all(abs(abs(gauss_ratio(c)) - 1) < 1e-10 for c in chars),
        "D2_literal": abs(D2_literal - D2) <= 1e-12 * max(1.0, abs(D2)),
    }
    return MomentReport(
        p=p, characters=len(chars), values=values, moment=moment, D1=D1, D2=D2, E=E,
        decomposition=decomp, residual=residual, imag_leak=imag_leak, diagonal=diagonal,
        diagonal_literal=diagonal_literal,
        psi_term=abs(l_half(form, psi, p, truncation, allow_psi=True)) ** 2,
        truncation={"afe": truncation, "pairs": t.P, "pair_tail": t.tail,
                    "product_route": float(prod_sum.real)},
        checks=checks,
    )


@dataclass
class FitResult:
    c1_hat: float
    c2_hat: float
    residuals: list
    dof: int
    jackknife: dict


def main_term_fit(reports, use: str = "moment") -> FitResult:
    """Least squares of value / psi(p) against log p; no assertion on the constants."""
    pts = sorted({(r.p, getattr(r, use) / (r.p - 2)) for r in reports})
    if len(pts) < 2:
        raise ParameterError(["main_term_fit needs at least two distinct primes"])
    return _fit(pts, jack=True)


def _fit(pts, jack: bool) -> FitResult:
    x = np.array([math.log(p) for p, _ in pts])
    y = np.array([v for _, v in pts])
    A = np.column_stack([x, np.ones_like(x)])
    if np.linalg.matrix_rank(A) < 2:
        raise ParameterError(["degenerate design matrix"])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = (y - A @ coef).tolist()
    jk = {}
    if jack and len(pts) >= 3:
        for i, (p, _) in enumerate(pts):
            sub = _fit(pts[:i] + pts[i + 1:], jack=False)
            jk[p] = sub.c1_hat - float(coef[0])
    return FitResult(float(coef[0]), float(coef[1]), res, len(pts) - 2, jk)
