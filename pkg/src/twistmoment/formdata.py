"""Loading, validation and profiling of half-integral weight coefficient files.

File format (one item per line, '#' starts a comment):

    k 13/2
    j 3
    eps_sign 1            # W4 eigenvalue; 0 = not an eigenform, dual section required
    precision_bits 0      # 0 = values are exact
    normalization b(1)=1
    <n> <b(n)>            # body
    lambda <p> <value>    # Hecke eigenvalues
    shimura <n> <c(n)>    # coefficients of the Shimura lift
    dual <n> <value>      # coefficients of the W4 image, optional

Values are integers, rationals a/b, or decimal strings; all parse exactly.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import FormValidationError, InsufficientDataError
from .fp_core import csum, divisors, e_frac_array, is_prime, kronecker, mobius

FORM_DIR_ENV = "TWISTMOMENT_FORM_DIR"
HEADER_KEYS = ("k", "j", "eps_sign", "precision_bits", "normalization")
VALIDATORS = ("schema", "real", "plus_space", "nonzero", "hecke", "coeff_relation", "dual")


def _parse_value(text: str, where: str):
    try:
        if "/" in text:
            return Fraction(text)
        try:
            return int(text)
        except ValueError:
            return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise FormValidationError("real", f"value {text!r} is not a real number", where) from exc


@dataclass(frozen=True, eq=False)
class HalfIntegralForm:
    j: int
    eps_sign: int
    b: tuple
    lam: dict
    shimura_c: Optional[dict] = None
    dual_b: Optional[tuple] = None
    precision_bits: int = 0
    normalization: str = ""
    source: Optional[str] = None

    @property
    def k(self) -> Fraction:
        return Fraction(1, 2) + 2 * self.j

    @property
    def n_max(self) -> int:
        return len(self.b) - 1

    @cached_property
    def a(self) -> np.ndarray:
        """a(n) = b(n) n^{-(k-1)/2}; a[0] = 0."""
        return _normalise(self.b, self.k)

    @cached_property
    def a_dual(self) -> np.ndarray:
        """Normalised coefficients of the W4 image."""
        if self.dual_b is not None:
            return _normalise(self.dual_b, self.k)
        if self.eps_sign == 0:
            raise FormValidationError("dual", "form is not a W4 eigenform and has no dual section")
        return self.eps_sign * self.a

    def require(self, n: int, what: str = "coefficients"):
        if n > self.n_max:
            raise InsufficientDataError(n, self.n_max, what)

    def replace(self, **changes) -> "HalfIntegralForm":
        fields = dict(j=self.j, eps_sign=self.eps_sign, b=self.b, lam=self.lam,
                      shimura_c=self.shimura_c, dual_b=self.dual_b,
                      precision_bits=self.precision_bits, normalization=self.normalization,
                      source=self.source)
        fields.update(changes)
        return HalfIntegralForm(**fields)


def _normalise(coeffs, k) -> np.ndarray:
    n = np.arange(len(coeffs), dtype=float)
    vals = np.array([float(x) for x in coeffs])
    out = np.zeros_like(vals)
    out[1:] = vals[1:] / n[1:] ** ((float(k) - 1) / 2)
    return out


# parsing


def parse_form(text: str, source: Optional[str] = None) -> HalfIntegralForm:
    header: dict = {}
    body: dict = {}
    lam: dict = {}
    shim: dict = {}
    dual: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        where = f"line {lineno}"
        parts = line.split()
        head = parts[0]
        if head in HEADER_KEYS:
            if len(parts) < 2:
                raise FormValidationError("schema", f"header {head} has no value", where)
            header[head] = " ".join(parts[1:])
            continue
        if head in ("lambda", "shimura", "dual"):
            if len(parts) != 3:
                raise FormValidationError("schema", f"malformed {head} line", where)
            key = _parse_index(parts[1], where)
            table = {"lambda": lam, "shimura": shim, "dual": dual}[head]
            if key in table:
                raise FormValidationError("schema", f"duplicate {head} {key}", where)
            table[key] = _parse_value(parts[2], where)
            continue
        if len(parts) != 2:
            raise FormValidationError("schema", f"unrecognised line {line!r}", where)
        n = _parse_index(parts[0], where)
        if n in body:
            raise FormValidationError("schema", f"duplicate coefficient {n}", where)
        body[n] = _parse_value(parts[1], where)

    for key in HEADER_KEYS:
        if key not in header:
            raise FormValidationError("schema", f"missing header {key}", source)
    try:
        j = int(header["j"])
        k = Fraction(header["k"])
        eps_sign = int(header["eps_sign"])
        bits = int(header["precision_bits"])
    except ValueError as exc:
        raise FormValidationError("schema", f"bad header value: {exc}", source) from exc
    if j < 1 or k != Fraction(1, 2) + 2 * j:
        raise FormValidationError("schema", f"k = {k} is not 1/2 + 2j for j = {j}", source)
    if eps_sign not in (-1, 0, 1):
        raise FormValidationError("schema", "eps_sign must be -1, 0 or 1", source)
    if bits < 0:
        raise FormValidationError("schema", "precision_bits must be >= 0", source)
    if not body:
        raise FormValidationError("schema", "no coefficients", source)
    n_max = max(body)
    missing = [n for n in range(1, n_max + 1) if n not in body]
    if missing:
        raise FormValidationError("schema", f"coefficient gap at n = {missing[0]}", source)
    b = tuple([0] + [body[n] for n in range(1, n_max + 1)])
    dual_b = None
    if dual:
        if max(dual) != n_max or len(dual) != n_max:
            raise FormValidationError("schema", "dual section must cover the same range", source)
        dual_b = tuple([0] + [dual[n] for n in range(1, n_max + 1)])
    elif eps_sign == 0:
        raise FormValidationError("schema", "eps_sign 0 needs a dual section", source)
    return HalfIntegralForm(j, eps_sign, b, lam, shim or None, dual_b, bits,
                            header["normalization"], source)


def _parse_index(text: str, where: str) -> int:
    try:
        n = int(text)
    except ValueError as exc:
        raise FormValidationError("schema", f"index {text!r} is not an integer", where) from exc
    if n < 1:
        raise FormValidationError("schema", f"index {n} must be positive", where)
    return n


def resolve_path(path) -> Path:
    p = Path(path)
    if not p.is_absolute() and not p.exists() and os.environ.get(FORM_DIR_ENV):
        p = Path(os.environ[FORM_DIR_ENV]) / p
    return p


def load_form(path, validate: bool = True) -> HalfIntegralForm:
    p = resolve_path(path)
    if not p.exists():
        raise FileNotFoundError(f"form file {p} not found")
    form = parse_form(p.read_text(), str(p))
    if validate:
        validate_form(form, raise_on_failure=True)
    return form


# validators


def _budget(form: HalfIntegralForm, scale) -> Fraction:
    if form.precision_bits == 0:
        return Fraction(0)
    return Fraction(abs(scale) + 1) / (1 << form.precision_bits)


@dataclass
class CheckReport:
    name: str
    passed: bool
    max_residual: float = 0.0
    tested: int = 0
    location: Optional[str] = None
    detail: str = ""
    skipped: bool = False

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def check_plus_space(form: HalfIntegralForm) -> CheckReport:
    bad = [n for n in range(1, form.n_max + 1) if n % 4 in (2, 3) and form.b[n] != 0]
    return CheckReport("plus_space", not bad, tested=form.n_max,
                       location=f"n={bad[0]}" if bad else None,
                       detail=f"b({bad[0]}) = {form.b[bad[0]]}" if bad else "")


def check_nonzero(form: HalfIntegralForm) -> CheckReport:
    nz = next((n for n in range(1, form.n_max + 1) if form.b[n] != 0), None)
    return CheckReport("nonzero", nz is not None, tested=form.n_max,
                       detail="zero form" if nz is None else f"first nonzero at n={nz}")


def check_real(form: HalfIntegralForm) -> CheckReport:
    ok = all(isinstance(x, (int, Fraction)) for x in form.b)
    return CheckReport("real", ok, tested=form.n_max)


def hecke_residuals(coeffs, form: HalfIntegralForm, p: int) -> dict:
    lam = form.lam[p]
    e1 = 2 * form.j - 1  # k - 3/2
    e2 = 4 * form.j - 1  # 2k - 2
    out = {}
    for n in range(1, form.n_max // (p * p) + 1):
        r = coeffs[p * p * n] + kronecker(n, p) * p**e1 * coeffs[n] - lam * coeffs[n]
        if n % (p * p) == 0:
            r += p**e2 * coeffs[n // (p * p)]
        out[n] = r
    return out


def check_hecke(form: HalfIntegralForm, p: int, dual: bool = False) -> CheckReport:
    name = "dual" if dual else "hecke"
    if p not in form.lam:
        raise InsufficientDataError(p, max(form.lam, default=0), f"lambda({p})")
    if p == 2 or not is_prime(p):
        raise ValueError("Hecke check needs an odd prime")
    if form.n_max < p * p:
        raise InsufficientDataError(p * p, form.n_max, "coefficients for the Hecke relation")
    coeffs = form.dual_b if dual else form.b
    res = hecke_residuals(coeffs, form, p)
    worst_n, worst = max(res.items(), key=lambda kv: abs(kv[1]))
    scale = max(abs(coeffs[p * p * n]) for n in res) or 1
    passed = all(abs(r) <= _budget(form, scale * p ** (4 * form.j - 1)) for r in res.values())
    first_bad = None
    if not passed:
        first_bad = next(n for n, r in res.items()
                         if abs(r) > _budget(form, scale * p ** (4 * form.j - 1)))
    return CheckReport(name, passed, float(abs(worst)), len(res),
                       f"p={p} n={first_bad}" if first_bad else None,
                       f"worst at n={worst_n}")


def is_fundamental_discriminant(d: int) -> bool:
    if d == 1:
        return True
    if d % 4 == 1:
        return mobius(abs(d)) != 0
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and mobius(abs(m)) != 0
    return False


def coeff_relation_residual(form: HalfIntegralForm, d: int, delta: int):
    c = form.shimura_c
    e1 = 2 * form.j - 1
    rhs = form.b[d] * sum(mobius(e) * e**e1 * kronecker(d, e) * c[delta // e]
                          for e in divisors(delta))
    return form.b[d * delta * delta] - rhs


def check_coeff_relation(form: HalfIntegralForm, d: int, delta: int) -> CheckReport:
    if form.shimura_c is None:
        return CheckReport("coeff_relation", True, skipped=True, detail="no Shimura data")
    if d <= 0 or not is_fundamental_discriminant(d):
        raise ValueError(f"{d} is not a positive fundamental discriminant")
    if form.b[d] == 0:
        raise ValueError(f"b({d}) = 0")
    form.require(d * delta * delta)
    if delta > max(form.shimura_c):
        raise InsufficientDataError(delta, max(form.shimura_c), "Shimura coefficients")
    r = coeff_relation_residual(form, d, delta)
    ok = abs(r) <= _budget(form, form.b[d * delta * delta])
    return CheckReport("coeff_relation", ok, float(abs(r)), 1,
                       None if ok else f"d={d} delta={delta}")


def _all_hecke(form, dual=False) -> CheckReport:
    name = "dual" if dual else "hecke"
    primes = sorted(p for p in form.lam if p > 2 and p * p <= form.n_max)
    if not primes:
        return CheckReport(name, True, skipped=True, detail="no testable eigenvalues")
    total, worst = 0, 0.0
    for p in primes:
        rep = check_hecke(form, p, dual)
        total += rep.tested
        worst = max(worst, rep.max_residual)
        if not rep.passed:
            rep.tested = total
            return rep
    return CheckReport(name, True, worst, total, detail=f"primes {primes[0]}..{primes[-1]}")


def _all_coeff_relations(form) -> CheckReport:
    if form.shimura_c is None:
        return CheckReport("coeff_relation", True, skipped=True, detail="no Shimura data")
    cmax = max(form.shimura_c)
    tested, worst = 0, 0.0
    for d in range(1, form.n_max + 1):
        if form.b[d] == 0 or not is_fundamental_discriminant(d):
            continue
        delta = 2
        while d * delta * delta <= form.n_max and delta <= cmax:
            r = coeff_relation_residual(form, d, delta)
            tested += 1
            worst = max(worst, float(abs(r)))
            if abs(r) > _budget(form, form.b[d * delta * delta]):
                return CheckReport("coeff_relation", False, worst, tested, f"d={d} delta={delta}")
            delta += 1
    return CheckReport("coeff_relation", True, worst, tested)


def check_dual(form: HalfIntegralForm) -> CheckReport:
    if form.dual_b is None:
        return CheckReport("dual", True, skipped=True, detail=f"dual = {form.eps_sign} * f")
    if form.eps_sign != 0:
        bad = next((n for n in range(1, form.n_max + 1)
                    if form.dual_b[n] != form.eps_sign * form.b[n]), None)
        if bad is not None:
            return CheckReport("dual", False, tested=form.n_max, location=f"n={bad}",
                               detail="dual disagrees with eps_sign * b")
    return _all_hecke(form, dual=True)


def run_validator(form: HalfIntegralForm, name: str) -> CheckReport:
    if name == "schema":
        return CheckReport("schema", True, tested=form.n_max)
    if name == "real":
        return check_real(form)
    if name == "plus_space":
        return check_plus_space(form)
    if name == "nonzero":
        return check_nonzero(form)
    if name == "hecke":
        return _all_hecke(form)
    if name == "coeff_relation":
        return _all_coeff_relations(form)
    if name == "dual":
        return check_dual(form)
    raise ValueError(f"unknown validator {name!r}; choose from {VALIDATORS}")


@dataclass
class ValidationReport:
    source: Optional[str]
    checks: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"source": self.source, "ok": self.ok, "checks": [c.to_dict() for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def validate_form(form: HalfIntegralForm, only=None, raise_on_failure: bool = False):
    names = VALIDATORS if only is None else tuple(only)
    report = ValidationReport(form.source)
    for name in names:
        rep = run_validator(form, name)
        report.checks.append(rep)
        if not rep.passed and raise_on_failure:
            raise FormValidationError(name, rep.detail or "validation failed", rep.location)
        if name == "nonzero" and not rep.passed:
            break
    return report


# profiles


@dataclass
class MeansquareProfile:
    X: list
    partial_sums: list
    ratios: list
    c_hat: float
    passed: bool


def meansquare_profile(form: HalfIntegralForm, X_grid) -> MeansquareProfile:
    X_grid = [int(x) for x in X_grid]
    for X in X_grid:
        form.require(X)
    cum = np.cumsum(form.a**2)
    S = [float(cum[X]) for X in X_grid]
    ratios = [s / (X * math.log(X)) if X > 1 else math.nan for s, X in zip(S, X_grid)]
    big = [(X, s) for X, s in zip(X_grid, S) if X >= 100]
    if big:
        # least-squares constant fitted to the ratios themselves
        rs = [s / (X * math.log(X)) for X, s in big]
        c_hat = math.fsum(rs) / len(rs)
        passed = all(r <= 2 * c_hat for r in rs)
    else:
        c_hat, passed = math.nan, True
    mono = all(b >= a for a, b in zip(S, S[1:])) if X_grid == sorted(X_grid) else True
    return MeansquareProfile(X_grid, S, ratios, c_hat, passed and mono)


def meansquare_envelope(form: HalfIntegralForm, start: int = 3) -> float:
    """max_{start <= X <= N} sum_{n<=X} a(n)^2 / (X log X), with 1.5x headroom.

    Used as the constant K in sum_{n<=x} a(n)^2 <= K x log x beyond the data.
    """
    cum = np.cumsum(form.a**2)
    X = np.arange(start, form.n_max + 1)
    return 1.5 * float(np.max(cum[start:] / (X * np.log(X))))


@dataclass
class WiltonProfile:
    X: int
    alphas: list
    values: list
    envelope: float
    constants: list
    max_constant: float
    passed: bool


def wilton_profile(form: HalfIntegralForm, alpha_grid, X: int) -> WiltonProfile:
    form.require(X)
    n = np.arange(1, X + 1)
    a = form.a[1 : X + 1]
    vals = []
    for alpha in alpha_grid:
        fa = Fraction(alpha).limit_denominator(10**9) if isinstance(alpha, float) else Fraction(alpha)
        vals.append(abs(csum(a * e_frac_array(fa.numerator * n, fa.denominator))))
    env = math.sqrt(X) * math.log(X) ** 2
    consts = [v / env for v in vals]
    mx = max(consts)
    return WiltonProfile(X, [float(x) for x in alpha_grid], vals, env, consts, mx, mx < 1.0)


# fault corpus


FORM_FAULTS = ("schema", "real", "plus_space", "nonzero", "hecke", "coeff_relation", "dual")


def inject_fault_text(text: str, fault: str) -> str:
    """Corrupt a form file's text so that exactly the named validator fires."""
    lines = text.splitlines()
    if fault == "schema":
        return "\n".join(l for l in lines if not l.startswith("k ")) + "\n"
    if fault == "real":
        return "\n".join("5 120+1j" if l == "5 120" or l.startswith("5 ") else l
                         for l in lines) + "\n"
    out = []
    for l in lines:
        parts = l.split()
        if fault == "plus_space" and parts[:1] == ["2"]:
            l = "2 1"
        elif fault == "nonzero" and len(parts) == 2 and parts[0].isdigit():
            l = f"{parts[0]} 0"
        elif fault == "hecke" and parts[:1] == ["5"] and len(parts) == 2:
            l = f"5 {int(parts[1]) + 1}"
        elif fault == "coeff_relation" and parts[:2] == ["shimura", "2"]:
            l = f"shimura 2 {int(parts[2]) + 1}"
        elif fault == "dual" and parts[:2] == ["dual", "5"]:
            l = f"dual 5 {Fraction(parts[2]) + 1}"
        out.append(l)
    if fault not in FORM_FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    return "\n".join(out) + "\n"
