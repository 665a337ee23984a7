"""Command-line runner.  Exit codes: 0 pass, 2 assertion violation,
3 inconclusive (missing data or budget exceeded), 4 usage or config error."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    FormValidationError,
    IdentityViolation,
    InconclusiveError,
    InsufficientDataError,
    ParameterError,
)

EXIT_OK, EXIT_VIOLATION, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 2, 3, 4
SALIE_P_CEILING = 2000


class UsageError(Exception):
    pass


class Inconclusive(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"not an integer list: {text!r}") from exc


def _fraction(text):
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from exc


def _common(p: argparse.ArgumentParser):
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--tolerance-scale", type=float, default=1.0)
    p.add_argument("--out", default=None, help="write the report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--config", default=None, help="JSON file mirroring the flags")
    p.add_argument("--deterministic", action="store_true",
                   help="omit wall-clock times so reports are byte-stable")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="twistmoment", description=__doc__)
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("salie-check", help="closed form vs definitional Salie sums")
    s.add_argument("--p-max", type=int, default=50)
    s.add_argument("--mode", choices=("exhaustive", "sampled"), default="exhaustive")
    s.add_argument("--samples", type=int, default=200)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--inject-fault", choices=("closed_form_sign",), default=None)
    _common(s)

    c = sub.add_parser("critrange", help="critical-range identity chain and ratio report")
    c.add_argument("--p", type=int)
    c.add_argument("--c", type=int, default=1)
    c.add_argument("--M", type=int)
    c.add_argument("--N", type=int)
    c.add_argument("--delta", default="reference",
                   help="'reference' or six comma-separated rationals")
    c.add_argument("--grid", default=None,
                   help="semicolon-separated p,M,N triples; runs each for every --cs value")
    c.add_argument("--cs", type=_int_list, default=None)
    c.add_argument("--n-mod4", type=int, default=None)
    c.add_argument("--m-mod4", type=int, default=None)
    c.add_argument("--strict", action="store_true", help="enforce the size condition")
    c.add_argument("--inject-fault", default=None)
    _common(c)

    sp = sub.add_parser("spacing", help="discrepancy, clusters and gaps of alpha n^2 + beta")
    sp.add_argument("--alpha", type=_fraction, action="append", required=True)
    sp.add_argument("--beta", type=_fraction, default=Fraction(0))
    sp.add_argument("--N", type=int, required=True)
    sp.add_argument("--H", type=int, default=50)
    sp.add_argument("--epsilon", type=_fraction, default=Fraction(1, 100))
    _common(sp)

    m = sub.add_parser("moment", help="twisted second moment and its decomposition")
    m.add_argument("--form", required=True)
    m.add_argument("--primes", type=_int_list, required=True)
    _common(m)

    v = sub.add_parser("validate-form", help="run the coefficient-file validators")
    v.add_argument("--form", required=True)
    v.add_argument("--check", action="append", default=None)
    _common(v)

    vo = sub.add_parser("voronoi-check", help="numerical Voronoi summation")
    vo.add_argument("--form", required=True)
    vo.add_argument("--gamma", type=_int_list, default=[1, 0, 4, 1], help="a,b,c,d")
    vo.add_argument("--X", type=float, action="append", default=None)
    vo.add_argument("--lo", type=float, default=1.0)
    vo.add_argument("--hi", type=float, default=2.0)
    _common(vo)
    return ap


def parse_args(argv):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            ap.exit(EXIT_USAGE, f"config: {exc}\n")
        if not isinstance(cfg, dict):
            ap.exit(EXIT_USAGE, "config: top level must be an object\n")
        sub = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        bad = sorted(set(k.replace("-", "_") for k in cfg) - known)
        if bad:
            ap.exit(EXIT_USAGE, f"config: unknown keys {bad}\n")
        sub.set_defaults(**{k.replace("-", "_"): val for k, val in cfg.items()})
        args = ap.parse_args(argv)
    if args.threads < 1:
        ap.exit(EXIT_USAGE, "--threads must be >= 1\n")
    if args.tolerance_scale <= 0:
        ap.exit(EXIT_USAGE, "--tolerance-scale must be > 0\n")
    return args


def _echo(args) -> dict:
    out = {}
    for k, v in sorted(vars(args).items()):
        if isinstance(v, Fraction):
            v = str(v)
        elif isinstance(v, list):
            v = [str(x) if isinstance(x, Fraction) else x for x in v]
        out[k] = v
    return out


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class Run:
    """Collects assertions, timings and the result for one command."""

    def __init__(self, args):
        self.args = args
        self.assertions = []
        self.timings = {}
        self.result = {}
        self.table = None
        self.inconclusive = []

    def check(self, name, passed, detail=""):
        self.assertions.append({"name": name, "passed": bool(passed), "detail": detail})

    def timed(self, label, fn, *a, **kw):
        t = time.perf_counter()
        out = fn(*a, **kw)
        self.timings[label] = round(time.perf_counter() - t, 4)
        return out

    @property
    def status(self):
        if any(not a["passed"] for a in self.assertions):
            return "violation"
        if self.inconclusive:
            return "inconclusive"
        return "pass"

    def report(self) -> dict:
        return _jsonable({
            "command": self.args.command,
            "version": __version__,
            "config": _echo(self.args),
            "status": self.status,
            "inconclusive": self.inconclusive,
            "assertions": self.assertions,
            "timings": None if self.args.deterministic else self.timings,
            "result": self.result,
        })


def _emit(run: Run):
    args = run.args
    if args.format == "csv":
        if run.table is None:
            raise UsageError(f"{args.command} has no tabular output; use --format json")
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(run.table[0].keys()) if run.table else ["empty"])
        w.writeheader()
        for row in run.table:
            w.writerow(_jsonable(row))
        text = buf.getvalue()
    else:
        text = json.dumps(run.report(), indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _pmap(fn, items, threads):
    if threads == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# commands


def cmd_salie_check(run: Run):
    from .expsums import salie_closed_matrix, salie_matrix_direct
    from .fp_core import get_context, is_prime

    a = run.args
    if a.p_max > SALIE_P_CEILING:
        raise UsageError(f"--p-max above the ceiling {SALIE_P_CEILING}")
    primes = [p for p in range(3, a.p_max + 1) if is_prime(p)]
    rng = np.random.default_rng(a.seed)
    tol_scale = a.tolerance_scale

    def one(p):
        ctx = get_context(p)
        closed = salie_closed_matrix(ctx)
        if a.inject_fault == "closed_form_sign":
            closed = -closed
        direct = salie_matrix_direct(p)
        mask = ~np.isnan(closed.real)
        if a.mode == "sampled":
            pick = np.zeros_like(mask)
            idx = rng.integers(1, p, size=(a.samples, 2))
            pick[idx[:, 0], idx[:, 1]] = True
            mask &= pick
        diff = np.abs(direct - closed)[mask]
        worst = float(diff.max()) if diff.size else 0.0
        m = np.arange(p)
        mn = (m[:, None] * m[None, :]) % p
        nonres = mask & (ctx.legendre_array()[mn] == -1)
        zero = float(np.abs(direct[nonres]).max()) if nonres.any() else 0.0
        return p, worst, zero, int(mask.sum())

    rows = run.timed("salie", _pmap, one, primes, a.threads)
    worst_rel = max((w / math.sqrt(p) for p, w, _, _ in rows), default=0.0)
    zero = max((z for _, _, z, _ in rows), default=0.0)
    bad = [(p, w) for p, w, _, _ in rows if w > 1e-6 * math.sqrt(p) * tol_scale]
    run.check("closed_form_matches_direct", not bad,
              f"worst |diff|/sqrt(p) = {worst_rel:.3g}" + (f"; first bad p = {bad[0][0]}" if bad else ""))
    run.check("nonresidue_zero", zero < 1e-9 * tol_scale, f"max |S| on (mn/p) = -1: {zero:.3g}")
    run.result = {"primes": len(primes), "pairs": sum(r[3] for r in rows),
                  "worst_rel": worst_rel, "nonresidue_max": zero}
    run.table = [{"p": p, "max_abs_diff": w, "nonresidue_max": z, "pairs": n} for p, w, z, n in rows]


def _delta(text):
    from .critrange import REFERENCE_DELTA
    if text == "reference":
        return REFERENCE_DELTA
    try:
        d = tuple(Fraction(x) for x in text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad --delta {text!r}") from exc
    if len(d) != 6:
        raise UsageError("--delta needs six entries")
    return d


def cmd_critrange(run: Run):
    from .critrange import FAULTS, CritRangeParams, run_report

    a = run.args
    if a.inject_fault is not None and a.inject_fault not in FAULTS:
        raise UsageError(f"unknown fault {a.inject_fault!r}; known: {', '.join(FAULTS)}")
    delta = _delta(a.delta)
    if a.grid:
        try:
            triples = [tuple(int(x) for x in t.split(",")) for t in a.grid.split(";") if t.strip()]
        except ValueError as exc:
            raise UsageError(f"bad --grid {a.grid!r}") from exc
        if any(len(t) != 3 for t in triples):
            raise UsageError("--grid entries must be p,M,N")
        cs = a.cs or [a.c]
        jobs = [(p, c, M, N) for p, M, N in triples for c in cs]
    else:
        if None in (a.p, a.M, a.N):
            raise UsageError("critrange needs --p, --M and --N (or --grid)")
        jobs = [(a.p, a.c, a.M, a.N)]
    params = []
    for p, c, M, N in jobs:
        params.append(CritRangeParams(p, c, M, N, delta, a.n_mod4, a.m_mod4, a.strict))

    reports = run.timed("critrange", _pmap, lambda pr: run_report(pr, a.inject_fault),
                        params, a.threads)
    rows = []
    for pr, rep in zip(params, reports):
        tag = f"p={pr.p},c={pr.c},M={pr.M},N={pr.N}"
        for chk in rep.checks:
            run.check(f"{tag}:{chk.name}", chk.passed, chk.detail)
        rows.append({"p": pr.p, "c": pr.c, "M": pr.M, "N": pr.N, "lhs": rep.lhs,
                     "rhs": rep.rhs_bound, "ratio": rep.ratio, "L": rep.sizes["L"],
                     "H1": rep.sizes["H1"], "H2": rep.sizes["H2"], "H3": rep.sizes["H3"]})
    run.table = rows
    stability = {}
    max_by_c = {}
    if a.grid:
        by_point = {}
        for r in rows:
            by_point.setdefault((r["p"], r["M"], r["N"]), []).append(r["ratio"])
            max_by_c[r["c"]] = max(max_by_c.get(r["c"], 0.0), r["ratio"])
        for key, ratios in by_point.items():
            spread = max(ratios) / min(ratios) if min(ratios) > 0 else math.inf
            stability["p={},M={},N={}".format(*key)] = spread
        # the asserted statistic is the grid maximum; per-point spreads are reported
        if len(max_by_c) > 1:
            vals = list(max_by_c.values())
            spread = max(vals) / min(vals) if min(vals) > 0 else math.inf
            run.check("max_ratio_stable_in_c", spread < 2.0,
                      f"max ratio per c = {max_by_c}; max/min = {spread:.4g}")
    run.result = {
        "reports": [rep.to_dict() for rep in reports] if not a.grid else None,
        "ratio_table": rows,
        "max_ratio": max(r["ratio"] for r in rows),
        "ratio_spread_over_c": stability,
        "max_ratio_by_c": max_by_c,
        "points_spread_ge_2": sorted(k for k, v in stability.items() if v >= 2.0),
    }


def cmd_spacing(run: Run):
    from .equidist import SequenceSpec, csv_rows

    a = run.args
    if a.N < 1 or a.H < 1:
        raise UsageError("--N and --H must be >= 1")
    if not 0 <= a.epsilon <= Fraction(1, 2):
        raise UsageError("--epsilon must lie in [0, 1/2]")
    specs = [SequenceSpec(al, a.beta, a.N) for al in a.alpha]
    rows = run.timed("spacing", csv_rows, specs, a.H, a.epsilon)
    for r in rows:
        run.check(f"discrepancy_le_et_bound:alpha={r['alpha']}",
                  r["discrepancy"] <= r["et_bound"] + 1e-12,
                  f"D = {r['discrepancy']:.4g}, bound = {r['et_bound']:.4g}")
    run.table = rows
    run.result = {"rows": rows}


def _load_form(run: Run, path):
    from .formdata import load_form, resolve_path

    p = resolve_path(path)
    if not p.exists():
        raise Inconclusive(f"inconclusive - data missing: {p}")
    return run.timed("load_form", load_form, p)


def cmd_moment(run: Run):
    from .lfunc import main_term_fit, moment_decompose

    a = run.args
    if not a.primes:
        raise UsageError("--primes is empty")
    bad = [p for p in a.primes if p % 4 != 1]
    if bad:
        raise UsageError(f"primes must be 1 mod 4: {bad}")
    form = _load_form(run, a.form)
    tol = 1e-5 * a.tolerance_scale
    reports = run.timed("moment", _pmap, lambda p: moment_decompose(form, p, tol=tol),
                        a.primes, a.threads)
    per = []
    for r in reports:
        for name, ok in r.checks.items():
            run.check(f"p={r.p}:{name}", ok, f"residual {r.residual:.3g}" if name == "decomposition" else "")
        d = r.to_dict()
        d["moment_with_psi_term"] = r.moment + r.psi_term
        d["psi_term_note"] = "chi = psi_p lies outside the identity-checked set"
        per.append(d)
    fit = None
    if len({r.p for r in reports}) >= 2:
        f = main_term_fit(reports)
        fit = {"c1_hat": f.c1_hat, "c2_hat": f.c2_hat, "residuals": f.residuals,
               "dof": f.dof, "jackknife_c1_delta": f.jackknife}
        if f.dof == 0:
            fit["note"] = "0 degrees of freedom: exact interpolation"
    run.result = {"reports": per, "fit": fit}
    run.table = [{"p": r.p, "moment": r.moment, "D1": r.D1, "D2": r.D2, "E": r.E,
                  "residual": r.residual, "diagonal": r.diagonal, "psi_term": r.psi_term}
                 for r in reports]


def cmd_validate_form(run: Run):
    from .formdata import VALIDATORS, parse_form, resolve_path, validate_form

    a = run.args
    if a.check:
        unknown = [c for c in a.check if c not in VALIDATORS]
        if unknown:
            raise UsageError(f"unknown validators {unknown}; choose from {list(VALIDATORS)}")
    p = resolve_path(a.form)
    if not p.exists():
        raise Inconclusive(f"inconclusive - data missing: {p}")
    try:
        form = parse_form(p.read_text(), str(p))
    except FormValidationError as exc:
        run.check(exc.check, False, str(exc))
        run.result = {"source": str(p)}
        return
    rep = run.timed("validate", validate_form, form, a.check)
    for c in rep.checks:
        run.check(c.name, c.passed, c.detail if c.passed else f"{c.location}: {c.detail}")
    run.result = rep.to_dict()
    run.table = [c.to_dict() for c in rep.checks]


def cmd_voronoi_check(run: Run):
    from .formdata import meansquare_envelope
    from .special_fns import TestWeight, voronoi_check

    a = run.args
    if len(a.gamma) != 4:
        raise UsageError("--gamma needs a,b,c,d")
    form = _load_form(run, a.form)
    V = TestWeight(a.lo, a.hi)
    K = meansquare_envelope(form)
    rows = []
    for X in a.X or [20.0]:
        r = run.timed(f"voronoi_X={X}", voronoi_check, form.a, tuple(a.gamma), V, X, form.k, K)
        if r.status == "inconclusive":
            run.inconclusive.append(f"X={X}: tail estimate {r.truncation_estimate:.3g}")
        else:
            run.check(f"voronoi_X={X}", r.residual < 1e-6 * a.tolerance_scale,
                      f"residual {r.residual:.3g} with {r.dual_terms} dual terms")
        rows.append({"X": X, "left": r.left, "right": r.right, "residual": r.residual,
                     "dual_terms": r.dual_terms, "tail": r.truncation_estimate,
                     "tail_method": r.details["tail_method"], "status": r.status})
    run.table = rows
    run.result = {"rows": rows}


COMMANDS = {
    "salie-check": cmd_salie_check,
    "critrange": cmd_critrange,
    "spacing": cmd_spacing,
    "moment": cmd_moment,
    "validate-form": cmd_validate_form,
    "voronoi-check": cmd_voronoi_check,
}


def main(argv=None) -> int:
    args = parse_args(sys.argv[1:] if argv is None else argv)
    run = Run(args)
    try:
        COMMANDS[args.command](run)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParameterError as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Inconclusive as exc:
        run.inconclusive.append(str(exc))
    except (InconclusiveError, InsufficientDataError) as exc:
        run.inconclusive.append(f"inconclusive: {exc}")
    except FormValidationError as exc:
        run.check(f"form:{exc.check}", False, str(exc))
    except IdentityViolation as exc:
        run.check(exc.name, False, exc.detail)
    try:
        if run.table is None and args.format == "csv":
            args.format = "json"
        _emit(run)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return {"pass": EXIT_OK, "violation": EXIT_VIOLATION, "inconclusive": EXIT_INCONCLUSIVE}[run.status]


if __name__ == "__main__":
    sys.exit(main())
