"""Critical-range identity chain and the ratio against the right side of the bound.

Prints one row per (p, c, M, N): LHS, R split, class sizes, ratio, and
whether every identity check passed.

    python3 notebooks/critical_range_demo.py
"""

from fractions import Fraction

from twistmoment.critrange import CritRangeParams, run_report

GRID = [(101, 7, 7), (229, 10, 10), (401, 14, 16), (1009, 16, 16), (1009, 16, 63)]

print(f"{'p':>5} {'c':>2} {'M':>3} {'N':>3} {'LHS':>12} {'R1':>10} {'R-1':>10} "
      f"{'|L|':>4} {'H1':>3} {'H2':>3} {'H3':>3} {'ratio':>8} ok")
for p, M, N in GRID:
    for c in (1, 3, 7):
        r = run_report(CritRangeParams(p, c, M, N))
        s = r.sizes
        print(f"{p:5d} {c:2d} {M:3d} {N:3d} {r.lhs:12.5g} {r.r1:10.4g} {r.rm1:10.4g} "
              f"{s['L']:4d} {s['H1']:3d} {s['H2']:3d} {s['H3']:3d} {r.ratio:8.4f} {r.ok}")

# a wider exponent vector populates all three classes at desk scale
wide = (Fraction(1, 2), Fraction(1, 5), Fraction(2, 5), Fraction(3, 5), Fraction(1, 4), Fraction(1, 10))
r = run_report(CritRangeParams(401, 1, 14, 30, delta=wide))
print("\nwide delta at p=401:", r.sizes, "embeddings", [b.embeddings for b in r.branches], "ok", r.ok)
