"""Salie sums: closed form against the defining sum, the Weil-type bound and
the twisted multiplicativity at c = 4p.

    python3 notebooks/exponential_sums_demo.py
"""

import math

import numpy as np

from twistmoment.expsums import salie_bound_scan, salie_closed_matrix, salie_matrix_direct, twisted_mult_residual_4p
from twistmoment.fp_core import get_context, is_prime

print(f"{'p':>5} {'max|closed-direct|/sqrt p':>27} {'max|S|/sqrt p':>14} {'4p residual':>12}")
for p in [q for q in range(3, 120) if is_prime(q)][::3]:
    ctx = get_context(p)
    C, D = salie_closed_matrix(ctx), salie_matrix_direct(p)
    mask = ~np.isnan(C.real)
    err = np.max(np.abs(C - D)[mask]) / math.sqrt(p)
    print(f"{p:5d} {err:27.2e} {salie_bound_scan(ctx):14.4f} {twisted_mult_residual_4p(13, p):12.2e}")
