"""Generate the weight 13/2 Kohnen plus-space eigenform coefficient file.

Standalone recipe; the package never imports it.  The form is
    f = sum_s sum_m (s^2 [m=0] + (120 s^2 - 60 m) sigma_3(m)) q^(s^2 + 4m)
with s over all integers.  Its Shimura lift is the discriminant form, so the
Hecke eigenvalues are tau(p).  The W4 image g is written out as a dual section:
    g = -(8 G Dtheta - DG theta) / 256,  G = 1 + 240 sum sigma_3(n) q^n,
with D = q d/dq.  Nothing here is trusted by the package: load_form re-checks
plus-space support, the Hecke relations and the Shimura coefficient relation.

usage: python3 make_weight13_2.py OUT [--nmax 50000]
"""

import argparse
import math
from fractions import Fraction

import numpy as np


def sigma3(N):
    s = np.zeros(N + 1, dtype=object)
    s[:] = 0
    for d in range(1, N + 1):
        s[d::d] += d**3
    return s


def form_coeffs(N, s3):
    b = np.zeros(N + 1, dtype=object)
    b[:] = 0
    S = math.isqrt(N)
    for s in range(-S, S + 1):
        s2 = s * s
        b[s2] += Fraction(s2, 2) if s else 0
        top = (N - s2) // 4
        if top < 1:
            continue
        m = np.arange(1, top + 1, dtype=object)
        b[s2 + 4 : s2 + 4 * top + 1 : 4] += (120 * s2 - 60 * m) * s3[1 : top + 1]
    return [int(x) for x in b]


def dual_coeffs(N, s3):
    G = np.zeros(N + 1, dtype=object)
    G[0] = 1
    G[1:] = 240 * s3[1:]
    DG = G * np.arange(N + 1, dtype=object)
    acc = np.zeros(N + 1, dtype=object)
    acc[:] = 0
    S = math.isqrt(N)
    for s in range(-S, S + 1):
        s2 = s * s
        # theta has coefficient 1 at s^2 for each s; Dtheta has s^2
        acc[s2:] += 8 * s2 * G[: N + 1 - s2] - DG[: N + 1 - s2]
    return [-Fraction(int(x), 256) for x in acc]


def tau(N):
    """Ramanujan tau via prod (1 - q^n)^24 = (sum (-1)^m (2m+1) q^(m(m+1)/2))^8."""
    e3 = [0] * (N + 1)
    m = 0
    while m * (m + 1) // 2 <= N:
        e3[m * (m + 1) // 2] += (-1) ** m * (2 * m + 1)
        m += 1

    def mul(x, y):
        out = [0] * (N + 1)
        for i, a in enumerate(x):
            if a:
                for j in range(N + 1 - i):
                    if y[j]:
                        out[i + j] += a * y[j]
        return out

    e6 = mul(e3, e3)
    e12 = mul(e6, e6)
    e24 = mul(e12, e12)
    return [0] + e24[: N]  # q * prod


def odd_primes(limit):
    return [p for p in range(3, limit + 1) if all(p % d for d in range(2, math.isqrt(p) + 1))]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    ap.add_argument("--nmax", type=int, default=50000)
    args = ap.parse_args()
    N = args.nmax
    s3 = sigma3(N)
    b = form_coeffs(N, s3)
    g = dual_coeffs(N, s3)
    tmax = math.isqrt(N) + 1
    t = tau(tmax)
    with open(args.out, "w") as fh:
        fh.write("k 13/2\nj 3\neps_sign 0\nprecision_bits 0\nnormalization b(1)=1\n")
        for n in range(1, N + 1):
            fh.write(f"{n} {b[n]}\n")
        for p in odd_primes(math.isqrt(N)):
            fh.write(f"lambda {p} {t[p]}\n")
        for n in range(1, tmax + 1):
            fh.write(f"shimura {n} {t[n]}\n")
        for n in range(1, N + 1):
            fh.write(f"dual {n} {g[n]}\n")


if __name__ == "__main__":
    main()
