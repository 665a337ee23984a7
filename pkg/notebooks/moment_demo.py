"""Twisted second moment for the weight 13/2 form.

Generates the coefficient file with tools/make_weight13_2.py (unless
TWISTMOMENT_FORM_FILE points at one), validates it, then prints the direct
moment, its D1 + D2 + E decomposition and the diagonal term.

    python3 notebooks/moment_demo.py
"""

import os
import subprocess
import sys
import tempfile
from pathlib import Path

from twistmoment.formdata import load_form
from twistmoment.lfunc import main_term_fit, moment_decompose

path = os.environ.get("TWISTMOMENT_FORM_FILE")
if not path:
    path = str(Path(tempfile.mkdtemp()) / "weight13_2.txt")
    gen = Path(__file__).resolve().parents[1] / "tools" / "make_weight13_2.py"
    subprocess.run([sys.executable, str(gen), path], check=True)
form = load_form(path)

reports = []
print(f"{'p':>3} {'moment':>12} {'D1':>12} {'D2':>12} {'E':>12} {'residual':>9} {'diagonal':>12} {'psi term':>10}")
for p in (13, 17, 29):
    r = moment_decompose(form, p)
    reports.append(r)
    print(f"{p:3d} {r.moment:12.6g} {r.D1:12.6g} {r.D2:12.6g} {r.E:12.6g} {r.residual:9.1e} "
          f"{r.diagonal:12.6g} {r.psi_term:10.4g}")
fit = main_term_fit(reports)
print(f"\nmoment/(p-2) ~ c1 log p + c2: c1 = {fit.c1_hat:.4g}, c2 = {fit.c2_hat:.4g}, dof = {fit.dof}")
