"""
Solving for the m-armed spiral
==============================

The perturbation x solves N[x] = I_m[x] and is found by iterating
x <- N^-1(I_m[x]) from the base spiral.  Its size decays like C/m².
"""

import numpy as np

from spiralsheet.core import Params
from spiralsheet.errors import ContractError
from spiralsheet.solver import main_equation_check, solve

norms = {}
for m in (16, 32, 64):
    rep = solve(Params(m=m))
    norms[m] = rep.norm
    print(f"m = {m:3d}  converged = {rep.converged}  steps = {len(rep.iterates)}  "
          f"||x||_X = {rep.norm:.4f}  ratio = {rep.ratio:.3g}  residual = {rep.residual:.1e}")
    if m == 32:
        err = main_equation_check(rep.x, rep.params, [0.3, 1.0, 5.0, 12.0])
        print("   main equation error at 4 angles:", np.array2string(err, precision=1))

ms = np.array(sorted(norms))
slope = np.polyfit(np.log(ms), np.log([norms[m] for m in ms]), 1)[0]
print(f"norm slope {slope:.3f}; m^2 ||x|| = " + ", ".join(f"{m * m * norms[m]:.0f}" for m in ms))

# few arms: the first iterate already leaves the contraction ball
for m in (2, 4):
    try:
        solve(Params(m=m))
    except ContractError as err:
        print(f"m = {m}: {type(err).__name__}: {err}")
