"""
The self-induced integral: series against principal value
=========================================================

The singular term I_m is summed as a Fourier series in the arm index with a
closed-form remainder.  The direct principal-value quadrature is slow but
independent, so the two are compared at a few angles.  The size of I_m at
the base spiral falls off like 1/m².
"""

import numpy as np

from spiralsheet.core import DOMAIN, FieldPair, Params, norm_Y
from spiralsheet.singular import evaluate_I_m, i_m_direct

zero = FieldPair.zeros(Params().grid, DOMAIN)
sizes = []
for m in (16, 32, 64):
    res = evaluate_I_m(zero, Params(m=m))
    sizes.append(norm_Y(res.image, 1.0, 0.5))
    print(f"m = {m:3d}  ||I_m[0]||_Y = {sizes[-1]:.4e}  terms = {res.terms}  "
          f"tail uncertainty = {res.tail_uncertainty:.1e}")
slope = np.polyfit(np.log([16, 32, 64]), np.log(sizes), 1)[0]
print(f"log-log slope {slope:.3f}")

res = evaluate_I_m(zero, Params(m=32))
nodes = Params().grid.nodes
for th in (0.5, 1.0, 5.0):
    i = int(np.argmin(abs(np.log(nodes / th))))
    direct = i_m_direct(zero, nodes[i], 32, tol=1e-9)
    print(f"theta = {nodes[i]:.4f}  series {res.values[i]:.10f}  direct {direct:.10f}")
