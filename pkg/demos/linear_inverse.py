"""
Inverting the linearised operator
=================================

L maps a decaying perturbation (r, γ) to its linear image; M undoes it with
two weighted integrals.  Random smooth pairs go through L and back.
"""

import numpy as np

from spiralsheet.checks import random_smooth_pair
from spiralsheet.core import GridSpec, norm_X, norm_Y
from spiralsheet.linear import apply_L, apply_M

grid = GridSpec()
rng = np.random.default_rng(1)
for mu in (0.75, 1.0, 2.0):
    worst_x = worst_y = 0.0
    for _ in range(10):
        p = random_smooth_pair(grid, mu, rng)
        y = apply_L(p, mu)
        back = apply_M(y, mu)
        worst_x = max(worst_x, norm_X(back - p, mu, 0.5) / norm_X(p, mu, 0.5))
        worst_y = max(worst_y, norm_Y(apply_L(back, mu) - y, mu, 0.5) / norm_Y(y, mu, 0.5))
    print(f"mu = {mu:4.2f}   M(L p) vs p: {worst_x:.1e}   L(M y) vs y: {worst_y:.1e}")
