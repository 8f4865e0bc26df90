"""
The nonlinear operator near the base spiral
===========================================

N vanishes at the base point and agrees with L to second order.  Its inverse
is found by the inner iteration x <- M[y - (N - L)x].
"""

import numpy as np

from spiralsheet.checks import random_smooth_pair
from spiralsheet.core import DOMAIN, FieldPair, GridSpec, norm_X, norm_Y
from spiralsheet.linear import apply_L
from spiralsheet.nonlinear import apply_N, invert_N

grid, mu = GridSpec(), 1.0
print("||N[0,0]||_Y =", norm_Y(apply_N(FieldPair.zeros(grid, DOMAIN), mu), mu, 0.5))

p = random_smooth_pair(grid, mu, np.random.default_rng(3))
p = p * (1.0 / norm_X(p, mu, 0.5))
print("\nsize     ||N(p) - L(p)||_Y / size^2")
for size in (1e-1, 1e-2, 1e-3, 1e-4):
    q = p * size
    print(f"{size:<8.0e} {norm_Y(apply_N(q, mu) - apply_L(q, mu), mu, 0.5) / size**2:.6f}")

q = p * 2e-2
res = invert_N(apply_N(q, mu), mu, 0.5, tol=1e-10)
print(f"\ninverse: {res.iterations} inner steps, error {norm_X(res.x - q, mu, 0.5):.1e}")
