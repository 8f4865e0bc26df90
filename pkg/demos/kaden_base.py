"""
The limiting spiral and its family
==================================

As m grows the self-similar equation loses its integral term, and what is
left has the algebraic spiral r = θ^-μ, γ = -2π θ^(1-2μ) as an exact
solution.  Two more members of the same family are checked here too.
"""

import math

import numpy as np

from spiralsheet.kaden import KadenProfile, gamma0, r0

theta = np.logspace(-2, 2, 5)
print("theta        r0            gamma0")
for t, r, g in zip(theta, r0(theta), gamma0(theta)):
    print(f"{t:<12.4g} {r:<13.6g} {g:.6g}")

# residual of the limiting equation, relative to μ r², on 16 angles
th = np.logspace(-2, 2, 16)
for c1, c2 in ((-2 * math.pi, 0.0), (-math.pi, 0.5), (-4 * math.pi, 1.0)):
    prof = KadenProfile(1.0, c1, c2)
    res = np.max(np.abs(prof.residual(th)) / prof.r(th) ** 2)
    print(f"c1 = {c1:8.4f}  c2 = {c2:3.1f}  max relative residual = {res:.2e}")
