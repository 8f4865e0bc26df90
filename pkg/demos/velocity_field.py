"""
The velocity of the sheet
=========================

The Biot-Savart velocity is bounded near the centre, where it is dominated
by a point vortex carrying the enclosed circulation.  Circulation around a
circle equals the sheet mass inside it, and the weak form of the
self-similar Euler equations holds for test stream functions.
"""

from pathlib import Path

import numpy as np

from spiralsheet.core import Params
from spiralsheet.geometry import SpiralSolution, theta_of_radius
from spiralsheet.solver import solve
from spiralsheet.velocity import (DiskBump, RadialBump, circulation, export_field,
                                  near_center_check, v_m, weak_residual)

rep = solve(Params(m=32))
s = SpiralSolution(rep.params, rep.x)

for r in (1e-4, 1e-2, 1.0, 100.0):
    smp = v_m(s, r * np.exp(0.05j))
    print(f"|z| = {r:<7g} |v| = {abs(smp.v):.5f}  theta0 = {smp.theta0:.4g}")

rep_c = near_center_check(s, np.logspace(-1, -4, 13))
print(f"near-centre log-slope {rep_c.slope:.3f}, leading share {rep_c.leading_fraction:.6f}")

for rho in (0.05, 0.2, 1.0):
    g = float(s.gamma_tilde(theta_of_radius(s, rho)))
    print(f"rho = {rho:<5g} circulation = {circulation(s, rho):.8f}  gamma(theta0) = {g:.8f}")

for name, eta in (("radial bump", RadialBump(0.2, 0.8)), ("disk bump", DiskBump(0.5 * np.exp(0.3j), 0.1))):
    print(f"weak residual, {name}: {weak_residual(s, eta):.2e}")

out = Path("demo_output")
out.mkdir(exist_ok=True)
export_field(s, resolution=64, path=out / "field_m32.csv")
print("wrote", out / "field_m32.csv")
