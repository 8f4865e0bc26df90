"""
From profile to sheet
=====================

The solved profile gives the sheet z(γ) = r̃(θ) e^{iθ} with θ = θ(γ), and
the physical sheet Z(t, Γ) = t^μ z(t^(1-2μ) Γ).  The far-field constants
approach their limiting values as m grows.  Curves are written as SVG.
"""

import math
from pathlib import Path

from spiralsheet.core import DOMAIN, FieldPair, Params
from spiralsheet.geometry import SpiralSolution, asymptotics, export_curve
from spiralsheet.solver import solve

out = Path("demo_output")
out.mkdir(exist_ok=True)

for m in (16, 32, 64):
    rep = solve(Params(m=m))
    a = asymptotics(SpiralSolution(rep.params, rep.x))
    print(f"m = {m:3d}  a_m = {a['a_m']:.6f}  b_m = {a['b_m']:.6f}  "
          f"beta_m - (2pi)^-1 = {a['beta_m'] - 1 / (2 * math.pi):.3e}")

s = SpiralSolution(rep.params, rep.x)
for t in (0.0, 1.0):
    export_curve(s, t, format="svg", path=out / f"sheet_m64_t{t:g}.svg")

# the four-armed picture of the base spiral, for shape only
p4 = Params(m=4)
base = SpiralSolution(p4, FieldPair.zeros(p4.grid, DOMAIN))
export_curve(base, 1.0, format="svg", path=out / "base_m4_t1.svg")
print("wrote", ", ".join(sorted(f.name for f in out.glob("*.svg"))))
