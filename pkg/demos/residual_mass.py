"""Where the truncated equation loses mass.

Writing the equation for T_k(u) leaves a nonnegative residual supported
near {u = k}.  With a point mass the mollified atom sits inside {u > k}
for every k that was tried, so the residual keeps the whole atom mass.
Subtracting that share leaves a remainder that decays quickly.  With a
diffuse datum the residual itself decays.
"""

import numpy as np

from singularpde import (
    Density, ProblemSpec, RadonMeasure, build_grid, mollify, solve_approximating,
    truncation_residual_mass,
)
from singularpde.analysis import fit_loglog_slope

grid = build_grid("unit-ball-radial(3)", 400)
ks = (1.0, 2.0, 4.0, 8.0)

spec = ProblemSpec(grid, 1.0, RadonMeasure.dirac((0.0,), 1.0), gamma=2.0, n=256)
u = solve_approximating(spec)
mu_n = mollify(spec.mu, spec.n, grid).values
print("point mass, gamma = 2")
masses, excess = [], []
for k in ks:
    mass = truncation_residual_mass(u, spec, k)
    above = grid.integrate(mu_n * (u.values > k))
    masses.append(mass)
    excess.append(mass - above)
    print(f"  k={k:4g}  residual={mass:.6f}  atom above k={above:.6f}  remainder={mass - above:.3e}")
print(f"  slope of the residual:  {fit_loglog_slope(ks, masses):.3f}")
print(f"  slope of the remainder: {fit_loglog_slope(ks, excess):.3f}")

spec = ProblemSpec(grid, Density("power", 100.0, -2.5), RadonMeasure.zero(), gamma=0.5, n=256)
u = solve_approximating(spec)
top = u.values.max()
levels = np.geomspace(top / 64, top / 2, 7)
masses = [truncation_residual_mass(u, spec, k) for k in levels]
print("diffuse datum 100 r^-2.5, gamma = 1/2")
for k, m in zip(levels, masses):
    print(f"  k={k:7.3f}  residual={m:9.3f}")
print(f"  slope: {fit_loglog_slope(levels, masses):.3f}")
