"""Point source for the radial p-Laplacian in three dimensions.

Near the origin the solution behaves like r^((p-N)/(p-1)).  The fitted
exponent is compared with that value for a few p.
"""

import math

from singularpde import (
    LerayLionsSpec, ProblemSpec, RadonMeasure, build_grid, fundamental_exponent,
    solve_approximating,
)
from singularpde.analysis import near_origin_slope

grid = build_grid("unit-ball-radial(3)", 400)
atom = RadonMeasure.dirac((0.0,), 1.0)

print(f"{'p':>5} {'fitted':>9} {'expected':>9}")
for p in (1.8, 2.0, 2.5, 2.9):
    spec = ProblemSpec(grid, 0.0, atom, gamma=1.0, n=math.inf, leray_lions=LerayLionsSpec(p))
    u = solve_approximating(spec)
    slope = near_origin_slope(u, 8 * grid.h, 0.25)
    print(f"{p:5.2f} {slope:9.4f} {fundamental_exponent(p, 3):9.4f}")
