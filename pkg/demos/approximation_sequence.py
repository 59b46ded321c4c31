"""Behaviour of u_n as the regularization index grows.

Solves the disk problem along n = 4, 16, 64, 256, 1024 with warm starts
and prints the relative L1 change between neighbours and the minimum of
u_n away from the boundary, which stays above the minimum of the n = 1
pure singular solution.
"""

from singularpde import (
    ProblemSpec, RadonMeasure, SolveParams, build_grid, compact_subset,
    solve_pure_singular, solve_sequence,
)

grid = build_grid("unit-disk", 64)
spec = ProblemSpec(grid, 1.0, RadonMeasure.dirac((0.0, 0.0), 1.0), gamma=0.5)
omega = compact_subset(grid, 0.25)

floor = solve_pure_singular(spec.with_n(1)).values[omega].min()
seq = solve_sequence(spec, SolveParams())

print(f"min over dist >= 1/4 of v_1: {floor:.6f}")
print(f"{'n':>6} {'min u_n':>10} {'max u_n':>10} {'L1 change':>11}")
changes = [None, *seq.l1_differences]
for entry, change in zip(seq, changes):
    vals = entry.u.values
    text = "" if change is None else f"{change:11.3e}"
    print(f"{entry.n:>6} {vals[omega].min():10.6f} {vals.max():10.4f} {text}")
print("stabilized" if seq.converged else "not yet stabilized")
