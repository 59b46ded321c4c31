"""Lebesgue integrability of u for power-law data on the unit ball in R^3.

For f = r^-a and mu = r^-b dx (or a point mass) the predicted exponent q
is probed from both sides: the L^(0.9 q) norm should settle under
refinement and int u^(1.1 q) should keep growing.
"""

from singularpde import regularity_classify

cases = [
    dict(gamma=1.0, f_power=1.5, mu_power=1.5),
    dict(gamma=1.0, f_power=2.6, mu_power=1.5),
    dict(gamma=1.0, f_power=1.5, mu_power=2.5),
    dict(gamma=0.5, f_power=2.5, mu_power=2.5),
]

for case in cases:
    v = regularity_classify(**case)
    print(f"item {v.item:>3}  m={v.m:.3f}  r={v.r:.3f}  gamma={v.gamma:g}  predicted q={v.predicted:g}")
    print("   below:", "  ".join(f"{x:.4g}" for x in v.below))
    if v.above:
        print("   above:", "  ".join(f"{x:.4g}" for x in v.above))
    print("   ->", "consistent" if v.passed else "inconsistent")
