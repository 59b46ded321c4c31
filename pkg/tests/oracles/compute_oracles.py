"""Independent reference values frozen into the test suite.

Nothing here imports the package.  Run ``python tests/oracles/compute_oracles.py``
to reproduce the constants quoted in the tests.
"""

import math

import numpy as np
from scipy import integrate, optimize


def disk_lattice_area(res):
    """h^2 times the number of lattice points strictly inside the unit circle."""
    count = sum(1 for i in range(-res, res + 1) for j in range(-res, res + 1) if i * i + j * j < res * res)
    return count / res**2


def dense_singular_square(res, gamma, shift, f=1.0):
    """Dense five-point solve of -Lap u = f/(u+shift)^gamma on the unit square."""
    h = 1.0 / res
    m = res - 1
    L = np.zeros((m * m, m * m))
    for j in range(m):
        for i in range(m):
            k = j * m + i
            L[k, k] = 4 / h**2
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                ii, jj = i + di, j + dj
                if 0 <= ii < m and 0 <= jj < m:
                    L[k, jj * m + ii] = -1 / h**2

    def F(u):
        return L @ u - f / (np.abs(u) + shift) ** gamma

    # continuation in the shift keeps the root finder inside its basin
    u = np.full(m * m, 0.1)
    for s in sorted({shift, *np.geomspace(1e-1, shift, 6)}, reverse=True):
        shift_now = s
        sol = optimize.root(lambda v: L @ v - f / (np.abs(v) + shift_now) ** gamma, u, tol=1e-12)
        u = sol.x
    assert np.max(np.abs(F(u))) < 1e-8
    return u.reshape(m, m)


def truncated_integral(n):
    """int over the unit ball in R^3 of min(1/r, n)."""
    inner, _ = integrate.quad(lambda r: n * 4 * math.pi * r**2, 0, 1 / n)
    outer, _ = integrate.quad(lambda r: 4 * math.pi * r, 1 / n, 1)
    return inner + outer


def green_quasinorm_q3():
    """sup over dyadic t of t * |{G > t}|^(1/3) for G = (1/r - 1)/(4 pi)."""
    best = 0.0
    for j in range(20):
        t = 2.0**j
        rt = 1 / (4 * math.pi * t + 1)
        best = max(best, t * (4 * math.pi / 3 * rt**3) ** (1 / 3))
    return best


def distance_layer(eps, N=3):
    """(1/eps) int_{1-eps<r<1} (1-r) dx over the unit ball in R^N."""
    omega = 2 * math.pi ** (N / 2) / math.gamma(N / 2)
    val, _ = integrate.quad(lambda r: (1 - r) * omega * r ** (N - 1), 1 - eps, 1)
    return val / eps


if __name__ == "__main__":
    print("disk lattice area res=64:", repr(disk_lattice_area(64)))
    for gamma in (0.5, 2.0):
        u = dense_singular_square(16, gamma, 1e-6)
        print(f"dense square res=16 gamma={gamma} u(1/2,1/2):", repr(u[7, 7]), "max:", repr(u.max()))
    for n in (4, 8, 16):
        print(f"int min(1/r,{n}) over B_1 in R^3:", repr(truncated_integral(n)))
    print("Green weak-L^3 quasinorm over dyadic levels:", repr(green_quasinorm_q3()))
    print("Green value at r=1/2:", repr((1 / 0.5 - 1) / (4 * math.pi)))
    for eps in (0.2, 0.1, 0.05):
        print(f"distance layer eps={eps}:", repr(distance_layer(eps)))
