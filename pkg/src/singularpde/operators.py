"""Discrete elliptic operators in flux form.

The linear operator ``-div(A grad u)`` is assembled as a weighted graph
Laplacian: every lattice edge carries a nonnegative conductance, so the
interior matrix is a symmetric M-matrix and the discrete maximum principle
holds.  The Leray-Lions operator ``-div(a(x, grad u))`` is the gradient of
the convex energy ``sum_c |c| w_c F(|grad u|_c)`` over quadrature cells
(radial faces, or the two triangles of every planar lattice square).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import Grid

__all__ = [
    "MatrixField",
    "LerayLionsSpec",
    "DiscreteOperator",
    "GradientQuadrature",
    "LerayLionsOperator",
    "assemble_linear",
    "assemble_leray_lions",
    "apply_leray_lions",
    "gradient_quadrature",
    "fundamental_exponent",
]


@dataclass(frozen=True, eq=False)
class MatrixField:
    """Coefficient field ``A(x)``.

    ``values`` has shape ``(n_nodes, 2, 2)`` on planar grids and
    ``(n_nodes,)`` on radial grids (a scalar radial conductivity).
    ``alpha``/``beta`` are the declared ellipticity and boundedness
    constants; when omitted they are computed from the nodal eigenvalues.
    """

    grid: Grid
    values: np.ndarray
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        expected = (self.grid.n_nodes,) if self.grid.is_radial else (self.grid.n_nodes, 2, 2)
        if vals.shape != expected:
            raise ValueError(f"matrix field has shape {vals.shape}, expected {expected}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        lo, hi = self.eigen_bounds()
        if self.alpha is None:
            object.__setattr__(self, "alpha", lo)
        if self.beta is None:
            object.__setattr__(self, "beta", hi)

    @classmethod
    def identity(cls, grid: Grid) -> "MatrixField":
        return cls.constant(grid, 1.0 if grid.is_radial else np.eye(2))

    @classmethod
    def constant(cls, grid: Grid, A) -> "MatrixField":
        A = np.asarray(A, dtype=float)
        return cls(grid, np.broadcast_to(A, (grid.n_nodes,) + A.shape).copy())

    @classmethod
    def from_function(cls, grid: Grid, fn: Callable) -> "MatrixField":
        """Evaluate ``fn(coords)`` returning per-node matrices (or scalars)."""
        return cls(grid, np.asarray(fn(grid.coords), dtype=float))

    @property
    def is_symmetric(self) -> bool:
        if self.grid.is_radial:
            return True
        return bool(np.allclose(self.values, np.swapaxes(self.values, 1, 2), rtol=0, atol=1e-14))

    def eigen_bounds(self) -> tuple[float, float]:
        """Smallest eigenvalue of the symmetric part and largest operator norm."""
        if self.grid.is_radial:
            return float(self.values.min()), float(np.abs(self.values).max())
        sym = 0.5 * (self.values + np.swapaxes(self.values, 1, 2))
        lo = np.linalg.eigvalsh(sym)[:, 0].min()
        hi = np.linalg.norm(self.values, ord=2, axis=(1, 2)).max()
        return float(lo), float(hi)

    def check(self):
        """Raise ``ValueError`` unless ``alpha|xi|^2 <= A xi.xi`` and ``|A| <= beta``."""
        lo, hi = self.eigen_bounds()
        if not self.alpha > 0:
            raise ValueError(f"ellipticity constant must be positive, got {self.alpha}")
        if lo < self.alpha * (1 - 1e-12):
            raise ValueError(f"ellipticity violated: min eigenvalue {lo:.4g} < alpha={self.alpha:.4g}")
        if hi > self.beta * (1 + 1e-12):
            raise ValueError(f"bound violated: max norm {hi:.4g} > beta={self.beta:.4g}")
        if self.beta < self.alpha:
            raise ValueError("need alpha <= beta")


class DiscreteOperator:
    """Assembled ``-div(A grad .)`` on a grid.

    ``stiffness`` couples all nodes (Dirichlet nodes included) and is a
    weighted graph Laplacian; the discrete equation at interior node ``i``
    reads ``(S u)_i = m_i * rhs_i`` with ``m_i`` the cell measure.
    """

    def __init__(self, grid: Grid, stiffness: sp.csr_matrix):
        self.grid = grid
        self.stiffness = stiffness.tocsr()
        self.stiffness.sort_indices()
        self._int = grid.interior_index
        self._mass = grid.measure[self._int]

    @cached_property
    def matrix(self) -> sp.csc_matrix:
        """Interior block (homogeneous Dirichlet data eliminated)."""
        return self.stiffness[self._int][:, self._int].tocsc()

    @cached_property
    def _factor(self):
        return spla.splu(self.matrix)

    @property
    def mass(self) -> np.ndarray:
        return self._mass

    def apply(self, u) -> np.ndarray:
        """Nodal values of the operator applied to ``u`` (0 on Dirichlet nodes).

        ``u`` is a full nodal vector; Dirichlet values are used as given.
        """
        u = np.asarray(u, dtype=float)
        out = np.zeros(self.grid.n_nodes)
        out[self._int] = (self.stiffness @ u)[self._int] / self._mass
        return out

    def solve(self, rhs, out=None) -> np.ndarray:
        """Solve with zero Dirichlet data; ``rhs`` is a nodal source density."""
        rhs = np.asarray(rhs, dtype=float)
        x = self._factor.solve(self._mass * rhs[self._int])
        u = np.zeros(self.grid.n_nodes) if out is None else out
        u[self._int] = x
        return u

    def solve_shifted(self, rhs, shift) -> np.ndarray:
        """Solve ``(S + diag(m * shift)) u = m * rhs`` with a nonnegative shift."""
        shift = np.asarray(shift, dtype=float)[self._int]
        K = (self.matrix + sp.diags(self._mass * shift)).tocsc()
        u = np.zeros(self.grid.n_nodes)
        u[self._int] = spla.splu(K).solve(self._mass * np.asarray(rhs, dtype=float)[self._int])
        return u

    def energy(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ (self.stiffness @ u))

    def is_m_matrix(self) -> bool:
        K = self.matrix.tocoo()
        off = K.row != K.col
        if np.any(K.data[off] > 0):
            return False
        diag = self.matrix.diagonal()
        offsum = np.asarray(abs(self.matrix).sum(axis=1)).ravel() - np.abs(diag)
        return bool(np.all(diag > 0) and np.all(diag >= offsum * (1 - 1e-12)))


def _graph_laplacian(n, i, j, w) -> sp.csr_matrix:
    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    data = np.concatenate([-w, -w, w, w])
    return sp.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()


def _planar_edges(grid: Grid):
    ny, nx = grid.shape
    idx = np.arange(grid.n_nodes).reshape(ny, nx)
    return {
        "x": (idx[:, :-1].ravel(), idx[:, 1:].ravel()),
        "y": (idx[:-1, :].ravel(), idx[1:, :].ravel()),
        "ne": (idx[:-1, :-1].ravel(), idx[1:, 1:].ravel()),
        "nw": (idx[:-1, 1:].ravel(), idx[1:, :-1].ravel()),
    }


def assemble_linear(grid: Grid, A: MatrixField | None = None) -> DiscreteOperator:
    """Assemble the conservative discretization of ``-div(A grad u)``.

    Planar grids use face-averaged coefficients on a 5-point stencil, widened
    to the diagonal neighbours when ``A`` has off-diagonal entries.  Each
    off-diagonal entry is carried by the diagonal edge matching its sign, so
    the scheme stays monotone as long as ``|a12| <= min(a11, a22)`` on every
    edge; otherwise a ``ValueError`` is raised.  Radial grids use the flux
    ``|S^{N-1}| r^{N-1} a u'`` at the cell faces.
    """
    if A is None:
        A = MatrixField.identity(grid)
    if not A.grid.same_as(grid):
        raise ValueError("matrix field lives on a different grid")
    A.check()
    if grid.is_radial:
        i = np.arange(grid.n_nodes - 1)
        r_face = (i + 0.5) * grid.h
        a_face = 0.5 * (A.values[i] + A.values[i + 1])
        w = grid.omega * r_face ** (grid.dim - 1) * a_face / grid.h
        return DiscreteOperator(grid, _graph_laplacian(grid.n_nodes, i, i + 1, w))

    if not A.is_symmetric:
        raise ValueError("only symmetric coefficient matrices are supported")
    a11, a22, a12 = A.values[:, 0, 0], A.values[:, 1, 1], A.values[:, 0, 1]
    edges = _planar_edges(grid)
    I, J, W = [], [], []

    def mid(a, e):
        i, j = edges[e]
        return 0.5 * (a[i] + a[j])

    for e, diag in (("x", a11), ("y", a22)):
        w = mid(diag, e) - np.abs(mid(a12, e))
        if np.any(w < -1e-14):
            raise ValueError(
                "off-diagonal coefficient too large for a monotone stencil "
                f"(min {e}-edge conductance {w.min():.3g})"
            )
        I.append(edges[e][0]); J.append(edges[e][1]); W.append(np.clip(w, 0, None))
    if np.any(a12 != 0):
        I.append(edges["ne"][0]); J.append(edges["ne"][1]); W.append(np.clip(mid(a12, "ne"), 0, None))
        I.append(edges["nw"][0]); J.append(edges["nw"][1]); W.append(np.clip(-mid(a12, "nw"), 0, None))
    S = _graph_laplacian(grid.n_nodes, np.concatenate(I), np.concatenate(J), np.concatenate(W))
    return DiscreteOperator(grid, S)


# ---------------------------------------------------------------------------
# gradient quadrature shared by the Leray-Lions operator and the analysis


@dataclass(frozen=True, eq=False)
class GradientQuadrature:
    """Piecewise-constant gradients on quadrature cells.

    ``D`` maps nodal values to cell gradients, stacked component-wise
    (``dim_grad`` blocks of ``n_cells`` rows); ``weights`` are the cell
    measures; ``cells`` lists the nodes of every cell; ``centres`` are the
    cell centroids.
    """

    grid: Grid
    D: sp.csr_matrix
    weights: np.ndarray
    cells: np.ndarray
    centres: np.ndarray
    dim_grad: int

    @property
    def n_cells(self) -> int:
        return self.weights.size

    def gradients(self, u) -> np.ndarray:
        """Cell gradients, shape ``(n_cells, dim_grad)``."""
        g = self.D @ np.asarray(u, dtype=float)
        return g.reshape(self.dim_grad, self.n_cells).T

    def cell_mask(self, nodes) -> np.ndarray:
        """Cells whose nodes all belong to the boolean node mask."""
        return np.all(np.asarray(nodes)[self.cells], axis=1)


_QUAD_CACHE: dict = {}


def gradient_quadrature(grid: Grid) -> GradientQuadrature:
    key = (grid.domain, grid.resolution)
    q = _QUAD_CACHE.get(key)
    if q is None or not q.grid.same_as(grid):
        q = _radial_quadrature(grid) if grid.is_radial else _planar_quadrature(grid)
        _QUAD_CACHE[key] = q
    return q


def _radial_quadrature(grid):
    h = grid.h
    i = np.arange(grid.n_nodes - 1)
    r_face = (i + 0.5) * h
    rows = np.concatenate([i, i])
    cols = np.concatenate([i, i + 1])
    data = np.concatenate([-np.ones_like(r_face), np.ones_like(r_face)]) / h
    D = sp.csr_matrix((data, (rows, cols)), shape=(i.size, grid.n_nodes))
    weights = grid.omega * r_face ** (grid.dim - 1) * h
    return GradientQuadrature(grid, D, weights, np.column_stack([i, i + 1]), r_face, 1)


def _planar_quadrature(grid):
    h = grid.h
    ny, nx = grid.shape
    idx = np.arange(grid.n_nodes).reshape(ny, nx)
    a = idx[:-1, :-1].ravel()  # (x, y)
    b = idx[:-1, 1:].ravel()   # (x + h, y)
    c = idx[1:, :-1].ravel()   # (x, y + h)
    d = idx[1:, 1:].ravel()    # (x + h, y + h)
    # lower triangle (a, b, c): grad = ((u_b - u_a)/h, (u_c - u_a)/h)
    # upper triangle (d, c, b): grad = ((u_d - u_c)/h, (u_d - u_b)/h)
    cells = np.concatenate([np.column_stack([a, b, c]), np.column_stack([d, c, b])])
    nt = cells.shape[0]
    t = np.arange(nt)
    gx_plus = np.concatenate([b, d]); gx_minus = np.concatenate([a, c])
    gy_plus = np.concatenate([c, d]); gy_minus = np.concatenate([a, b])
    rows = np.concatenate([t, t, nt + t, nt + t])
    cols = np.concatenate([gx_plus, gx_minus, gy_plus, gy_minus])
    data = np.concatenate([np.ones(nt), -np.ones(nt), np.ones(nt), -np.ones(nt)]) / h
    D = sp.csr_matrix((data, (rows, cols)), shape=(2 * nt, grid.n_nodes))
    weights = np.full(nt, 0.5 * h * h)
    centres = grid.coords[cells].mean(axis=1)
    return GradientQuadrature(grid, D, weights, cells, centres, 2)


# ---------------------------------------------------------------------------
# Leray-Lions operators


@dataclass(frozen=True)
class LerayLionsSpec:
    """Flux ``a(x, xi) = w(x) (|xi|^2 + eps^2)^((p-2)/2) xi``.

    ``weight`` is a positive constant or a callable of the coordinates (cell
    centroids / face radii).  ``c`` is the function in the growth bound
    ``|a(x, xi)| <= beta (c(x) + |xi|^(p-1))``; the model fluxes use ``c = 0``.
    The regularization ``eps`` only acts for ``p != 2``.
    """

    p: float
    weight: float | Callable = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    c: float = 0.0
    eps: float = 1e-8

    def admissible_range(self, N: int) -> tuple[float, float]:
        return 2.0 - 1.0 / N, float(N)

    def check_exponent(self, N: int):
        lo, hi = self.admissible_range(N)
        if not lo < self.p < hi:
            raise ValueError(f"p={self.p} outside the admissible range ({lo:.4g}, {hi:.4g}) for N={N}")

    def weights_at(self, points) -> np.ndarray:
        if callable(self.weight):
            w = np.asarray(self.weight(points), dtype=float)
        else:
            w = np.full(len(points), float(self.weight))
        if np.any(w <= 0):
            raise ValueError("flux weight must be positive")
        return w

    def kappa(self, g2):
        """Scalar factor ``(|xi|^2 + eps^2)^((p-2)/2)`` as a function of ``|xi|^2``."""
        if self.p == 2:
            return np.ones_like(g2)
        return (g2 + self.eps**2) ** (0.5 * (self.p - 2))

    def flux(self, xi, w=1.0) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        g2 = np.sum(xi * xi, axis=-1, keepdims=True)
        return np.expand_dims(np.asarray(w, dtype=float), -1) * self.kappa(g2) * xi

    def check_structure(self, dim: int = 2, samples: int = 200, seed: int = 0) -> dict:
        """Spot-check monotonicity, coercivity and growth on random vectors.

        Returns the worst margins; all are nonnegative for an admissible flux.
        """
        rng = np.random.default_rng(seed)
        scale = 10.0 ** rng.uniform(-3, 3, size=(samples, 1))
        xi = rng.standard_normal((samples, dim)) * scale
        eta = rng.standard_normal((samples, dim)) * scale
        a_xi, a_eta = self.flux(xi), self.flux(eta)
        mono = np.sum((a_xi - a_eta) * (xi - eta), axis=1)
        n = np.linalg.norm(xi, axis=1)
        coer = np.sum(a_xi * xi, axis=1) - self.alpha * n**self.p * (1 - 1e-6)
        growth = self.beta * (self.c + n ** (self.p - 1)) * (1 + 1e-6) - np.linalg.norm(a_xi, axis=1)
        return {
            "monotonicity": float(mono.min()),
            "coercivity": float((coer / n**self.p).min()),
            "growth": float((growth / n ** (self.p - 1)).min()),
        }


class LerayLionsOperator:
    """Discrete ``-div(a(x, grad u))`` as the gradient of a convex energy."""

    def __init__(self, grid: Grid, spec: LerayLionsSpec):
        spec.check_exponent(grid.dim)
        self.grid = grid
        self.spec = spec
        self.quad = gradient_quadrature(grid)
        self.cell_weight = self.quad.weights * spec.weights_at(self.quad.centres)
        self._int = grid.interior_index
        self._mass = grid.measure[self._int]

    @property
    def mass(self):
        return self._mass

    def _cell_state(self, u):
        g = self.quad.gradients(u)
        g2 = np.sum(g * g, axis=1)
        return g, g2

    def energy(self, u) -> float:
        _, g2 = self._cell_state(u)
        p, eps = self.spec.p, self.spec.eps
        dens = 0.5 * g2 if p == 2 else ((g2 + eps**2) ** (0.5 * p) - eps**p) / p
        return float(np.sum(self.cell_weight * dens))

    def gradient(self, u) -> np.ndarray:
        """Energy gradient ``D^T (w a(grad u))`` on all nodes (no mass scaling)."""
        g, g2 = self._cell_state(u)
        flux = (self.cell_weight * self.spec.kappa(g2))[:, None] * g
        return self.quad.D.T @ flux.T.ravel()

    def apply(self, u) -> np.ndarray:
        """Nodal residual ``-div a(x, grad u)``, zero on Dirichlet nodes."""
        out = np.zeros(self.grid.n_nodes)
        out[self._int] = self.gradient(u)[self._int] / self._mass
        return out

    def jacobian(self, u) -> sp.csc_matrix:
        """Interior block of the energy Hessian."""
        g, g2 = self._cell_state(u)
        p, eps = self.spec.p, self.spec.eps
        cw = self.cell_weight
        kap = self.spec.kappa(g2)
        if p == 2:
            dk = np.zeros_like(g2)
        else:
            dk = (p - 2) * (g2 + eps**2) ** (0.5 * (p - 4))
        D = self.quad.D
        nc = self.quad.n_cells
        if self.quad.dim_grad == 1:
            B = sp.diags(cw * (kap + dk * g2))
            H = D.T @ B @ D
        else:
            Dx, Dy = D[:nc], D[nc:]
            bxx = cw * (kap + dk * g[:, 0] ** 2)
            byy = cw * (kap + dk * g[:, 1] ** 2)
            bxy = cw * dk * g[:, 0] * g[:, 1]
            H = (Dx.T @ sp.diags(bxx) @ Dx + Dy.T @ sp.diags(byy) @ Dy
                 + Dx.T @ sp.diags(bxy) @ Dy + Dy.T @ sp.diags(bxy) @ Dx)
        H = H.tocsr()
        return H[self._int][:, self._int].tocsc()


def assemble_leray_lions(grid: Grid, spec: LerayLionsSpec) -> LerayLionsOperator:
    return LerayLionsOperator(grid, spec)


def apply_leray_lions(grid: Grid, spec: LerayLionsSpec, u) -> np.ndarray:
    """Nodal residual of ``-div(a(x, grad u))`` for a full nodal vector ``u``."""
    return LerayLionsOperator(grid, spec).apply(np.asarray(u, dtype=float))


def fundamental_exponent(p: float, N: int) -> float:
    """Radial decay exponent ``(p - N) / (p - 1)`` of the p-Laplace fundamental solution."""
    return (p - N) / (p - 1)

