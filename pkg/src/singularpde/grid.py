"""Structured grids for the unit square, the unit disk and radial balls.

Planar grids are uniform Cartesian lattices; the disk is obtained by masking
lattice nodes with ``|x| >= 1``, which then act as zero Dirichlet nodes.
Radial grids discretize ``r in [0, 1]`` for radially symmetric problems in
dimension ``N >= 2`` with finite-volume control volumes around each node.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "build_grid",
    "compact_subset",
    "boundary_band",
    "sphere_area",
]

MIN_RESOLUTION = 4


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N."""
    return 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)


@dataclass(frozen=True, eq=False)
class Grid:
    """Immutable discretized domain.

    Attributes
    ----------
    kind : {"planar", "radial"}
    domain : str
        Descriptor the grid was built from (``unit-square``, ``unit-disk``,
        ``unit-ball-radial(N)``).
    h : float
        Uniform spacing.
    dim : int
        Space dimension N.
    shape : tuple
        Lattice shape; ``(ny, nx)`` for planar grids, ``(R + 1,)`` radially.
    coords : ndarray, shape (n_nodes, 2) or (n_nodes,)
        Node coordinates, flattened in C order; radial grids store ``r``.
    interior : ndarray of bool
        True for unknowns, False for Dirichlet nodes.
    measure : ndarray
        Cell measure of every node.
    dist : ndarray
        Euclidean distance to the analytic boundary, 0 on Dirichlet nodes.
    """

    kind: str
    domain: str
    resolution: int
    h: float
    dim: int
    shape: tuple
    coords: np.ndarray
    interior: np.ndarray
    measure: np.ndarray
    dist: np.ndarray

    def __post_init__(self):
        for arr in (self.coords, self.interior, self.measure, self.dist):
            arr.setflags(write=False)

    @property
    def n_nodes(self) -> int:
        return self.interior.size

    @property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(self.interior)

    @property
    def is_radial(self) -> bool:
        return self.kind == "radial"

    @property
    def r(self) -> np.ndarray:
        """Distance of every node from the origin."""
        if self.is_radial:
            return self.coords
        return np.hypot(self.coords[:, 0], self.coords[:, 1])

    @property
    def omega(self) -> float:
        """Area of the unit sphere in R^dim (the radial flux factor)."""
        return sphere_area(self.dim)

    @property
    def area(self) -> float:
        """Exact measure of the continuous domain."""
        if self.domain == "unit-square":
            return 1.0
        if self.domain == "unit-disk":
            return math.pi
        return self.omega / self.dim

    def integrate(self, values, nodes=None) -> float:
        """Quadrature of nodal values over interior nodes (or a node subset)."""
        values = np.broadcast_to(np.asarray(values, dtype=float), (self.n_nodes,))
        mask = self.interior if nodes is None else _as_mask(self, nodes)
        return float(np.sum(values[mask] * self.measure[mask]))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.n_nodes)

    def same_as(self, other: "Grid") -> bool:
        return (
            self is other
            or (
                self.domain == other.domain
                and self.resolution == other.resolution
                and self.kind == other.kind
            )
        )

    def __repr__(self):
        return f"Grid({self.domain!r}, resolution={self.resolution}, nodes={self.n_nodes})"


_RADIAL = re.compile(r"unit-ball-radial\((\d+)\)")


def build_grid(domain: str, resolution: int) -> Grid:
    """Build a grid with spacing ``1 / resolution``.

    Parameters
    ----------
    domain : str
        ``"unit-square"``, ``"unit-disk"`` or ``"unit-ball-radial(N)"``.
    resolution : int
        Number of cells per unit length, at least 4.

    Examples
    --------
    >>> g = build_grid("unit-square", 4)
    >>> g.shape, int(g.interior.sum())
    ((5, 5), 9)
    """
    if int(resolution) != resolution or resolution < MIN_RESOLUTION:
        raise ValueError(f"resolution must be an integer >= {MIN_RESOLUTION}, got {resolution}")
    resolution = int(resolution)
    h = 1.0 / resolution
    if domain == "unit-square":
        return _planar(domain, resolution, np.arange(resolution + 1) * h)
    if domain == "unit-disk":
        return _planar(domain, resolution, (np.arange(2 * resolution + 1) - resolution) * h)
    m = _RADIAL.fullmatch(domain.replace(" ", ""))
    if m:
        N = int(m.group(1))
        if N < 2:
            raise ValueError("radial grids need dimension N >= 2")
        return _radial(f"unit-ball-radial({N})", resolution, N)
    raise ValueError(f"unsupported domain descriptor {domain!r}")


def _planar(domain, resolution, ticks):
    h = 1.0 / resolution
    X, Y = np.meshgrid(ticks, ticks)  # rows index y
    coords = np.column_stack([X.ravel(), Y.ravel()])
    if domain == "unit-square":
        dist = np.minimum.reduce([X, 1 - X, Y, 1 - Y]).ravel()
        dist = np.clip(dist, 0.0, None)
        interior = dist > 0.5 * h
        # trapezoidal weights so that the full lattice integrates 1 exactly
        w = np.full(ticks.size, h)
        w[[0, -1]] = 0.5 * h
        measure = np.outer(w, w).ravel()
        measure = np.where(interior, h * h, measure)
    else:
        rad = np.hypot(X, Y).ravel()
        interior = rad < 1.0
        dist = np.where(interior, 1.0 - rad, 0.0)
        measure = np.where(interior, h * h, 0.0)
    dist = np.where(interior, dist, 0.0)
    return Grid(
        kind="planar",
        domain=domain,
        resolution=resolution,
        h=h,
        dim=2,
        shape=X.shape,
        coords=coords,
        interior=interior,
        measure=measure,
        dist=dist,
    )


def _radial(domain, resolution, N):
    h = 1.0 / resolution
    r = np.arange(resolution + 1) / resolution
    omega = sphere_area(N)
    outer = np.minimum(r + 0.5 * h, 1.0)
    inner = np.maximum(r - 0.5 * h, 0.0)
    measure = omega / N * (outer**N - inner**N)
    interior = np.ones(r.size, dtype=bool)
    interior[-1] = False
    dist = np.where(interior, 1.0 - r, 0.0)
    return Grid(
        kind="radial",
        domain=domain,
        resolution=resolution,
        h=h,
        dim=N,
        shape=r.shape,
        coords=r,
        interior=interior,
        measure=measure,
        dist=dist,
    )


def _diameter(grid: Grid) -> float:
    return math.sqrt(2.0) if grid.domain == "unit-square" else 2.0


def _as_mask(grid: Grid, nodes) -> np.ndarray:
    nodes = np.asarray(nodes)
    if nodes.dtype == bool:
        return nodes
    mask = np.zeros(grid.n_nodes, dtype=bool)
    mask[nodes] = True
    return mask


def compact_subset(grid: Grid, delta: float) -> np.ndarray:
    """Interior nodes at distance ``>= delta`` from the boundary (boolean mask).

    Raises ``ValueError`` when ``delta`` is outside ``(0, diam/2)`` or when no
    node qualifies.
    """
    if not 0.0 < delta < 0.5 * _diameter(grid):
        raise ValueError(f"delta={delta} must lie in (0, {0.5 * _diameter(grid):.4g})")
    # tolerance absorbs rounding in i/resolution coordinates
    mask = grid.interior & (grid.dist >= delta - 1e-12)
    if not mask.any():
        raise ValueError(f"compact subset with delta={delta} is empty on {grid!r}")
    return mask


def boundary_band(grid: Grid, delta: float) -> np.ndarray:
    """Interior nodes with ``dist < delta`` (the collar next to the boundary)."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    return grid.interior & (grid.dist < delta - 1e-12)
