"""Data fields, Radon measures with atoms, and their regularization.

The approximating problems replace the measure by smooth nonnegative
densities ``mu_n`` of the same mass and the datum ``f`` by ``min(f, n)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid

__all__ = [
    "ScalarField",
    "Density",
    "RadonMeasure",
    "parse_expression",
    "parse_atom",
    "read_measure_file",
    "mollify",
    "mollifier_radius",
    "truncate_datum",
    "apply_truncations",
    "dyadic_levels",
    "marcinkiewicz_quasinorm",
    "lebesgue_norm",
]

ROLES = ("datum", "solution", "density")


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Nodal values of a function on a grid.

    ``meta`` carries provenance such as the regularization index ``n`` and is
    used to refuse comparisons between incompatible solves.
    """

    grid: Grid
    values: np.ndarray
    role: str = "datum"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        vals = np.array(self.values, dtype=float, copy=True)
        if vals.shape != (self.grid.n_nodes,):
            raise ValueError(
                f"field has shape {vals.shape}, grid expects ({self.grid.n_nodes},)"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("field values must be finite")
        if self.role == "solution":
            vals[~self.grid.interior] = 0.0
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)

    def integral(self, nodes=None) -> float:
        return self.grid.integrate(self.values, nodes)

    def with_values(self, values, **meta) -> "ScalarField":
        return ScalarField(self.grid, values, self.role, {**self.meta, **meta})


# ---------------------------------------------------------------------------
# density catalogue


@dataclass(frozen=True)
class Density:
    """Closed-form density from a small catalogue.

    ``kind`` is one of ``constant`` (value ``c``), ``power`` (``c * |x-x0|**s``)
    or ``indicator`` (``c`` on the ball ``|x-x0| < radius``).  The centre
    ``x0`` is the origin for disks and balls and ``(1/2, 1/2)`` for the square.
    """

    kind: str
    c: float = 1.0
    s: float = 0.0
    radius: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "power", "indicator"):
            raise ValueError(f"unknown density kind {self.kind!r}")
        if self.c < 0:
            raise ValueError("densities must be nonnegative")

    def evaluate(self, grid: Grid) -> np.ndarray:
        if self.kind == "constant":
            vals = np.full(grid.n_nodes, float(self.c))
        else:
            rho = _centred_radius(grid)
            if self.kind == "indicator":
                vals = np.where(rho < self.radius, float(self.c), 0.0)
            else:
                vals = self._power(grid, rho)
        return np.where(grid.interior, vals, 0.0)

    def _power(self, grid, rho):
        s = self.s
        if s <= -grid.dim:
            raise ValueError(f"r**{s} is not locally integrable in dimension {grid.dim}")
        out = np.empty_like(rho)
        pos = rho > 0
        out[pos] = self.c * rho[pos] ** s
        if (~pos).any():
            # node sitting on the singularity: use the mean over its cell
            if grid.is_radial:
                a = 0.5 * grid.h
                mean = grid.dim / (s + grid.dim) * a**s
            else:
                a = grid.h / math.sqrt(math.pi)
                mean = 2.0 / (s + 2.0) * a**s
            out[~pos] = self.c * mean
        return out

    def summability(self, N: int) -> float:
        """Supremum of the exponents q with the density in L^q (radial powers)."""
        if self.kind != "power" or self.s >= 0:
            return math.inf
        return N / -self.s

    def describe(self) -> str:
        if self.kind == "constant":
            return f"constant({self.c:g})"
        if self.kind == "power":
            return f"power({self.s:g},{self.c:g})"
        return f"indicator({self.radius:g},{self.c:g})"


def _centred_radius(grid: Grid) -> np.ndarray:
    if grid.domain == "unit-square":
        return np.hypot(grid.coords[:, 0] - 0.5, grid.coords[:, 1] - 0.5)
    return grid.r


_EXPR = re.compile(r"^\s*(constant|power|indicator)\s*\(([^)]*)\)\s*$")


def parse_expression(text: str) -> Density:
    """Parse ``constant(c)``, ``power(s[, c])`` or ``indicator(radius[, c])``."""
    m = _EXPR.match(text)
    if not m:
        raise ValueError(f"cannot parse density expression {text!r}")
    kind = m.group(1)
    args = [float(a) for a in m.group(2).split(",") if a.strip()]
    if kind == "constant" and len(args) == 1:
        return Density("constant", c=args[0])
    if kind == "power" and len(args) in (1, 2):
        return Density("power", s=args[0], c=args[1] if len(args) == 2 else 1.0)
    if kind == "indicator" and len(args) in (1, 2):
        return Density("indicator", radius=args[0], c=args[1] if len(args) == 2 else 1.0)
    raise ValueError(f"wrong number of arguments in {text!r}")


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class RadonMeasure:
    """Nonnegative bounded measure: atoms plus an absolutely continuous part.

    ``atoms`` is a tuple of ``(location, mass)`` pairs; locations are
    coordinate tuples (a single radius for radial grids, where only the
    origin is allowed).  ``summability`` is the declared Lebesgue exponent of
    the density part.
    """

    atoms: tuple = ()
    density: Density | ScalarField | None = None
    summability: float = math.inf

    def __post_init__(self):
        atoms = []
        for loc, mass in self.atoms:
            loc = tuple(float(x) for x in np.atleast_1d(loc))
            if not mass > 0 or not math.isfinite(mass):
                raise ValueError("atom masses must be positive and finite")
            atoms.append((loc, float(mass)))
        object.__setattr__(self, "atoms", tuple(atoms))
        if self.summability < 1:
            raise ValueError("summability index must be >= 1")

    @classmethod
    def dirac(cls, location=(0.0, 0.0), mass=1.0) -> "RadonMeasure":
        return cls(atoms=((location, mass),))

    @classmethod
    def zero(cls) -> "RadonMeasure":
        return cls()

    @property
    def atom_mass(self) -> float:
        return sum(m for _, m in self.atoms)

    def is_zero(self) -> bool:
        return not self.atoms and self.density is None

    def density_values(self, grid: Grid) -> np.ndarray:
        if self.density is None:
            return grid.zeros()
        if isinstance(self.density, ScalarField):
            if not self.density.grid.same_as(grid):
                raise ValueError("density field lives on a different grid")
            vals = np.where(grid.interior, self.density.values, 0.0)
        else:
            vals = self.density.evaluate(grid)
        if np.any(vals < 0):
            raise ValueError("density must be nonnegative")
        return vals

    def total_mass(self, grid: Grid) -> float:
        """Atom masses plus the discrete integral of the density on ``grid``."""
        return self.atom_mass + grid.integrate(self.density_values(grid))

    def scaled(self, factor: float) -> "RadonMeasure":
        dens = self.density
        if isinstance(dens, Density):
            dens = Density(dens.kind, dens.c * factor, dens.s, dens.radius)
        elif isinstance(dens, ScalarField):
            dens = dens.with_values(dens.values * factor)
        return RadonMeasure(
            tuple((loc, m * factor) for loc, m in self.atoms), dens, self.summability
        )


def parse_atom(text: str) -> tuple:
    """``"x,y,mass"``, ``"r,mass"`` or ``"mass"`` to ``(location, mass)``."""
    nums = [float(t) for t in text.split(",")]
    if len(nums) == 1:
        return (0.0,), nums[0]
    return tuple(nums[:-1]), nums[-1]


def read_measure_file(path) -> RadonMeasure:
    """Read a measure file of ``key = value`` lines.

    Recognised keys: ``atom = x,y,mass`` (repeatable; ``r,mass`` or ``mass``
    alone for the origin of a radial problem), ``density = <expression>`` and
    ``r = <summability>`` (``inf`` allowed).  ``#`` starts a comment.
    """
    atoms, density, summ = [], None, math.inf
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (t.strip() for t in line.split("=", 1))
            if key == "atom":
                atoms.append(parse_atom(value))
            elif key == "density":
                if density is not None:
                    raise ValueError(f"{path}:{lineno}: density given twice")
                density = parse_expression(value)
            elif key == "r":
                summ = float(value)
            else:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
    return RadonMeasure(tuple(atoms), density, summ)


def mollifier_radius(grid: Grid, n: float) -> float:
    """Spread scale of an atom at regularization index ``n``."""
    return max(1.0 / n, 2.0 * grid.h)


def mollify(mu: RadonMeasure, n: float, grid: Grid, kernel: str = "tent") -> ScalarField:
    """Smooth nonnegative density ``mu_n`` with the same mass as ``mu``.

    Atoms are replaced by a mass-normalized kernel; the density part is
    passed through unchanged.  ``kernel="tent"`` uses the piecewise-linear
    bump ``(1 - |x - a| / rho)^+`` with ``rho = max(1/n, 2h)``;
    ``kernel="cell"`` puts the whole mass into the cell of the nearest node
    (on radial grids this is the flux condition at the origin).  ``n`` may be
    ``math.inf``.
    """
    if not n >= 1:
        raise ValueError("regularization index n must be >= 1")
    if kernel not in ("tent", "cell"):
        raise ValueError(f"unknown kernel {kernel!r}")
    vals = mu.density_values(grid).copy()
    rho = mollifier_radius(grid, n)
    for loc, mass in mu.atoms:
        vals += _atom_density(grid, loc, mass, rho, kernel)
    return ScalarField(grid, vals, "density", {"n": n, "kernel": kernel})


def _atom_density(grid: Grid, loc, mass, rho, kernel):
    if grid.is_radial:
        if any(abs(x) > 1e-14 for x in loc):
            raise ValueError("radial grids only support atoms at the origin")
        dist = grid.r
        clearance = 1.0
    else:
        if len(loc) != 2:
            raise ValueError(f"planar atoms need two coordinates, got {loc}")
        dist = np.hypot(grid.coords[:, 0] - loc[0], grid.coords[:, 1] - loc[1])
        clearance = _clearance(grid, loc)
    spread = rho if kernel == "tent" else grid.h
    if clearance <= spread:
        raise ValueError(
            f"atom at {loc} is within {clearance:.3g} of the boundary; "
            f"spread scale {spread:.3g} would leak mass"
        )
    if kernel == "tent":
        w = np.clip(1.0 - dist / rho, 0.0, None)
    else:
        w = np.zeros(grid.n_nodes)
        w[np.argmin(np.where(grid.interior, dist, np.inf))] = 1.0
    w = np.where(grid.interior, w, 0.0)
    total = np.sum(w * grid.measure)
    if total <= 0:
        raise ValueError(f"atom at {loc} does not touch any interior node")
    return mass * w / total


def _clearance(grid: Grid, loc) -> float:
    x, y = loc
    if grid.domain == "unit-square":
        return min(x, 1 - x, y, 1 - y)
    return 1.0 - math.hypot(x, y)


def truncate_datum(f: ScalarField, n: float) -> ScalarField:
    """``T_n(f) = min(f, n)`` for a nonnegative datum."""
    if np.any(f.values < 0):
        raise ValueError("datum must be nonnegative")
    return f.with_values(np.minimum(f.values, n), n=n)


def apply_truncations(s, k):
    """Return ``(T_k(s), G_k(s), S_k(s))``.

    ``T_k`` clips to ``[-k, k]``, ``G_k = s - T_k(s)`` and ``S_k`` is the unit
    ramp from level ``k`` to ``k + 1``; ``S_k`` is only defined for ``s >= 0``
    and is NaN elsewhere.  Works on scalars and arrays.
    """
    if not k > 0:
        raise ValueError("truncation level k must be positive")
    s_arr = np.asarray(s, dtype=float)
    T = np.clip(s_arr, -k, k)
    G = np.sign(s_arr) * np.clip(np.abs(s_arr) - k, 0.0, None)
    with np.errstate(invalid="ignore"):
        S = np.where(s_arr >= 0, np.clip(s_arr - k, 0.0, 1.0), np.nan)
    if s_arr.ndim == 0:
        return float(T), float(G), float(S)
    return T, G, S


def dyadic_levels(t0: float = 1.0, count: int = 20) -> np.ndarray:
    return t0 * 2.0 ** np.arange(count)


def marcinkiewicz_quasinorm(field: ScalarField | np.ndarray, q: float, levels=None, grid=None,
                            nodes=None) -> float:
    """Discrete weak-L^q quasinorm ``sup_t t * m({|u| > t})**(1/q)``.

    The supremum runs over ``levels`` (dyadic from 1 by default); the measure
    of a super-level set is the sum of the cell measures of its nodes.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    levels = dyadic_levels() if levels is None else np.asarray(list(levels), dtype=float)
    if levels.size == 0:
        raise ValueError("empty level grid")
    if np.any(levels <= 0):
        raise ValueError("levels must be positive")
    grid, vals = _unpack(field, grid)
    mask = grid.interior if nodes is None else nodes
    a = np.abs(vals[mask])
    w = grid.measure[mask]
    m = np.array([w[a > t].sum() for t in levels])
    return float(np.max(levels * m ** (1.0 / q)))


def lebesgue_norm(field, q: float, grid=None, nodes=None) -> float:
    """Discrete ``(sum |u|^q m_i)^(1/q)``; ``q = inf`` gives the max norm."""
    grid, vals = _unpack(field, grid)
    mask = grid.interior if nodes is None else nodes
    a = np.abs(vals[mask])
    if math.isinf(q):
        return float(a.max(initial=0.0))
    return float(np.sum(a**q * grid.measure[mask]) ** (1.0 / q))


def _unpack(field, grid):
    if isinstance(field, ScalarField):
        return field.grid, field.values
    if grid is None:
        raise ValueError("a grid is required for raw arrays")
    return grid, np.asarray(field, dtype=float)
