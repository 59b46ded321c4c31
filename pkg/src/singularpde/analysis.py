"""Numerical checks of the a-priori estimates satisfied by the solutions.

Every check returns an :class:`EstimateReport`; its verdict is recomputed
from the stored numbers on demand, so a report read back from CSV gives the
same verdict as the one written.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Grid, build_grid, compact_subset
from .measure import (
    Density,
    RadonMeasure,
    ScalarField,
    apply_truncations,
    lebesgue_norm,
    mollifier_radius,
    mollify,
    truncate_datum,
)
from .operators import LerayLionsOperator, assemble_linear, gradient_quadrature
from .solver import ProblemSpec, SolveParams, solve_approximating

__all__ = [
    "EstimateReport",
    "RegularityVerdict",
    "fit_loglog_slope",
    "stable",
    "relative_range",
    "min_growth",
    "grows",
    "dirichlet_energy",
    "truncation_energy",
    "truncation_energy_scan",
    "sobolev_seminorm",
    "gradient_quasinorm",
    "boundary_layer",
    "predicted_exponent",
    "regularity_classify",
    "near_origin_slope",
    "hopf_lax_transform",
    "hopf_lax_check",
    "truncation_residual_mass",
    "truncation_residual_scan",
    "comparison_report",
    "atom_collar",
    "reports_to_csv",
    "plot_report",
]

PASS, FAIL, DEGENERATE = "PASS", "FAIL", "DEGENERATE"

STABLE_RANGE = 0.20
GROWTH_FACTOR = 1.15


# ---------------------------------------------------------------------------
# report type and decision rules


@dataclass(frozen=True)
class EstimateReport:
    """One verified estimate.

    ``rule`` fixes how ``statistic`` is compared with ``bound``:
    ``"<="``, ``">="``, ``"stable"`` (statistic is the relative range) or
    ``"grows"`` (statistic is the smallest per-step growth factor).
    """

    estimate_id: str
    parameter: str
    points: tuple
    values: tuple
    statistic: float
    bound: float
    rule: str
    note: str = ""
    degenerate: bool = False
    extra: dict = field(default_factory=dict, compare=False)

    @property
    def verdict(self) -> str:
        if self.degenerate or not np.isfinite(self.statistic):
            return DEGENERATE
        ok = {
            "<=": self.statistic <= self.bound,
            ">=": self.statistic >= self.bound,
            "stable": self.statistic <= self.bound,
            "grows": self.statistic >= self.bound,
        }[self.rule]
        return PASS if ok else FAIL

    @property
    def passed(self) -> bool:
        return self.verdict == PASS

    def rows(self):
        """CSV rows: one per probe point plus a summary row."""
        for p, v in zip(self.points, self.values):
            yield (self.estimate_id, f"{self.parameter}={_fmt(p)}", _fmt(v), "", "")
        yield (self.estimate_id, f"{self.rule}", _fmt(self.statistic), _fmt(self.bound), self.verdict)

    def summary(self) -> str:
        return (f"{self.estimate_id}: {self.rule} statistic={self.statistic:.6g} "
                f"bound={self.bound:.6g} -> {self.verdict}")


def _fmt(x) -> str:
    if isinstance(x, str):
        return x
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".10g")


def fit_loglog_slope(x, y, min_points: int = 4) -> float:
    """Least-squares slope of ``log y`` on ``log x`` over the upper half of ``x``.

    At least ``min_points`` points are used; returns NaN when fewer
    positive samples are available.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    order = np.argsort(x)
    x, y = x[order], y[order]
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    x, y = x[keep], y[keep]
    if x.size < min_points:
        return float("nan")
    take = max(min_points, math.ceil(x.size / 2))
    lx, ly = np.log(x[-take:]), np.log(y[-take:])
    return float(np.polyfit(lx, ly, 1)[0])


def relative_range(values) -> float:
    v = np.asarray(values, dtype=float)
    med = np.median(v)
    if med == 0:
        return float("inf") if np.ptp(v) > 0 else 0.0
    return float(np.ptp(v) / abs(med))


def stable(values, tol: float = STABLE_RANGE) -> bool:
    """Range within ``tol`` of the median."""
    return relative_range(values) <= tol


def min_growth(values) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2 or np.any(v[:-1] <= 0):
        return float("nan")
    return float(np.min(v[1:] / v[:-1]))


def grows(values, factor: float = GROWTH_FACTOR) -> bool:
    """Every successive ratio is at least ``factor``."""
    g = min_growth(values)
    return bool(np.isfinite(g) and g >= factor)


# ---------------------------------------------------------------------------
# gradients


def _cell_gradients(u: ScalarField):
    quad = gradient_quadrature(u.grid)
    g = quad.gradients(u.values)
    mag = np.sqrt(np.sum(g * g, axis=-1)) if g.ndim > 1 else np.abs(g)
    return quad, mag


def atom_collar(grid: Grid, mu: RadonMeasure, n: float = math.inf, width: float | None = None) -> np.ndarray:
    """Nodes within the mollifier support plus ``2h`` of any atom."""
    mask = np.zeros(grid.n_nodes, dtype=bool)
    if not mu.atoms:
        return mask
    rad = (mollifier_radius(grid, n) + 2 * grid.h) if width is None else width
    for loc, _ in mu.atoms:
        if grid.is_radial:
            mask |= grid.coords <= rad + 1e-12
        else:
            d = np.hypot(grid.coords[:, 0] - loc[0], grid.coords[:, 1] - loc[1])
            mask |= d <= rad + 1e-12
    return mask


def sobolev_seminorm(u: ScalarField, q: float, region=None, modular: bool = False) -> float:
    """Discrete ``(int_region |grad u|^q)^(1/q)`` from cell gradients.

    ``region`` is a node mask; a quadrature cell belongs to it when all its
    nodes do.  With ``modular=True`` the q-th root is not taken.
    """
    if not q >= 1:
        raise ValueError("q must be >= 1")
    quad, mag = _cell_gradients(u)
    cells = np.ones(quad.n_cells, dtype=bool) if region is None else quad.cell_mask(region)
    if not cells.any():
        raise ValueError("empty region")
    total = float(np.sum(quad.weights[cells] * mag[cells] ** q))
    return total if modular else total ** (1.0 / q)


def gradient_quasinorm(u: ScalarField, q: float, levels=None, region=None) -> float:
    """Weak-L^q quasinorm of ``|grad u|`` over quadrature cells."""
    from .measure import dyadic_levels

    quad, mag = _cell_gradients(u)
    cells = np.ones(quad.n_cells, dtype=bool) if region is None else quad.cell_mask(region)
    levels = dyadic_levels() if levels is None else np.asarray(list(levels), dtype=float)
    w, a = quad.weights[cells], mag[cells]
    m = np.array([w[a > t].sum() for t in levels])
    return float(np.max(levels * m ** (1.0 / q)))


# ---------------------------------------------------------------------------
# truncation energies


def dirichlet_energy(u: ScalarField) -> float:
    """Discrete ``int |grad u|^2``."""
    quad, mag = _cell_gradients(u)
    return float(np.sum(quad.weights * mag**2))


def truncation_energy(u: ScalarField, k: float, power: float = 1.0) -> float:
    """Discrete ``int |grad (T_k u)^power|^2``."""
    t, _, _ = apply_truncations(u.values, k)
    t = np.maximum(t, 0.0) ** power
    quad, mag = _cell_gradients(u.with_values(t))
    return float(np.sum(quad.weights * mag**2))


def truncation_energy_scan(u: ScalarField, gamma: float, k_grid, slack: float = 0.15) -> EstimateReport:
    """Growth rate of ``k -> int |grad T_k u|^2``.

    A field with no gradient gives a degenerate report.  The bound on the
    fitted log-log slope is ``1 + slack`` for
    ``gamma <= 1`` and ``gamma + slack`` otherwise.  For ``gamma > 1`` the
    energies of ``T_k(u)^((gamma+1)/2)`` are stored in ``extra``.
    """
    ks = np.sort(np.asarray(list(k_grid), dtype=float))
    if ks.size == 0 or ks[0] <= 0:
        raise ValueError("k-grid must be nonempty and positive")
    energies = np.array([truncation_energy(u, k) for k in ks])
    flat = not np.any(energies > 0)
    top = float(np.max(u.values))
    if not flat and ks[-1] > top * (1 + 1e-12):
        raise ValueError(f"k-grid must lie in (0, sup u] = (0, {top:.6g}]")
    bound = 1 + slack if gamma <= 1 else gamma + slack
    slope = fit_loglog_slope(ks, energies)
    extra = {}
    if gamma > 1:
        extra["power_energies"] = tuple(truncation_energy(u, k, (gamma + 1) / 2) for k in ks)
    return EstimateReport(
        "truncation-energy", "k", tuple(ks), tuple(energies), slope, bound, "<=",
        note=f"gamma={gamma:g}" + (" (no gradient)" if flat else ""),
        degenerate=flat or not np.isfinite(slope), extra=extra,
    )


# ---------------------------------------------------------------------------
# boundary layer


def boundary_layer(u: ScalarField, eps_grid, factor: float = 0.9) -> EstimateReport:
    """``(1/eps) int_{d < eps} u`` along a decreasing family of widths.

    Passes when each halving of ``eps`` shrinks the average by at least the
    factor ``factor`` (the largest observed ratio is the statistic).
    """
    grid = u.grid
    eps = np.sort(np.asarray(list(eps_grid), dtype=float))[::-1]
    if eps.size < 2:
        raise ValueError("need at least two widths")
    if eps[-1] < 2 * grid.h - 1e-12:
        raise ValueError(f"smallest width {eps[-1]:g} is below 2h = {2 * grid.h:g}")
    vals = np.array([grid.integrate(u.values, grid.interior & (grid.dist < e - 1e-12)) / e for e in eps])
    if np.any(vals <= 0):
        ratio = float("nan")
    else:
        ratio = float(np.max(vals[1:] / vals[:-1]))
    return EstimateReport("boundary-layer", "eps", tuple(eps), tuple(vals), ratio, factor, "<=",
                          degenerate=not np.isfinite(ratio))


# ---------------------------------------------------------------------------
# regularity table


def predicted_exponent(m: float, r: float, gamma: float, N: int) -> tuple:
    """Item and Lebesgue exponent predicted for data ``f in L^m``, ``mu in L^r``.

    Returns ``(item, q)`` with ``q = inf`` for bounded solutions.  A measure
    (``r = 1``) gives ``N/(N-2)``, understood as ``N/(N-2) - eps``.
    """
    if N < 3:
        raise ValueError("exponent predictions need N >= 3")
    if not (m >= 1 and r >= 1 and gamma > 0):
        raise ValueError("need m, r >= 1 and gamma > 0")
    half = N / 2
    if m == half or r == half:
        raise ValueError("borderline summability N/2 is not covered")
    f_exp = math.inf if m > half else N * m * (gamma + 1) / (N - 2 * m)
    mu_exp = math.inf if r > half else N * r / (N - 2 * r)
    item = {(True, True): "i", (False, True): "ii", (True, False): "iii", (False, False): "iv"}[
        (m > half, r > half)
    ]
    return item, min(f_exp, mu_exp)


@dataclass(frozen=True)
class RegularityVerdict:
    """Outcome of a refinement study for power-law data.

    ``below`` holds the L^q norm at ``q_below`` (the sup norm for a bounded
    prediction) and ``above`` the modular ``int |u|^q`` at ``q_above``, one
    value per resolution.  Growth is judged on the modular because the norm
    itself only grows like ``2^(c/q)`` per doubling, far below any fixed
    threshold once ``q`` is large.
    """

    m: float
    r: float
    gamma: float
    N: int
    item: str
    predicted: float
    saturating: bool
    resolutions: tuple
    q_below: float
    q_above: float
    below: tuple
    above: tuple

    @property
    def below_stable(self) -> bool:
        return stable(self.below)

    @property
    def above_grows(self) -> bool | None:
        if not self.above:
            return None
        return grows(self.above)

    @property
    def passed(self) -> bool:
        if not self.below_stable:
            return False
        if self.saturating and self.above:
            return bool(self.above_grows)
        return True

    def report(self) -> EstimateReport:
        vals = self.below + self.above
        pts = tuple(f"below:{r}" for r in self.resolutions) + tuple(f"above:{r}" for r in self.resolutions[: len(self.above)])
        return EstimateReport(
            "regularity-table", "probe", pts, vals,
            float(self.passed), 1.0, ">=",
            note=f"item {self.item} m={self.m:g} r={self.r:g} gamma={self.gamma:g} q={self.predicted:g}",
        )


def regularity_classify(gamma: float, f_power: float, mu_power: float | None = None, N: int = 3,
                        resolutions=(100, 200, 400), probe_offsets=(0.9, 1.1), mu_atom: float = 0.0,
                        params: SolveParams | None = None) -> RegularityVerdict:
    """Refinement study on ``unit-ball-radial(N)`` with power-law data.

    ``f = r^-f_power`` and ``mu = r^-mu_power dx`` (or an atom of mass
    ``mu_atom`` at the origin).  The summabilities are the borderline
    exponents ``m = N/f_power`` and ``r = N/mu_power`` (``r = 1`` for an atom),
    so the data saturate their class and probes above the prediction should
    blow up under refinement while probes below stay bounded.
    """
    if N < 3:
        raise ValueError("regularity tests are only meaningful for N >= 3")
    if (mu_power is None) == (mu_atom <= 0):
        raise ValueError("give exactly one of mu_power or a positive mu_atom")
    params = params or SolveParams()
    f_density = Density("power", c=1.0, s=-f_power)
    m = f_density.summability(N)
    if mu_power is not None:
        mu_density = Density("power", c=1.0, s=-mu_power)
        mu = RadonMeasure(density=mu_density, summability=mu_density.summability(N))
        r = mu_density.summability(N)
    else:
        mu = RadonMeasure.dirac((0.0,), mu_atom)
        r = 1.0
    item, q_pred = predicted_exponent(max(m, 1.0), max(r, 1.0), gamma, N)
    saturating = math.isfinite(q_pred)
    below, above = [], []
    q_lo = q_hi = math.inf
    if saturating:
        q_lo, q_hi = probe_offsets[0] * q_pred, probe_offsets[1] * q_pred
    for res in resolutions:
        grid = build_grid(f"unit-ball-radial({N})", res)
        spec = ProblemSpec(grid, f_density, mu, gamma, n=math.inf)
        u = solve_approximating(spec, params)
        if saturating:
            below.append(lebesgue_norm(u, q_lo))
            above.append(lebesgue_norm(u, q_hi) ** q_hi)
        else:
            below.append(lebesgue_norm(u, math.inf))
    return RegularityVerdict(m, r, gamma, N, item, q_pred, saturating, tuple(resolutions),
                             q_lo, q_hi, tuple(below), tuple(above))


def near_origin_slope(u: ScalarField, r_min: float, r_max: float) -> float:
    """Power-law exponent of a radial profile ``u = C r^a + const`` near 0.

    Fits ``log(u(r) - u(2r))`` against ``log r`` over nodes with
    ``r_min <= r <= r_max``; the difference removes the additive constant, so
    a pure power gives its exponent exactly.
    """
    grid = u.grid
    if not grid.is_radial:
        raise ValueError("near-origin slopes need a radial grid")
    i = np.arange(1, grid.n_nodes // 2 + 1)
    r = grid.coords[i]
    keep = (r >= r_min - 1e-12) & (r <= r_max + 1e-12)
    if keep.sum() < 4:
        raise ValueError("fit window holds fewer than 4 nodes")
    i = i[keep]
    diff = u.values[i] - u.values[2 * i]
    if np.any(diff <= 0):
        raise ValueError("profile is not decreasing on the fit window")
    return float(np.polyfit(np.log(grid.coords[i]), np.log(diff), 1)[0])


# ---------------------------------------------------------------------------
# change of unknown u = v^(1 - eta)


def hopf_lax_transform(u, gamma: float):
    """``v = u^(gamma + 1)``, the inverse of ``u = v^(1 - eta)``, ``eta = gamma/(gamma+1)``."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    vals = u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)
    out = np.maximum(vals, 0.0) ** (gamma + 1)
    return u.with_values(out) if isinstance(u, ScalarField) else out


def _five_point(a, axis, coeffs, scale):
    """Apply a centred five-point stencil along ``axis``; edges become NaN."""
    out = np.full(a.shape, np.nan)
    n = a.shape[axis]
    acc = sum(c * np.take(a, np.arange(2 + k, n - 2 + k), axis=axis)
              for c, k in zip(coeffs, (-2, -1, 0, 1, 2)) if c)
    idx = [slice(None)] * a.ndim
    idx[axis] = slice(2, n - 2)
    out[tuple(idx)] = acc / scale
    return out


def _check_stencil(grid: Grid, u):
    """Fourth-order finite-difference Laplacian and squared gradient.

    Planar: five-point-wide central differences along each axis.  Radial:
    ``u'' + (N-1) u'/r`` with the same one-dimensional stencils.  Entries
    whose stencil leaves the lattice are NaN.  A stencil of higher order
    than the solver's is used so that the residual of a discrete solution
    measures its distance to the continuous equation rather than the check
    stencil's own truncation error.
    """
    h = grid.h

    def d1(a, axis):
        return _five_point(a, axis, (1, -8, 0, 8, -1), 12 * h)

    def d2(a, axis):
        return _five_point(a, axis, (-1, 16, -30, 16, -1), 12 * h * h)

    if grid.is_radial:
        r = grid.coords
        g = d1(u, 0)
        with np.errstate(divide="ignore", invalid="ignore"):
            lap = d2(u, 0) + (grid.dim - 1) * g / r
        return lap, g**2
    U = u.reshape(grid.shape)
    gx, gy = d1(U, 1), d1(U, 0)
    lap = d2(U, 1) + d2(U, 0)
    return lap.ravel(), (gx**2 + gy**2).ravel()


def hopf_lax_check(u: ScalarField, gamma: float, f, mu_n=None, region=None, delta: float = 0.25,
                   shift: float = 0.0, factor: float = 10.0) -> EstimateReport:
    """Compare residuals of the original and the transformed equation.

    With ``s = u + shift`` and ``v = s^(gamma+1)`` the equation
    ``-Lap u = f s^-gamma + mu`` becomes
    ``-Lap v + eta |grad v|^2 / v = f/(1-eta) + mu v^eta/(1-eta)``.
    Both residuals are evaluated with the same finite-difference stencil
    (independent of the solver's) and compared in L1 over ``region``
    (default: ``compact_subset(delta)``).  Passes when the transformed
    residual is at most ``factor`` times the original one.
    """
    grid = u.grid
    eta = gamma / (gamma + 1)
    f_vals = f.values if isinstance(f, ScalarField) else np.broadcast_to(np.asarray(f, dtype=float), (grid.n_nodes,))
    if mu_n is None:
        mu_vals = np.zeros(grid.n_nodes)
    else:
        mu_vals = mu_n.values if isinstance(mu_n, ScalarField) else np.asarray(mu_n, dtype=float)
    nodes = compact_subset(grid, delta) if region is None else np.asarray(region, dtype=bool)
    s = u.values + shift
    if np.any(s[nodes] <= 0):
        raise ValueError("u must be positive on the check region")
    lap_u, _ = _check_stencil(grid, s)
    nodes = nodes & np.isfinite(lap_u)
    if not nodes.any():
        raise ValueError("empty check region")
    v = s ** (gamma + 1)
    lap_v, grad2_v = _check_stencil(grid, v)
    sp_ = np.where(s > 0, s, 1.0)
    res_u = -lap_u - f_vals * sp_**-gamma - mu_vals
    vp = np.where(v > 0, v, 1.0)
    res_v = -lap_v + eta * grad2_v / vp - (f_vals + mu_vals * vp**eta) / (1 - eta)
    w = grid.measure[nodes]
    l1_u = float(np.sum(w * np.abs(res_u[nodes])))
    l1_v = float(np.sum(w * np.abs(res_v[nodes])))
    ratio = l1_v / l1_u if l1_u > 0 else (0.0 if l1_v == 0 else float("inf"))
    return EstimateReport(
        "hopf-lax", "residual", ("original", "transformed"), (l1_u, l1_v), ratio, factor, "<=",
        note=f"gamma={gamma:g} eta={eta:.6g}", extra={"nodes": int(nodes.sum())},
    )


# ---------------------------------------------------------------------------
# residual of the equation written for T_k(u)


def _principal_apply(spec: ProblemSpec, values):
    if spec.leray_lions is not None:
        op = LerayLionsOperator(spec.grid, spec.leray_lions)
    else:
        op = assemble_linear(spec.grid, spec.A)
    return op.apply(values)


def truncation_residual_mass(u: ScalarField, spec: ProblemSpec, k: float, params: SolveParams | None = None,
                             _cache=None) -> float:
    """Positive mass of ``-div a(grad T_k u) - rhs_n * 1{u <= k}``.

    ``rhs_n`` is the regularized right-hand side at ``spec.n``.  The result
    is the sum over interior nodes of the positive part times the cell
    measure.
    """
    if not k > 0:
        raise ValueError("k must be positive")
    params = params or SolveParams()
    grid = spec.grid
    if not u.grid.same_as(grid):
        raise ValueError("u and spec live on different grids")
    if _cache is None:
        _cache = _truncation_context(spec, params)
    rhs = _cache["rhs_of"](u.values)
    t, _, _ = apply_truncations(u.values, k)
    lam = _cache["apply"](t) - rhs * (u.values <= k)
    idx = grid.interior
    return float(np.sum(grid.measure[idx] * np.maximum(lam[idx], 0.0)))


def _truncation_context(spec, params):
    grid = spec.grid
    f_n = truncate_datum(spec.f, spec.n).values
    mu_n = grid.zeros() if spec.mu.is_zero() else mollify(spec.mu, spec.n, grid, params.kernel).values
    if spec.leray_lions is not None:
        op = LerayLionsOperator(grid, spec.leray_lions)
    else:
        op = assemble_linear(grid, spec.A)
    shift = spec.shift

    def rhs_of(vals):
        base = np.maximum(vals, 0.0) + shift
        with np.errstate(divide="ignore"):
            sing = np.where(f_n > 0, f_n / np.where(base > 0, base, 1.0) ** spec.gamma, 0.0)
        return sing + mu_n

    return {"apply": op.apply, "rhs_of": rhs_of}


def truncation_residual_scan(u: ScalarField, spec: ProblemSpec, k_grid, params: SolveParams | None = None,
                             slack: float = 0.2) -> EstimateReport:
    """Decay of the truncation residual mass in ``k``.

    Passes when the fitted log-log slope is at most ``-gamma + slack``.
    """
    params = params or SolveParams()
    ctx = _truncation_context(spec, params)
    ks = np.sort(np.asarray(list(k_grid), dtype=float))
    top = float(np.max(u.values))
    masses = np.array([truncation_residual_mass(u, spec, k, params, ctx) for k in ks])
    slope = fit_loglog_slope(ks, masses)
    return EstimateReport(
        "truncation-residual", "k", tuple(ks), tuple(masses), slope, -spec.gamma + slack, "<=",
        note=f"gamma={spec.gamma:g} sup_u={top:.6g}",
        degenerate=bool(ks[-1] > top) or not np.isfinite(slope),
    )


# ---------------------------------------------------------------------------
# sandwich


def comparison_report(u: ScalarField, v: ScalarField, w: ScalarField, tol: float = 1e-8) -> EstimateReport:
    """Nodal gaps ``v + w - u``, ``u - v`` and ``u - w`` (interior minima).

    Inputs solved at different regularization indices are flagged as not
    comparable (degenerate report).
    """
    grid = u.grid
    if not (v.grid.same_as(grid) and w.grid.same_as(grid)):
        raise ValueError("fields live on different grids")
    ns = {x.meta.get("n") for x in (u, v, w) if x.meta.get("n") is not None}
    comparable = len(ns) <= 1
    idx = grid.interior
    gaps = (
        float(np.min((v.values + w.values - u.values)[idx])),
        float(np.min((u.values - v.values)[idx])),
        float(np.min((u.values - w.values)[idx])),
    )
    return EstimateReport(
        "sandwich", "gap", ("v+w-u", "u-v", "u-w"), gaps, min(gaps), -tol, ">=",
        note="" if comparable else f"non-comparable inputs: n values {sorted(ns)}",
        degenerate=not comparable,
    )


# ---------------------------------------------------------------------------
# output


def reports_to_csv(reports, path=None) -> str:
    """Serialize reports (header ``estimate_id,parameter,value,bound,verdict``)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["estimate_id", "parameter", "value", "bound", "verdict"])
    for rep in reports:
        writer.writerows(rep.rows())
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def plot_report(report: EstimateReport, path) -> None:
    """Log-log SVG plot of a report with numeric probe points."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "singularpde"
    x = np.asarray([p for p in report.points], dtype=float)
    y = np.asarray(report.values, dtype=float)
    fig, ax = plt.subplots(figsize=(4.5, 3.5))
    ax.loglog(x, np.abs(y), "o-")
    ax.set_xlabel(report.parameter)
    ax.set_title(f"{report.estimate_id}: {report.verdict}")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
