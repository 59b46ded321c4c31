"""Named verification suites shared by the CLI and the acceptance tests.

Each suite builds its problems from scratch, runs them and returns a
:class:`SuiteResult` whose checks are :class:`EstimateReport` objects, so
verdicts are recomputed from stored numbers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (
    EstimateReport,
    boundary_layer,
    comparison_report,
    fit_loglog_slope,
    hopf_lax_check,
    min_growth,
    near_origin_slope,
    regularity_classify,
    relative_range,
    sobolev_seminorm,
    truncation_energy_scan,
    truncation_residual_scan,
    STABLE_RANGE,
    GROWTH_FACTOR,
)
from .grid import build_grid, compact_subset
from .measure import RadonMeasure, marcinkiewicz_quasinorm, mollify
from .operators import LerayLionsSpec, fundamental_exponent
from .solver import (
    ProblemSpec,
    SolveParams,
    solve_approximating,
    solve_measure_only,
    solve_pure_singular,
    solve_sequence,
    sub_supersolution_iterate,
)

__all__ = ["SuiteResult", "SUITES", "run_suite", "suite_names", "check"]

RADIAL3 = "unit-ball-radial(3)"


def check(suite: str, label: str, value: float, rule: str, bound: float, note: str = "") -> EstimateReport:
    """A single scalar check recorded as an estimate report."""
    return EstimateReport(suite, label, (), (), float(value), float(bound), rule, note=note)


@dataclass
class SuiteResult:
    name: str
    criterion: int
    title: str
    checks: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def lines(self) -> list:
        out = []
        for c in self.checks:
            out.append(
                f"  [{c.verdict:<4}] {c.parameter}: {c.statistic:.6g} (required {_rule_text(c.rule)} {c.bound:.6g})"
            )
        for note in self.notes:
            out.append(f"  note: {note}")
        return out

    def headline(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} criterion {self.criterion:>2} [{self.name}] {self.title} ({self.elapsed:.1f}s)"

    def all_reports(self) -> list:
        return list(self.checks) + list(self.reports)


def _rule_text(rule):
    return {"stable": "range <=", "grows": "growth >="}.get(rule, rule)


# ---------------------------------------------------------------------------
# 1


def manufactured(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("manufactured", 1, "manufactured-solution convergence order")
    t0 = time.perf_counter()
    resolutions = (33, 65, 129)
    for gamma in (0.5, 2.0):
        errors = []
        for R in resolutions:
            grid = build_grid("unit-square", R)
            x, y = grid.coords.T
            exact = np.where(grid.interior, np.sin(np.pi * x) * np.sin(np.pi * y), 0.0)
            f = 2 * np.pi**2 * exact ** (1 + gamma)
            u = solve_approximating(ProblemSpec(grid, f, RadonMeasure.zero(), gamma, n=1e6), params)
            errors.append(float(np.max(np.abs(u.values - exact))))
        hs = [1.0 / R for R in resolutions]
        order = min(math.log(errors[i] / errors[i + 1]) / math.log(hs[i] / hs[i + 1]) for i in range(2))
        res.reports.append(EstimateReport("manufactured", "h", tuple(hs), tuple(errors), order, 1.8, ">=",
                                          note=f"gamma={gamma:g}"))
        res.checks.append(check("manufactured", f"order gamma={gamma:g}", order, ">=", 1.8))
    res.elapsed = time.perf_counter() - t0
    res.checks.append(check("manufactured", "runtime seconds", res.elapsed, "<=", 120.0))
    return res


# ---------------------------------------------------------------------------
# 2


def green_function(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("green-function", 2, "radial Green function value at r = 1/2")
    t0 = time.perf_counter()
    grid = build_grid(RADIAL3, 400)
    w = solve_measure_only(grid, None, RadonMeasure.dirac((0.0,), 1.0), params, n=math.inf)
    i = int(np.argmin(np.abs(grid.coords - 0.5)))
    exact = 1.0 / (4 * math.pi)
    err = abs(w.values[i] - exact) / exact
    res.checks.append(check("green-function", "relative error of w(0.5)", err, "<=", 0.02,
                            note=f"w(0.5)={w.values[i]:.8g} exact={exact:.8g}"))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 3, 4, 11 share the disk problem


def _disk_problem(n=256, gamma=0.5, resolution=64):
    grid = build_grid("unit-disk", resolution)
    return ProblemSpec(grid, 1.0, RadonMeasure.dirac((0.0, 0.0), 1.0), gamma, n=n)


def sandwich(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("sandwich", 3, "max(v, w) <= u <= v + w on the disk")
    t0 = time.perf_counter()
    spec = _disk_problem()
    u = solve_approximating(spec, params)
    v = solve_pure_singular(spec, params)
    w = solve_measure_only(spec.grid, None, spec.mu, params, n=spec.n)
    rep = comparison_report(u, v, w)
    res.reports.append(rep)
    for label, gap in zip(rep.points, rep.values):
        res.checks.append(check("sandwich", f"min({label})", gap, ">=", -1e-8))
    res.elapsed = time.perf_counter() - t0
    return res


def lower_bound(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("lower-bound", 4, "uniform positive lower bound on a compact subset")
    t0 = time.perf_counter()
    spec = _disk_problem()
    omega = compact_subset(spec.grid, 0.25)
    v1 = solve_pure_singular(spec.with_n(1), params)
    floor = float(v1.values[omega].min())
    seq = solve_sequence(spec, replace(params, schedule=(4, 16, 64, 256)))
    mins = [float(e.u.values[omega].min()) for e in seq]
    res.reports.append(EstimateReport("lower-bound", "n", tuple(seq.ns), tuple(mins), min(mins) - floor, -1e-8,
                                      ">=", note=f"min v_1 = {floor:.8g}"))
    res.checks.append(check("lower-bound", "min_n min_omega u_n - min_omega v_1", min(mins) - floor, ">=", -1e-8))
    res.checks.append(check("lower-bound", "relative range for n >= 16", relative_range(mins[1:]), "stable",
                            STABLE_RANGE))
    res.elapsed = time.perf_counter() - t0
    return res


def uniqueness(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("uniqueness", 11, "sub- and supersolution starts reach the same solution")
    t0 = time.perf_counter()
    spec = _disk_problem()
    a = sub_supersolution_iterate(spec, params, start="sub")
    b = sub_supersolution_iterate(spec, params, start="super")
    diff = spec.grid.integrate(np.abs(a.values - b.values))
    res.checks.append(check("uniqueness", "L1 distance", diff, "<=", 1e-6,
                            note=f"iterations {a.meta['iterations']}/{b.meta['iterations']}"))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 5


def truncation_energy(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("truncation-energy", 5, "growth of the truncation energies in k")
    t0 = time.perf_counter()
    disk = _disk_problem()
    u = solve_approximating(disk, params)
    top = float(u.values.max())
    rep = truncation_energy_scan(u, 0.5, top * np.geomspace(1 / 64, 1, 9))
    res.reports.append(rep)
    res.checks.append(check("truncation-energy", "slope gamma=0.5 (disk)", rep.statistic, "<=", rep.bound))
    grid = build_grid(RADIAL3, 400)
    for gamma in (0.5, 2.0):
        spec = ProblemSpec(grid, 1.0, RadonMeasure.dirac((0.0,), 1.0), gamma, n=256)
        u = solve_approximating(spec, params)
        top = float(u.values.max())
        rep = truncation_energy_scan(u, gamma, np.geomspace(1.0, top, 9))
        res.reports.append(rep)
        res.checks.append(check("truncation-energy", f"slope gamma={gamma:g} (radial N=3)", rep.statistic, "<=",
                                rep.bound))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 6


def marcinkiewicz(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("marcinkiewicz", 6, "weak-L^q thresholds of the radial Green function")
    t0 = time.perf_counter()
    resolutions = (100, 200, 400)
    quasi, g14, g16, m16 = [], [], [], []
    for R in resolutions:
        grid = build_grid(RADIAL3, R)
        w = solve_measure_only(grid, None, RadonMeasure.dirac((0.0,), 1.0), params, n=math.inf)
        quasi.append(marcinkiewicz_quasinorm(w, 3.0))
        g14.append(sobolev_seminorm(w, 1.4))
        g16.append(sobolev_seminorm(w, 1.6))
        m16.append(sobolev_seminorm(w, 1.6, modular=True))
    res.reports += [
        EstimateReport("marcinkiewicz", "resolution", resolutions, tuple(quasi), relative_range(quasi),
                       STABLE_RANGE, "stable", note="weak-L^3 quasinorm of u"),
        EstimateReport("marcinkiewicz", "resolution", resolutions, tuple(g14), relative_range(g14),
                       STABLE_RANGE, "stable", note="L^1.4 norm of grad u"),
        EstimateReport("marcinkiewicz", "resolution", resolutions, tuple(g16), min_growth(g16),
                       GROWTH_FACTOR, "grows", note="L^1.6 norm of grad u"),
        EstimateReport("marcinkiewicz", "resolution", resolutions, tuple(m16), min_growth(m16),
                       GROWTH_FACTOR, "grows", note="int |grad u|^1.6"),
    ]
    res.checks.append(check("marcinkiewicz", "quasinorm q=3 range", relative_range(quasi), "stable", STABLE_RANGE))
    res.checks.append(check("marcinkiewicz", "grad L^1.4 norm range", relative_range(g14), "stable", STABLE_RANGE))
    res.checks.append(check("marcinkiewicz", "grad L^1.6 norm growth per doubling", min_growth(g16), "grows",
                            GROWTH_FACTOR))
    # the norm of r^-2 in L^1.6 near r = h only grows like 2^(0.2/1.6) per halving of h
    res.notes.append(f"int |grad u|^1.6 grows by {min_growth(m16):.4g} per doubling; "
                     f"continuum rate of the norm is 2^(1/8) = {2 ** 0.125:.4g}")
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 7

REGULARITY_CASES = (
    dict(gamma=1.0, f_power=1.5, mu_power=1.5),
    dict(gamma=1.0, f_power=2.6, mu_power=1.5),
    dict(gamma=2.0, f_power=2.8, mu_power=1.0),
    dict(gamma=1.0, f_power=1.5, mu_power=2.5),
    dict(gamma=0.5, f_power=2.5, mu_power=2.5),
    dict(gamma=0.5, f_power=1.5, mu_atom=10.0),
)


def regularity_table(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("regularity-table", 7, "predicted Lebesgue exponents for power-law data")
    t0 = time.perf_counter()
    items = set()
    for case in REGULARITY_CASES:
        v = regularity_classify(params=params, **case)
        items.add(v.item)
        rep = v.report()
        res.reports.append(rep)
        tag = f"item {v.item} m={v.m:.4g} r={v.r:.4g} gamma={v.gamma:g} q={v.predicted:.4g}"
        res.checks.append(check("regularity-table", f"{tag} below-probe range", relative_range(v.below), "stable",
                                STABLE_RANGE))
        if v.above:
            res.checks.append(check("regularity-table", f"{tag} above-probe growth", min_growth(v.above), "grows",
                                    GROWTH_FACTOR))
    res.checks.append(check("regularity-table", "distinct items covered", len(items), ">=", 4))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 8


def hopf_lax(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("hopf-lax", 8, "residual of the transformed equation")
    t0 = time.perf_counter()
    grid = build_grid("unit-square", 64)
    x, y = grid.coords.T
    exact = np.where(grid.interior, np.sin(np.pi * x) * np.sin(np.pi * y), 0.0)
    n = 1e6
    for gamma in (0.5, 1.0):
        f = 2 * np.pi**2 * exact ** (1 + gamma)
        u = solve_approximating(ProblemSpec(grid, f, RadonMeasure.zero(), gamma, n=n), params)
        rep = hopf_lax_check(u, gamma, f, shift=1.0 / n)
        res.reports.append(rep)
        res.checks.append(check("hopf-lax", f"residual ratio gamma={gamma:g}", rep.statistic, "<=", rep.bound))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 9


def p_laplacian(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("p-laplacian", 9, "fundamental exponent of the radial p-Laplacian")
    t0 = time.perf_counter()
    grid = build_grid(RADIAL3, 400)
    atom = RadonMeasure.dirac((0.0,), 1.0)
    for p in (1.8, 2.5):
        spec = ProblemSpec(grid, 0.0, atom, 1.0, n=math.inf, leray_lions=LerayLionsSpec(p))
        u = solve_approximating(spec, params)
        slope = near_origin_slope(u, 8 * grid.h, 0.25)
        target = fundamental_exponent(p, 3)
        res.checks.append(check("p-laplacian", f"slope error p={p:g}", abs(slope / target - 1), "<=", 0.05,
                                note=f"slope={slope:.6g} expected={target:.6g}"))
    spec = ProblemSpec(grid, 0.0, atom, 1.0, n=math.inf)
    a = solve_approximating(spec, params)
    b = solve_approximating(ProblemSpec(grid, 0.0, atom, 1.0, n=math.inf, leray_lions=LerayLionsSpec(2.0)), params)
    res.checks.append(check("p-laplacian", "p=2 vs linear sup difference", np.max(np.abs(a.values - b.values)),
                            "<=", 1e-8))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 10


def boundary_layer_suite(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("boundary-layer", 10, "vanishing boundary average for gamma = 3")
    t0 = time.perf_counter()
    grid = build_grid(RADIAL3, 400)
    spec = ProblemSpec(grid, 1.0, RadonMeasure.dirac((0.0,), 1.0), 3.0, n=1024)
    u = solve_approximating(spec, params)
    rep = boundary_layer(u, [0.1, 0.05, 0.025, 0.0125])
    res.reports.append(rep)
    res.checks.append(check("boundary-layer", "largest ratio per halving", rep.statistic, "<=", rep.bound))
    res.elapsed = time.perf_counter() - t0
    return res


# ---------------------------------------------------------------------------
# 12


def diffuse_residual(params: SolveParams = SolveParams()) -> SuiteResult:
    res = SuiteResult("diffuse-residual", 12, "decay in k of the truncation residual mass")
    t0 = time.perf_counter()
    grid = build_grid(RADIAL3, 400)
    gamma = 2.0
    spec = ProblemSpec(grid, 1.0, RadonMeasure.dirac((0.0,), 1.0), gamma, n=256)
    u = solve_approximating(spec, params)
    ks = (1.0, 2.0, 4.0, 8.0)
    rep = truncation_residual_scan(u, spec, ks, params)
    res.reports.append(rep)
    res.checks.append(check("diffuse-residual", "fitted slope", rep.statistic, "<=", rep.bound))
    # mass carried above level k by the mollified atom, for the record
    mu_n = mollify(spec.mu, spec.n, grid, params.kernel).values
    excess = [m - grid.integrate(mu_n * (u.values > k)) for m, k in zip(rep.values, ks)]
    res.notes.append("masses " + ", ".join(f"{m:.6g}" for m in rep.values))
    res.notes.append("masses minus mu_n({u > k}) " + ", ".join(f"{e:.3g}" for e in excess)
                     + f"; slope {fit_loglog_slope(ks, excess):.3g}")
    res.elapsed = time.perf_counter() - t0
    return res


SUITES = {
    "manufactured": manufactured,
    "green-function": green_function,
    "sandwich": sandwich,
    "lower-bound": lower_bound,
    "truncation-energy": truncation_energy,
    "marcinkiewicz": marcinkiewicz,
    "regularity-table": regularity_table,
    "hopf-lax": hopf_lax,
    "p-laplacian": p_laplacian,
    "boundary-layer": boundary_layer_suite,
    "uniqueness": uniqueness,
    "diffuse-residual": diffuse_residual,
}


def suite_names() -> list:
    return list(SUITES)


def run_suite(name: str, params: SolveParams = SolveParams()) -> SuiteResult:
    try:
        fn = SUITES[name]
    except KeyError:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return fn(params)
