"""Command line front end: ``solve``, ``verify <suite>`` and ``sweep``.

Configuration files are ``key = value`` lines grouped under ``[section]``
headers; ``#`` starts a comment.  Unknown sections or keys are errors.
"""

from __future__ import annotations

import argparse
import configparser
import itertools
import logging
import os
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import analysis
from .grid import build_grid, compact_subset
from .measure import RadonMeasure, mollify, parse_atom, parse_expression, read_measure_file
from .operators import LerayLionsSpec, MatrixField, fundamental_exponent
from .solver import (
    ProblemSpec,
    SolveParams,
    SolverError,
    solve_approximating,
    solve_measure_only,
    solve_pure_singular,
    solve_sequence,
)
from .suites import SUITES, run_suite

log = logging.getLogger("singularpde")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _items(s):
    return [t.strip() for t in s.replace(";", ",").split(",") if t.strip()]


def _floats(s):
    return [float(t) for t in _items(s)]


def _ints(s):
    return [int(t) for t in _items(s)]


def _powers(s):
    return [None if t == "atom" else float(t) for t in _items(s)]


SCHEMA = {
    "problem": {
        "domain": (str, "unit-square | unit-disk | unit-ball-radial(N)"),
        "resolution": (int, "cells per unit length (>= 4)"),
        "gamma": (float, "singularity exponent gamma > 0"),
        "n": (float, "regularization index; omit to run the solver schedule; 'inf' allowed"),
        "f": (parse_expression, "datum: constant(c) | power(s[,c]) | indicator(radius[,c])"),
        "measure": (str, "path of a measure file (relative to the config file)"),
        "atoms": (str, "inline atoms 'x,y,mass; x,y,mass' (radial: 'mass')"),
        "density": (parse_expression, "inline absolutely continuous part of mu"),
        "mass": (float, "scale factor applied to mu"),
        "matrix": (_floats, "constant coefficient matrix 'a11,a12,a22'"),
        "p": (float, "Leray-Lions exponent (p-Laplacian); excludes 'matrix'"),
    },
    "solver": {
        "damping": (float, "fixed-point damping in (0, 1]"),
        "tol": (float, "outer tolerance (relative sup-norm change)"),
        "max_iter": (int, "outer iteration cap"),
        "linear_tol": (float, "inner linear tolerance"),
        "schedule": (_ints, "increasing list of regularization indices"),
        "method": (str, "newton | picard"),
        "sequence_tol": (float, "relative L1 change flagging a stabilized sequence"),
        "kernel": (str, "atom mollifier: tent | cell"),
    },
    "analysis": {
        "reports": (_items, "sandwich, truncation-energy, boundary-layer, hopf-lax, truncation-residual"),
        "delta": (float, "distance defining the compact subset (default 0.25)"),
        "k_grid": (_floats, "truncation levels (default: geometric up to sup u)"),
        "eps_grid": (_floats, "boundary-layer widths (default 0.1, 0.05, 0.025, 0.0125)"),
        "q": (float, "gradient exponent for sweep seminorms (default 1.4)"),
    },
    "output": {
        "dir": (str, "output directory (overridden by --out)"),
    },
    "sweep": {
        "gamma": (_floats, "list of gamma values"),
        "p": (_floats, "list of Leray-Lions exponents"),
        "n": (_floats, "list of regularization indices"),
        "resolution": (_ints, "strictly increasing list of resolutions"),
        "mass": (_floats, "list of factors applied to mu"),
        "f_power": (_floats, "regularity table: exponents a of f = r^-a (radial grids)"),
        "mu_power": (_powers, "regularity table: exponents b of mu = r^-b dx ('atom' keeps the point mass)"),
    },
}

REPORTS = ("sandwich", "truncation-energy", "boundary-layer", "hopf-lax", "truncation-residual")
SWEEP_KEYS = ("gamma", "p", "n", "resolution", "mass")
SWEEP_COLUMNS = (
    "estimate_id", "gamma", "p", "n", "resolution", "mass",
    "min_u_compact", "max_u", "energy", "seminorm", "stabilization", "slope", "expected_slope",
)
REGULARITY_KEYS = ("gamma", "f_power", "mu_power")
REGULARITY_COLUMNS = (
    "estimate_id", "gamma", "f_power", "mu_power", "m", "r", "item", "predicted_q",
    "below_range", "above_growth", "verdict",
)


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    analysis: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)
    sweep: dict = field(default_factory=dict)
    base: Path = Path(".")

    def params(self) -> SolveParams:
        kw = dict(self.solver)
        if "schedule" in kw:
            kw["schedule"] = tuple(kw["schedule"])
        return SolveParams(**kw)


def load_config(path) -> RunConfig:
    """Parse and validate a configuration file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {path} not found")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",),
                                       comment_prefixes=("#",), strict=True)
    parser.optionxform = str
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = RunConfig(base=path.parent)
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        out = getattr(cfg, section)
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            conv = SCHEMA[section][key][0]
            try:
                out[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key}: {exc}") from None
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig):
    prob = cfg.problem
    required = ("domain", "gamma") if _is_regularity(cfg) else ("domain", "resolution", "gamma")
    for key in required:
        if key not in prob and key not in cfg.sweep:
            raise ConfigError(f"[problem] {key} is required")
    if "matrix" in prob and "p" in prob:
        raise ConfigError("[problem] give either matrix or p")
    if "matrix" in prob and len(prob["matrix"]) != 3:
        raise ConfigError("[problem] matrix needs three entries a11,a12,a22")
    if "measure" in prob:
        mpath = cfg.base / prob["measure"]
        if not mpath.is_file():
            raise ConfigError(f"measure file {mpath} not found")
        if "atoms" in prob or "density" in prob:
            raise ConfigError("[problem] measure file excludes inline atoms/density")
    for name in cfg.analysis.get("reports", []):
        if name not in REPORTS:
            raise ConfigError(f"unknown report {name!r}; choose from {', '.join(REPORTS)}")
    res = cfg.sweep.get("resolution")
    if res is not None and any(b <= a for a, b in zip(res, res[1:])):
        raise ConfigError("[sweep] resolution must be strictly increasing")
    for key, vals in cfg.sweep.items():
        if not vals:
            raise ConfigError(f"[sweep] {key} is empty")
    if _is_regularity(cfg):
        if "f_power" not in cfg.sweep:
            raise ConfigError("[sweep] a regularity table needs f_power")
        extra = set(cfg.sweep) - set(REGULARITY_KEYS) - {"resolution"}
        if extra:
            raise ConfigError(f"[sweep] {', '.join(sorted(extra))} cannot be combined with f_power/mu_power")
    try:
        cfg.params()
    except ValueError as exc:
        raise ConfigError(f"[solver] {exc}") from None


# ---------------------------------------------------------------------------
# building problems


def _measure(cfg: RunConfig, mass: float = 1.0) -> RadonMeasure:
    prob = cfg.problem
    if "measure" in prob:
        mu = read_measure_file(cfg.base / prob["measure"])
    else:
        atoms = tuple(parse_atom(a) for a in prob.get("atoms", "").split(";") if a.strip())
        mu = RadonMeasure(atoms, prob.get("density"))
    factor = prob.get("mass", 1.0) * mass
    return mu if factor == 1.0 else mu.scaled(factor)


def build_spec(cfg: RunConfig, **override) -> ProblemSpec:
    prob = {**cfg.problem, **{k: v for k, v in override.items() if v is not None}}
    grid = build_grid(prob["domain"], prob["resolution"])
    f = prob.get("f")
    f_vals = 0.0 if f is None else f
    A = None
    if "matrix" in prob:
        a11, a12, a22 = prob["matrix"]
        A = MatrixField.constant(grid, [[a11, a12], [a12, a22]])
    ll = LerayLionsSpec(prob["p"]) if prob.get("p") is not None else None
    mu = _measure(cfg, override.get("mass") or 1.0)
    return ProblemSpec(grid, f_vals, mu, prob["gamma"], n=prob.get("n", 1), A=A, leray_lions=ll)


def _solve(cfg: RunConfig, spec: ProblemSpec, params: SolveParams, single: bool):
    """Solve at ``spec.n`` or along the schedule; returns (u, spec_at_n, diagnostics)."""
    if single:
        u = solve_approximating(spec, params)
        return u, spec, [(spec.n, u.meta)]
    seq = solve_sequence(spec, params)
    diag = [(e.n, e.diagnostics) for e in seq]
    if seq.l1_differences:
        diag.append(("l1_changes", {"values": seq.l1_differences, "converged": seq.converged}))
    return seq.limit, spec.with_n(seq.ns[-1]), diag


# ---------------------------------------------------------------------------
# output helpers


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return analysis._fmt(x)


def solution_csv(u) -> str:
    grid = u.grid
    lines = ["r,u" if grid.is_radial else "x,y,u"]
    coords = grid.coords.reshape(grid.n_nodes, -1)
    for c, val in zip(coords, u.values):
        lines.append(",".join(_fmt(t) for t in (*c, val)))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# reports for `solve`


def _reports(cfg: RunConfig, u, spec: ProblemSpec, params: SolveParams) -> list:
    names = cfg.analysis.get("reports", [])
    delta = cfg.analysis.get("delta", 0.25)
    out = []
    grid = spec.grid
    top = float(u.values.max())
    for name in names:
        if name == "sandwich":
            v = solve_pure_singular(spec, params)
            w = solve_measure_only(grid, spec.A, spec.mu, params, n=spec.n) if not spec.mu.is_zero() else \
                v.with_values(np.zeros(grid.n_nodes), n=spec.n)
            out.append(analysis.comparison_report(u, v, w))
        elif name == "truncation-energy":
            ks = cfg.analysis.get("k_grid") or list(top * np.geomspace(1 / 64, 1, 9))
            out.append(analysis.truncation_energy_scan(u, spec.gamma, ks))
        elif name == "boundary-layer":
            eps = cfg.analysis.get("eps_grid") or [0.1, 0.05, 0.025, 0.0125]
            out.append(analysis.boundary_layer(u, eps))
        elif name == "hopf-lax":
            if not spec.is_model_case():
                raise ConfigError("hopf-lax report needs A = I and no Leray-Lions exponent")
            mu_n = None if spec.mu.is_zero() else mollify(spec.mu, spec.n, grid, params.kernel)
            region = compact_subset(grid, delta) & ~analysis.atom_collar(grid, spec.mu, spec.n)
            out.append(analysis.hopf_lax_check(u, spec.gamma, spec.f, mu_n, region=region, shift=spec.shift))
        elif name == "truncation-residual":
            ks = cfg.analysis.get("k_grid") or [1.0, 2.0, 4.0, 8.0]
            out.append(analysis.truncation_residual_scan(u, spec, ks, params))
    return out


def cmd_solve(cfg: RunConfig, out: Path, strict: bool, plot: bool) -> int:
    params = cfg.params()
    spec = build_spec(cfg)
    u, spec_n, diag = _solve(cfg, spec, params, single="n" in cfg.problem)
    _atomic_write(out / "solution.csv", solution_csv(u))
    lines = []
    for n, d in diag:
        lines.append(f"n={_fmt(n) if not isinstance(n, str) else n} " +
                     " ".join(f"{k}={_fmt(v) if not isinstance(v, (str, list, bool)) else v}" for k, v in sorted(d.items()) if k != "n"))
    reports = _reports(cfg, u, spec_n, params)
    for rep in reports:
        lines.append(rep.summary())
    _atomic_write(out / "diagnostics.log", "\n".join(lines) + "\n")
    if reports:
        _atomic_write(out / "reports.csv", analysis.reports_to_csv(reports))
        if plot:
            for rep in reports:
                if all(isinstance(p, (int, float, np.floating)) for p in rep.points):
                    analysis.plot_report(rep, out / f"{rep.estimate_id}.svg")
    for rep in reports:
        print(rep.summary())
    print(f"solution written to {out / 'solution.csv'}")
    failed = [r for r in reports if r.verdict == analysis.FAIL]
    return EXIT_FAIL if strict and failed else EXIT_OK


# ---------------------------------------------------------------------------
# verify


def cmd_verify(suites, out: Path | None, plot: bool) -> int:
    ok = True
    for name in suites:
        res = run_suite(name)
        print(res.headline())
        for line in res.lines():
            print(line)
        ok &= res.passed
        if out is not None:
            _atomic_write(out / f"{name}.csv", analysis.reports_to_csv(res.all_reports()))
            if plot:
                for i, rep in enumerate(res.reports):
                    if rep.points and all(isinstance(p, (int, float, np.floating)) for p in rep.points):
                        analysis.plot_report(rep, out / f"{name}-{i}.svg")
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# sweep


def _is_regularity(cfg: RunConfig) -> bool:
    return "f_power" in cfg.sweep or "mu_power" in cfg.sweep


def sweep_points(cfg: RunConfig) -> list:
    keys = REGULARITY_KEYS if _is_regularity(cfg) else SWEEP_KEYS
    axes = [(k, cfg.sweep[k]) for k in keys if k in cfg.sweep]
    if not axes:
        raise ConfigError("[sweep] section has no parameter lists")
    return [dict(zip([k for k, _ in axes], combo)) for combo in itertools.product(*(v for _, v in axes))]


def sweep_row(cfg: RunConfig, point: dict) -> dict:
    params = cfg.params()
    over = dict(point)
    if "n" not in over and "n" not in cfg.problem:
        over["n"] = params.schedule[-1]
    spec = build_spec(cfg, **over)
    grid = spec.grid
    u = solve_approximating(spec, params)
    n4 = spec.n * 4
    u4 = solve_approximating(spec.with_n(n4), params, initial=u)
    stab = grid.integrate(np.abs(u4.values - u.values)) / max(u4.integral(), 1e-300)
    delta = cfg.analysis.get("delta", 0.25)
    region = compact_subset(grid, delta) & ~analysis.atom_collar(grid, spec.mu, spec.n)
    q = cfg.analysis.get("q", 1.4)
    energy = analysis.dirichlet_energy(u)
    slope = expected = None
    if grid.is_radial and spec.mu.atoms and not np.any(spec.f.values > 0):
        p = spec.leray_lions.p if spec.leray_lions else 2.0
        slope = analysis.near_origin_slope(u, 8 * grid.h, 0.25)
        expected = fundamental_exponent(p, grid.dim)
    return {
        "estimate_id": "sweep",
        "gamma": spec.gamma,
        "p": spec.leray_lions.p if spec.leray_lions else None,
        "n": spec.n,
        "resolution": grid.resolution,
        "mass": point.get("mass", 1.0) * cfg.problem.get("mass", 1.0),
        "min_u_compact": float(u.values[compact_subset(grid, delta)].min()),
        "max_u": float(u.values.max()),
        "energy": energy,
        "seminorm": analysis.sobolev_seminorm(u, q, region),
        "stabilization": stab,
        "slope": slope,
        "expected_slope": expected,
    }


def regularity_row(cfg: RunConfig, point: dict) -> dict:
    """One verdict row of a regularity table on ``cfg``'s radial domain."""
    grid = build_grid(cfg.problem["domain"], 4)
    if not grid.is_radial:
        raise ConfigError("regularity tables need a unit-ball-radial(N) domain")
    gamma = point.get("gamma", cfg.problem.get("gamma"))
    mu_power = point.get("mu_power")
    resolutions = cfg.sweep.get("resolution", [100, 200, 400])
    v = analysis.regularity_classify(
        gamma, point["f_power"], mu_power, N=grid.dim, resolutions=tuple(resolutions),
        mu_atom=0.0 if mu_power is not None else cfg.problem.get("mass", 1.0), params=cfg.params())
    return {
        "estimate_id": "regularity-table",
        "gamma": gamma,
        "f_power": point["f_power"],
        "mu_power": "atom" if mu_power is None else mu_power,
        "m": v.m,
        "r": v.r,
        "item": v.item,
        "predicted_q": v.predicted,
        "below_range": analysis.relative_range(v.below),
        "above_growth": analysis.min_growth(v.above) if v.above else None,
        "verdict": analysis.PASS if v.passed else analysis.FAIL,
    }


def sweep_csv(rows, columns=SWEEP_COLUMNS) -> str:
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(row[c] if isinstance(row[c], str) else _fmt(row[c]) for c in columns))
    return "\n".join(lines) + "\n"


def cmd_sweep(cfg: RunConfig, out: Path, threads: int) -> int:
    points = sweep_points(cfg)
    regularity = _is_regularity(cfg)
    row_of = regularity_row if regularity else sweep_row
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda pt: row_of(cfg, pt), points))
    else:
        rows = [row_of(cfg, pt) for pt in points]
    text = sweep_csv(rows, REGULARITY_COLUMNS if regularity else SWEEP_COLUMNS)
    _atomic_write(out / "sweep.csv", text)
    sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def _config_help() -> str:
    lines = ["configuration keys:"]
    for section, keys in SCHEMA.items():
        lines.append(f"  [{section}]")
        for key, (_, text) in keys.items():
            lines.append(f"    {key:<13} {text}")
    lines.append("measure files: 'atom = x,y,mass' (repeatable), 'density = <expr>', 'r = <summability>'")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singularpde",
        description="Solve singular elliptic problems with measure data and check their estimates.",
        epilog=_config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--strict", action="store_true", help="exit nonzero when any report fails")
    common.add_argument("--plot", action="store_true", help="also write SVG log-log plots")
    common.add_argument("--threads", type=int, default=1, help="worker threads for sweeps")
    sub = parser.add_subparsers(dest="command", required=True)
    p_solve = sub.add_parser("solve", parents=[common], help="solve one problem and write reports")
    p_solve.add_argument("--config", type=Path, required=True)
    p_verify = sub.add_parser("verify", parents=[common], help="run a named verification suite")
    p_verify.add_argument("suite", choices=[*SUITES, "all"])
    p_sweep = sub.add_parser("sweep", parents=[common], help="tabulate summaries over a parameter grid")
    p_sweep.add_argument("--config", type=Path, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        if args.command == "verify":
            suites = list(SUITES) if args.suite == "all" else [args.suite]
            return cmd_verify(suites, args.out, args.plot)
        cfg = load_config(args.config)
        out = args.out or Path(cfg.output.get("dir", "out"))
        if not out.is_absolute() and args.out is None:
            out = cfg.base / out
        if args.command == "solve":
            return cmd_solve(cfg, out, args.strict, args.plot)
        return cmd_sweep(cfg, out, args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
